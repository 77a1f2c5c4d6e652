#include "mftn/mps.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include <Eigen/SVD>

#include "mftn/linalg.hpp"

namespace mftn {

namespace {

Mat bond_pair(const MFBasis& b, int p_in, int p_out) {
  return linalg::kron(b.elements.at(p_in), b.elements.at(p_out).conjugate());
}

void require_group(const MFBasis& b) {
  if (!b.table) throw Error(ErrorKind::NotGroup, "basis is not a group");
}

bool abelian_quotient(const MFBasis& b) {
  const auto& t = b.group();
  for (int i = 0; i < t.n; ++i)
    for (int j = 0; j < t.n; ++j)
      if (t.prod(i, j) != t.prod(j, i)) return false;
  return true;
}

PauliVector element_pauli(const MFBasis& b, int idx, bool conjugate) {
  const int D = b.dim;
  PauliVector p = PauliVector::identity(1, D);
  p.v[0] = idx % D;
  p.w[0] = idx / D;
  if (conjugate) p.w[0] = (D - p.w[0]) % D;
  return p;
}

PauliVector concat(const std::vector<PauliVector>& parts) {
  PauliVector out;
  out.d = parts.front().d;
  out.n = 0;
  for (const auto& p : parts) {
    out.n += p.n;
    out.v.insert(out.v.end(), p.v.begin(), p.v.end());
    out.w.insert(out.w.end(), p.w.begin(), p.w.end());
    out.phase_exp += p.phase_exp;
  }
  out.normalize();
  return out;
}

PauliVector sub_pauli(const PauliVector& p, int from, int count) {
  PauliVector out = PauliVector::identity(count, p.d);
  for (int j = 0; j < count; ++j) {
    out.v[j] = p.v[from + j];
    out.w[j] = p.w[from + j];
  }
  return out;
}

}  // namespace

void MPSTensor::validate() const {
  if (!basis) throw Error(ErrorKind::InvalidArgument, "MPS tensor has no basis");
  if (tensor.rank() != 3 || !tensor.has_leg(kLeft) || !tensor.has_leg(kRight) || !tensor.has_leg(kPhys))
    throw Error(ErrorKind::UnknownLeg, "MPS tensor needs legs (left, phys, right)");
  if (tensor.dim(kLeft) != basis->dim || tensor.dim(kRight) != basis->dim)
    throw Error(ErrorKind::DimensionMismatch, "virtual dimension does not match the basis dimension");
  for (const auto& c : constraints) {
    if (c.p_in < 0 || c.p_in >= basis->size() || c.p_out < 0 || c.p_out >= basis->size())
      throw Error(ErrorKind::InvalidArgument, "constraint index outside the basis");
    if (c.solve_u) continue;
    if (c.u_phys.rows() != d() || c.u_phys.cols() != d())
      throw Error(ErrorKind::DimensionMismatch, "u_phys does not match the physical dimension");
    if (linalg::unitarity_residual(c.u_phys) > 1e-8 * d()) throw Error(ErrorKind::NotUnitary, "u_phys is not unitary");
  }
}

Mult mps_mult(const std::string& leg) { return leg == kLeft ? Mult::Left : Mult::Right; }

std::vector<DefectRule> mps_rules(const std::vector<SymmetryConstraint>& c) {
  std::vector<DefectRule> rules;
  for (const auto& k : c) rules.push_back(DefectRule{kLeft, k.p_in, k.u_phys, {{kRight, k.p_out}}});
  return rules;
}

PushTable mps_push_table(const MPSTensor& A) {
  require_group(*A.basis);
  return PushTable(*A.basis, kLeft, mps_rules(A.constraints), mps_mult, A.d());
}

Mat mps_matrix(const DenseTensor& A) { return A.matrix({kPhys}, {kLeft, kRight}); }

DenseTensor mps_from_matrix(const Mat& M, int D) {
  return DenseTensor::from_matrix(M, {kPhys}, {static_cast<int>(M.rows())}, {kLeft, kRight}, {D, D})
      .permuted({kLeft, kPhys, kRight});
}

SymmetryReport check_mf_symmetry(const MPSTensor& A, double tol) {
  A.validate();
  SymmetryReport r;
  for (const auto& rule : mps_rules(A.constraints)) {
    const double res = rule_residual(A.tensor, kPhys, rule, *A.basis, mps_mult);
    r.residuals.push_back(res);
    r.max_residual = std::max(r.max_residual, res);
  }
  r.pass = r.max_residual < tol;
  return r;
}

namespace {

Mat constraint_map(const MFBasis& b, const SymmetryConstraint& c, int d) {
  const Mat B = bond_pair(b, c.p_in, c.p_out);
  const int n = d * b.dim * b.dim;
  // vec(U M B) = (B^T (x) U) vec(M), column-major vec.
  return linalg::kron(Mat(B.transpose()), c.u_phys) - Mat::Identity(n, n);
}

DenseTensor tensor_from_vec(const Vec& v, int d, int D) {
  Mat M = Eigen::Map<const Mat>(v.data(), d, D * D);
  return mps_from_matrix(M, D);
}

}  // namespace

FamilyResult solve_symmetry_family(const MFBasis& b, const std::vector<SymmetryConstraint>& c, int d, int D,
                                   double tol) {
  if (b.dim != D) throw Error(ErrorKind::DimensionMismatch, "basis dimension differs from D");
  const int n = d * D * D;
  Mat stacked(0, n);
  for (const auto& k : c) {
    if (k.u_phys.rows() != d || k.u_phys.cols() != d)
      throw Error(ErrorKind::DimensionMismatch, "u_phys does not match the physical dimension");
    const Mat m = constraint_map(b, k, d);
    Mat next(stacked.rows() + n, n);
    next << stacked, m;
    stacked = next;
  }
  const Mat ns = linalg::nullspace(stacked, std::max(tol, 1e-10));
  FamilyResult out;
  out.dimension = static_cast<int>(ns.cols());
  for (Eigen::Index k = 0; k < ns.cols(); ++k) out.tensors.push_back(tensor_from_vec(ns.col(k), d, D));
  return out;
}

AlsResult solve_with_unknown_u(const MFBasis& b, const std::vector<SymmetryConstraint>& c, int d, int D, double tol,
                               int max_iter) {
  if (b.dim != D) throw Error(ErrorKind::DimensionMismatch, "basis dimension differs from D");
  AlsResult out;
  out.constraints = c;
  for (auto& k : out.constraints)
    if (k.solve_u) k.u_phys = d == D * D ? Mat(linalg::kron(Mat(b.elements[k.p_in].adjoint()),
                                                            Mat(b.elements[k.p_out].transpose())))
                                         : Mat(Mat::Identity(d, d));
  const int n = d * D * D;
  Mat M;
  for (out.iterations = 1; out.iterations <= max_iter; ++out.iterations) {
    Mat stacked(0, n);
    for (const auto& k : out.constraints) {
      Mat next(stacked.rows() + n, n);
      next << stacked, constraint_map(b, k, d);
      stacked = next;
    }
    Vec v;
    if (stacked.rows() == 0) {
      v = Vec::Zero(n);
      v(0) = 1;
    } else {
      Eigen::JacobiSVD<Mat> svd(stacked, Eigen::ComputeFullV);
      v = svd.matrixV().col(n - 1);
    }
    M = Eigen::Map<const Mat>(v.data(), d, D * D);
    double worst = 0;
    for (auto& k : out.constraints) {
      const Mat B = bond_pair(b, k.p_in, k.p_out);
      if (k.solve_u) k.u_phys = linalg::nearest_unitary(M * (M * B).adjoint());
      worst = std::max(worst, (k.u_phys * M * B - M).norm() / M.norm());
    }
    out.residual = worst;
    if (worst < tol) {
      out.converged = true;
      break;
    }
  }
  out.iterations = std::min(out.iterations, max_iter);
  out.tensor = mps_from_matrix(M, D);
  for (auto& k : out.constraints) k.solve_u = false;
  return out;
}

CanonicalReport canonical_form_check(const MPSTensor& A, double tol) {
  const Mat T = A.tensor.matrix({kLeft}, {kPhys, kRight});
  const Mat C = T * T.adjoint();
  CanonicalReport r;
  r.residual = linalg::identity_residual(C, &r.constant);
  r.pass = r.residual < tol && std::abs(r.constant) > 0;
  return r;
}

PolarSplit split_polar(const MPSTensor& A, double tol) {
  const Mat M = mps_matrix(A.tensor);
  const auto p = linalg::polar(M, tol);
  PolarSplit s;
  s.V = p.V;
  s.Q = p.Q;
  s.R = p.R;
  s.rank_q = linalg::numerical_rank(p.Q, tol);
  s.rank_v = linalg::numerical_rank(p.V, tol);
  const Mat proj_q = p.Q * linalg::pinv(p.Q, tol);
  s.null_equal = s.rank_q == s.rank_v && (p.V - p.V * proj_q).norm() < 1e-8 * std::max(1.0, p.V.norm());
  s.injective = s.rank_q == A.D() * A.D();
  s.reconstruction_residual = (M - p.V * p.Q).norm() / std::max(M.norm(), 1e-300);
  const double nq = std::max(p.Q.norm(), 1e-300);
  for (const auto& c : A.constraints) {
    const Mat B = bond_pair(*A.basis, c.p_in, c.p_out);
    s.commutator_residuals.push_back((p.Q * B - B * p.Q).norm() / nq);
  }
  const double worst = s.commutator_residuals.empty()
                           ? 0.0
                           : *std::max_element(s.commutator_residuals.begin(), s.commutator_residuals.end());
  s.pass = s.null_equal && s.reconstruction_residual < tol && worst < tol;
  return s;
}

CorrectionReport correction_consistency(const MPSTensor& A, const PolarSplit& s, double tol) {
  CorrectionReport r;
  const int n = A.D() * A.D();
  r.pass = true;
  for (const auto& c : A.constraints) {
    const Mat G = linalg::kron(Mat(A.basis->elements[c.p_in].adjoint()), Mat(A.basis->elements[c.p_out].transpose()));
    const Mat lhs = s.V.adjoint() * c.u_phys * s.V;
    r.residuals.push_back((lhs - G * s.R).norm());
    r.null_discrepancy.push_back((G * (Mat::Identity(n, n) - s.R)).norm());
    if (r.residuals.back() >= tol) r.pass = false;
  }
  return r;
}

Mat sideways(const Mat& Q, int D) {
  Mat V(D * D * D, D);
  for (int a = 0; a < D; ++a)
    for (int b = 0; b < D; ++b)
      for (int r = 0; r < D; ++r)
        for (int l = 0; l < D; ++l) V((a * D + b) * D + r, l) = Q(a * D + b, l * D + r);
  return V;
}

CliffordMagicForm clifford_form_of(const Mat& Q, const MFBasis& b, const PushTable& push) {
  if (!b.weyl_heisenberg) throw Error(ErrorKind::InvalidBasis, "Clifford form needs a Weyl-Heisenberg basis");
  const int D = b.dim;
  if (!is_prime(D)) throw Error(ErrorKind::NonPrime, "Clifford synthesis needs prime D");
  PartialCliffordMap map;
  map.n = 3;
  map.d = D;
  for (int src : {1, D}) {  // X, Z
    const auto& e = push.entry(src);
    if (!e) throw Error(ErrorKind::SymmetryFailure, "no push rule for generator " + b.labels[src]);
    int h = b.identity_index();
    for (const auto& o : e->outs)
      if (o.first == kRight) h = o.second;
    map.add(2, src == 1 ? 'X' : 'Z',
            concat({element_pauli(b, src, false), element_pauli(b, h, true), element_pauli(b, h, false)}));
  }
  CliffordMagicForm f;
  f.U_C = synthesize_clifford(map);
  const Mat V = sideways(Q, D);
  const Mat W = f.U_C.adjoint() * V;
  Vec x = Vec::Zero(D * D);
  for (int ab = 0; ab < D * D; ++ab)
    for (int l = 0; l < D; ++l) x(ab) += W(ab * D + l, l);
  const Vec psi_raw = x / static_cast<double>(D);
  f.scale = psi_raw.norm();
  if (f.scale == 0) throw Error(ErrorKind::SymmetryFailure, "sideways isometry vanishes");
  f.psi = psi_raw / f.scale;
  const Mat recon = f.scale * f.U_C * linalg::kron(Mat(f.psi), Mat::Identity(D, D));
  f.residual = (V - recon).norm() / V.norm();
  f.is_clifford = is_clifford(f.U_C, 3, D);
  f.stabilizer = is_stabilizer_state(f.psi, 2, D);
  return f;
}

CliffordMagicForm clifford_magic_decompose(const PolarSplit& split, const MPSTensor& A) {
  return clifford_form_of(split.Q, *A.basis, mps_push_table(A));
}

MPSTensor q_form_tensor(BasisPtr b, const Mat& Q, const std::vector<std::pair<int, int>>& map) {
  const int D = b->dim;
  if (Q.rows() != D * D || Q.cols() != D * D) throw Error(ErrorKind::DimensionMismatch, "Q must be D^2 x D^2");
  MPSTensor A;
  A.basis = b;
  A.tensor = mps_from_matrix(Q, D);
  for (const auto& [p, q] : map)
    A.constraints.push_back(
        {p, linalg::kron(Mat(b->elements[p].adjoint()), Mat(b->elements[q].transpose())), q, false});
  return A;
}

MPSTensor spt_solution(BasisPtr b, const std::vector<cplx>& alpha) {
  require_group(*b);
  if (!abelian_quotient(*b)) throw Error(ErrorKind::NotGroup, "SPT solution needs an abelian group basis");
  if (static_cast<int>(alpha.size()) != b->size()) throw Error(ErrorKind::DimensionMismatch, "alpha must have D^2 entries");
  if (std::all_of(alpha.begin(), alpha.end(), [](cplx a) { return std::abs(a) == 0; }))
    throw Error(ErrorKind::InvalidArgument, "alpha must be nonzero");
  const int D = b->dim;
  Mat Q = Mat::Zero(D * D, D * D);
  std::vector<std::pair<int, int>> map;
  for (int i = 0; i < b->size(); ++i) {
    Q += alpha[i] * linalg::kron(Mat(b->elements[i].adjoint()), Mat(b->elements[i].transpose()));
    map.emplace_back(i, i);
  }
  return q_form_tensor(b, Q, map);
}

namespace {

// Chain g through k copies: returns (U on d^k, output element) when every step is covered.
std::optional<std::pair<Mat, int>> push_chain(const PushTable& t, int g, int k) {
  std::vector<Mat> us;
  int cur = g;
  for (int j = 0; j < k; ++j) {
    const auto& e = t.entry(cur);
    if (!e) return std::nullopt;
    us.push_back(e->u);
    cur = e->outs.empty() ? cur : e->outs.front().second;
  }
  return std::make_pair(linalg::kron(us), cur);
}

}  // namespace

MPSTensor block(const MPSTensor& A, int k) {
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "block size must be positive");
  if (k == 1) return A;
  std::vector<DenseTensor> copies;
  std::vector<std::string> order{kLeft};
  for (int j = 0; j < k; ++j) {
    const std::string l = j == 0 ? kLeft : "b" + std::to_string(j);
    const std::string r = j == k - 1 ? kRight : "b" + std::to_string(j + 1);
    const std::string p = "p" + std::to_string(j);
    copies.push_back(A.tensor.relabeled({{kLeft, l}, {kRight, r}, {kPhys, p}}));
    order.push_back(p);
  }
  order.push_back(kRight);
  const DenseTensor net = contract_network(copies).permuted(order);
  int dk = 1;
  for (int j = 0; j < k; ++j) dk *= A.d();
  MPSTensor out;
  out.basis = A.basis;
  out.tensor = DenseTensor({kLeft, kPhys, kRight}, {A.D(), dk, A.D()}, net.data());
  const PushTable t = mps_push_table(A);
  for (int g = 0; g < A.basis->size(); ++g) {
    auto ch = push_chain(t, g, k);
    if (ch) out.constraints.push_back({g, ch->first, ch->second, false});
  }
  return out;
}

std::vector<int> pushable_image(const MPSTensor& A, int k) {
  const PushTable t = mps_push_table(A);
  std::set<int> img;
  for (int g = 0; g < A.basis->size(); ++g) {
    auto ch = push_chain(t, g, k);
    if (ch) img.insert(ch->second);
  }
  return {img.begin(), img.end()};
}

MapOrder map_order(const MFBasis& b, const std::vector<SymmetryConstraint>& c, bool extend_over_group) {
  MapOrder m;
  if (extend_over_group) {
    std::vector<DefectRule> rules;
    for (const auto& k : c) rules.push_back({kLeft, k.p_in, Mat::Identity(1, 1), {{kRight, k.p_out}}});
    const PushTable t(b, kLeft, rules, mps_mult, 1);
    for (int g : t.covered()) {
      m.domain.push_back(g);
      const auto& outs = t.entry(g)->outs;
      m.image.push_back(outs.empty() ? g : outs.front().second);
    }
  } else {
    std::set<int> seen;
    for (const auto& k : c) {
      if (!seen.insert(k.p_in).second) continue;
      m.domain.push_back(k.p_in);
      m.image.push_back(k.p_out);
    }
  }
  std::set<int> dom(m.domain.begin(), m.domain.end()), img(m.image.begin(), m.image.end());
  m.bijective = img.size() == m.image.size() && img == dom;
  if (m.bijective) {
    std::map<int, int> f;
    for (std::size_t i = 0; i < m.domain.size(); ++i) f[m.domain[i]] = m.image[i];
    long order = 1;
    for (int x : m.domain) {
      int len = 1, y = f[x];
      while (y != x) {
        y = f[y];
        ++len;
      }
      order = std::lcm(order, static_cast<long>(len));
    }
    m.order = static_cast<int>(order);
  }
  return m;
}

Boundary parse_boundary(const std::string& s) {
  if (s == "open") return Boundary::Open;
  if (s == "periodic") return Boundary::Periodic;
  throw Error(ErrorKind::InvalidArgument, "boundary must be open or periodic");
}

DenseTensor mps_state(const std::vector<DenseTensor>& sites, Boundary bc) {
  const int N = static_cast<int>(sites.size());
  if (N == 0) throw Error(ErrorKind::InvalidArgument, "empty chain");
  std::vector<DenseTensor> ts;
  std::vector<std::string> order;
  if (bc == Boundary::Open) order.push_back(kLeft);
  for (int k = 0; k < N; ++k) {
    std::string l = "v" + std::to_string(k), r = "v" + std::to_string(k + 1);
    if (bc == Boundary::Open) {
      if (k == 0) l = kLeft;
      if (k == N - 1) r = kRight;
    } else if (k == N - 1) {
      r = "v0";
    }
    const std::string p = "p" + std::to_string(k);
    if (N == 1 && bc == Boundary::Periodic) {
      const DenseTensor A = sites[0].permuted({kLeft, kPhys, kRight});
      const int D = A.dim(kLeft), d = A.dim(kPhys);
      DenseTensor out({p}, {d});
      for (int s = 0; s < d; ++s)
        for (int x = 0; x < D; ++x) out.at({s}) += A.at({x, s, x});
      return out;
    }
    ts.push_back(sites[k].relabeled({{kLeft, l}, {kRight, r}, {kPhys, p}}));
    order.push_back(p);
  }
  if (bc == Boundary::Open) order.push_back(kRight);
  return contract_network(ts).permuted(order);
}

cplx pauli_expectation_dense(const std::vector<MPSTensor>& family, const std::vector<PauliVector>& paulis,
                             Boundary bc) {
  if (family.size() != paulis.size()) throw Error(ErrorKind::DimensionMismatch, "Pauli string length differs from chain");
  std::vector<DenseTensor> sites;
  for (const auto& s : family) sites.push_back(s.tensor);
  const DenseTensor psi = mps_state(sites, bc);
  DenseTensor out = psi;
  for (std::size_t k = 0; k < paulis.size(); ++k)
    out = apply_on_leg(out, "p" + std::to_string(k), pauli_to_matrix(paulis[k]));
  return inner(psi, out);
}

cplx pauli_expectation(const std::vector<MPSTensor>& family, const std::vector<PauliVector>& paulis, Boundary bc) {
  if (bc != Boundary::Open) throw Error(ErrorKind::InvalidArgument, "sequential evaluation supports open boundary only");
  if (family.empty() || family.size() != paulis.size())
    throw Error(ErrorKind::DimensionMismatch, "Pauli string length differs from chain");
  const auto& b0 = *family.front().basis;
  const int D = b0.dim;
  for (const auto& s : family) {
    if (s.basis->dim != D || s.basis->labels != b0.labels) throw Error(ErrorKind::InvalidBasis, "sites use different bases");
    if (s.d() != D * D) throw Error(ErrorKind::DimensionMismatch, "sequential evaluation needs Q-form sites (d = D^2)");
  }
  for (const auto& p : paulis)
    if (p.n != 2 || p.d != D) throw Error(ErrorKind::DimensionMismatch, "each site takes a two-qudit Pauli");
  PauliVector R = PauliVector::identity(1, D);
  cplx coef = 1.0;
  for (int k = static_cast<int>(family.size()) - 1; k >= 0; --k) {
    const auto form = clifford_form_of(mps_matrix(family[k].tensor), *family[k].basis, mps_push_table(family[k]));
    const Mat op = pauli_to_matrix(concat({paulis[k], R}));
    const auto dec = decompose_pauli(form.U_C.adjoint() * op * form.U_C, 3, D);
    if (!dec) throw Error(ErrorKind::SymmetryFailure, "conjugated string left the Pauli group");
    const Mat tab = pauli_to_matrix(sub_pauli(dec->pauli, 0, 2));
    const cplx ev = form.psi.dot(tab * form.psi);
    coef *= dec->coefficient * form.scale * form.scale * ev;
    R = sub_pauli(dec->pauli, 2, 1);
  }
  return coef * pauli_to_matrix(R).trace();
}

}  // namespace mftn
