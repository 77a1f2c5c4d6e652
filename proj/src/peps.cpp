#include "mftn/peps.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <cstdint>
#include <queue>
#include <set>

#include <Eigen/Eigenvalues>

#include "mftn/linalg.hpp"

namespace mftn {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  if (a > kTwoPi / 2) a -= kTwoPi;
  if (a <= -kTwoPi / 2) a += kTwoPi;
  return a;
}

int leg_slot(const std::string& leg) {
  const auto& legs = peps_virtual_legs();
  const auto it = std::find(legs.begin(), legs.end(), leg);
  if (it == legs.end()) throw Error(ErrorKind::UnknownLeg, "not a PEPS virtual leg: " + leg);
  return static_cast<int>(it - legs.begin());
}

// Column factor of a bond matrix W on a leg: M -> M L.
Mat leg_factor(const std::string& leg, const Mat& W) {
  return peps_mult(leg) == Mult::Left ? Mat(W.transpose()) : W;
}

Mat on_slots(const std::vector<Mat>& per_slot, int D) {
  std::vector<Mat> f;
  for (const auto& m : per_slot) f.push_back(m.size() ? m : Mat::Identity(D, D));
  return linalg::kron(f);
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
  }
  out.normalize();
  return out;
}

Mat topo_term(const MFBasis& b, int i) {
  const Mat& P = b.elements[i];
  const Mat Pd = P.adjoint(), Pt = P.transpose();
  return linalg::kron({Pd, Pt, Pt, Pd});
}

}  // namespace

const std::vector<std::string>& peps_virtual_legs() {
  static const std::vector<std::string> legs{kLeft, kUp, kRight, kDown};
  return legs;
}

Mult peps_mult(const std::string& leg) { return leg == kLeft || leg == kDown ? Mult::Left : Mult::Right; }

void PEPSTensor::validate() const {
  if (!basis) throw Error(ErrorKind::InvalidArgument, "PEPS tensor has no basis");
  if (tensor.rank() != 5 || !tensor.has_leg(kPhys))
    throw Error(ErrorKind::UnknownLeg, "PEPS tensor needs legs (left, up, right, down, phys)");
  for (const auto& l : peps_virtual_legs()) {
    if (!tensor.has_leg(l)) throw Error(ErrorKind::UnknownLeg, "PEPS tensor is missing leg " + l);
    if (tensor.dim(l) != basis->dim)
      throw Error(ErrorKind::DimensionMismatch, "virtual dimension does not match the basis dimension");
  }
  for (const auto& r : rules) {
    leg_slot(r.src);
    if (r.g < 0 || r.g >= basis->size()) throw Error(ErrorKind::InvalidArgument, "rule index outside the basis");
    if (r.u.rows() != d() || r.u.cols() != d())
      throw Error(ErrorKind::DimensionMismatch, "rule unitary does not match the physical dimension");
    for (const auto& [leg, h] : r.outs) {
      leg_slot(leg);
      if (leg == r.src) throw Error(ErrorKind::InvalidArgument, "rule pushes onto its own source leg");
      if (h < 0 || h >= basis->size()) throw Error(ErrorKind::InvalidArgument, "rule index outside the basis");
    }
  }
}

Mat peps_matrix(const DenseTensor& A) { return A.matrix({kPhys}, {kLeft, kUp, kRight, kDown}); }

DenseTensor peps_from_matrix(const Mat& M, int D) {
  return DenseTensor::from_matrix(M, {kPhys}, {static_cast<int>(M.rows())}, {kLeft, kUp, kRight, kDown},
                                  {D, D, D, D})
      .permuted({kLeft, kUp, kRight, kDown, kPhys});
}

DefectRule peps_rule(const std::string& src, int g, const Mat& u, int p_up, int p_right) {
  if (src != kLeft && src != kDown) throw Error(ErrorKind::InvalidArgument, "constraint source must be left or down");
  return DefectRule{src, g, u, {{kUp, p_up}, {kRight, p_right}}};
}

SymmetryReport check_peps_mf_symmetry(const PEPSTensor& A, double tol) {
  A.validate();
  SymmetryReport r;
  for (const auto& rule : A.rules) {
    const double res = rule_residual(A.tensor, kPhys, rule, *A.basis, peps_mult);
    r.residuals.push_back(res);
    r.max_residual = std::max(r.max_residual, res);
  }
  r.pass = r.max_residual < tol;
  return r;
}

IsometryReport peps_isometry_check(const PEPSTensor& A, double tol) {
  const Mat T = A.tensor.matrix({kLeft, kDown}, {kUp, kRight, kPhys});
  IsometryReport r;
  r.residual = linalg::identity_residual(T * T.adjoint(), &r.constant);
  r.pass = r.residual < tol && std::abs(r.constant) > 0;
  return r;
}

Mat rule_commutant(const MFBasis& b, const DefectRule& r) {
  const int D = b.dim;
  std::vector<Mat> f(4);
  f[leg_slot(r.src)] = linalg::inverse(leg_factor(r.src, b.elements.at(r.g).conjugate()));
  for (const auto& [leg, h] : r.outs) f[leg_slot(leg)] = leg_factor(leg, b.elements.at(h).conjugate());
  return on_slots(f, D);
}

PepsCliffordForm peps_clifford_form(const Mat& Q, const PEPSTensor& A) {
  const MFBasis& b = *A.basis;
  if (!b.weyl_heisenberg) throw Error(ErrorKind::InvalidBasis, "Clifford form needs a Weyl-Heisenberg basis");
  const int D = b.dim;
  if (!is_prime(D)) throw Error(ErrorKind::NonPrime, "Clifford synthesis needs prime D");
  const int D2 = D * D, D4 = D2 * D2;
  if (Q.rows() != D4 || Q.cols() != D4) throw Error(ErrorKind::DimensionMismatch, "Q must be D^4 x D^4");

  const auto tables = build_push_tables(b, A.rules, peps_mult, A.d());
  PartialCliffordMap map;
  map.n = 6;
  map.d = D;
  const int id = b.identity_index();
  for (const std::string& src : {kLeft, kDown}) {
    const PushTable* use = nullptr;
    for (const auto& t : tables) {
      if (t.source() != src || !t.covers(1) || !t.covers(D)) continue;
      bool ok = true;
      for (const auto& l : t.out_legs()) ok = ok && (l == kUp || l == kRight);
      if (ok) {
        use = &t;
        break;
      }
    }
    if (!use) throw Error(ErrorKind::SymmetryFailure, "no push of X and Z from " + src + " to up/right");
    for (int g : {1, D}) {
      int hu = id, hr = id;
      for (const auto& [leg, h] : use->entry(g)->outs) (leg == kUp ? hu : hr) = h;
      const PauliVector P = element_pauli(b, g, false);
      const PauliVector I = PauliVector::identity(1, D);
      const PauliVector tgt =
          concat({src == kLeft ? P : I, element_pauli(b, hu, true), element_pauli(b, hr, true),
                  src == kDown ? P : I, element_pauli(b, hu, false), element_pauli(b, hr, false)});
      map.add(src == kLeft ? 4 : 5, g == 1 ? 'X' : 'Z', tgt);
    }
  }
  PepsCliffordForm f;
  f.U_C = synthesize_clifford(map);
  // V[(p, u, r), (l, dn)] = Q[p, (l, u, r, dn)]
  Mat V(D4 * D2, D2);
  for (int p = 0; p < D4; ++p)
    for (int l = 0; l < D; ++l)
      for (int u = 0; u < D; ++u)
        for (int r = 0; r < D; ++r)
          for (int dn = 0; dn < D; ++dn) V(p * D2 + u * D + r, l * D + dn) = Q(p, ((l * D + u) * D + r) * D + dn);
  const Mat W = f.U_C.adjoint() * V;
  Vec x = Vec::Zero(D4);
  for (int p = 0; p < D4; ++p)
    for (int j = 0; j < D2; ++j) x(p) += W(p * D2 + j, j);
  const Vec raw = x / static_cast<double>(D2);
  f.scale = raw.norm();
  if (f.scale == 0) throw Error(ErrorKind::SymmetryFailure, "sideways isometry vanishes");
  f.psi = raw / f.scale;
  const Mat recon = f.scale * f.U_C * linalg::kron(Mat(f.psi), Mat::Identity(D2, D2));
  f.residual = (V - recon).norm() / V.norm();
  f.is_clifford = is_clifford(f.U_C, 6, D);
  f.stabilizer = is_stabilizer_state(f.psi, 4, D);
  return f;
}

PepsPolarReport peps_split_polar(const PEPSTensor& A, double tol) {
  A.validate();
  const Mat M = peps_matrix(A.tensor);
  const auto p = linalg::polar(M, tol);
  PepsPolarReport s;
  s.V = p.V;
  s.Q = p.Q;
  s.R = p.R;
  s.rank_q = linalg::numerical_rank(p.Q, tol);
  s.rank_v = linalg::numerical_rank(p.V, tol);
  const Mat proj_q = p.Q * linalg::pinv(p.Q, tol);
  s.null_equal = s.rank_q == s.rank_v && (p.V - p.V * proj_q).norm() < 1e-8 * std::max(1.0, p.V.norm());
  s.reconstruction_residual = (M - p.V * p.Q).norm() / std::max(M.norm(), 1e-300);
  const double nq = std::max(p.Q.norm(), 1e-300);
  double worst = 0;
  for (const auto& r : A.rules) {
    const Mat G = rule_commutant(*A.basis, r);
    s.commutator_residuals.push_back((p.Q * G - G * p.Q).norm() / nq);
    worst = std::max(worst, s.commutator_residuals.back());
  }
  s.polar_pass = s.null_equal && s.reconstruction_residual < tol && worst < tol;
  try {
    s.clifford = peps_clifford_form(p.Q, A);
  } catch (const Error& e) {
    s.clifford_error = e.what();
  }
  return s;
}

PEPSTensor topo_solution(BasisPtr b, const std::vector<cplx>& alpha) {
  if (!b->table) throw Error(ErrorKind::NotGroup, "basis is not a group");
  const auto& t = b->group();
  for (int i = 0; i < t.n; ++i)
    for (int j = 0; j < t.n; ++j)
      if (t.prod(i, j) != t.prod(j, i)) throw Error(ErrorKind::NotGroup, "topological solution needs an abelian group");
  if (static_cast<int>(alpha.size()) != b->size()) throw Error(ErrorKind::DimensionMismatch, "alpha must have D^2 entries");
  if (std::all_of(alpha.begin(), alpha.end(), [](cplx a) { return std::abs(a) == 0; }))
    throw Error(ErrorKind::InvalidArgument, "alpha must be nonzero");
  const int D = b->dim;
  Mat Q = Mat::Zero(D * D * D * D, D * D * D * D);
  for (int i = 0; i < b->size(); ++i)
    if (alpha[i] != cplx(0)) Q += alpha[i] * topo_term(*b, i);

  PEPSTensor A;
  A.basis = b;
  A.tensor = peps_from_matrix(Q, D);
  const auto& legs = peps_virtual_legs();
  for (int k : group_generators(*b)) {
    const Mat W = b->elements[k].conjugate();
    for (const auto& a : legs)
      for (const auto& c : legs) {
        if (a == c) continue;
        std::vector<Mat> f(4);
        f[leg_slot(a)] = leg_factor(a, W);
        f[leg_slot(c)] = linalg::inverse(leg_factor(c, W));
        A.rules.push_back(DefectRule{a, k, on_slots(f, D), {{c, k}}});
      }
  }
  return A;
}

std::vector<cplx> topo_alpha(const PEPSTensor& A) {
  const Mat M = peps_matrix(A.tensor);
  const MFBasis& b = *A.basis;
  const int D = b.dim;
  if (M.rows() != M.cols()) throw Error(ErrorKind::DimensionMismatch, "tensor is not in Q form");
  const double norm = std::pow(static_cast<double>(D), 4);
  std::vector<cplx> a(b.size());
  for (int i = 0; i < b.size(); ++i) a[i] = (topo_term(b, i).adjoint() * M).trace() / norm;
  return a;
}

std::vector<cplx> quantum_double_alpha(int D, int charge) {
  std::vector<cplx> a(D * D, 0.0);
  for (int i = 0; i < D; ++i) a[i] = std::polar(1.0, kTwoPi * charge * i / D);
  return a;
}

std::vector<cplx> interpolated_alpha(double a) { return {1.0, 1.0, a, a}; }

bool subgroup_closed(const TopoSymmetrySpec& s) {
  const auto& t = s.basis->group();
  const std::set<int> set(s.subgroup.begin(), s.subgroup.end());
  if (!set.count(s.basis->identity_index())) return false;
  for (int a : s.subgroup)
    for (int b : s.subgroup)
      if (!set.count(t.prod(a, b))) return false;
  return true;
}

int subgroup_exponent(const TopoSymmetrySpec& s) {
  const auto& t = s.basis->group();
  const int id = s.basis->identity_index();
  int n = 1;
  for (int a : s.subgroup) {
    int k = 1, x = a;
    while (x != id) {
      x = t.prod(x, a);
      ++k;
      if (k > t.n) throw Error(ErrorKind::NotGroup, "element order not found");
    }
    n = std::lcm(n, k);
  }
  return n;
}

TopoReport check_topo_symmetry(const PEPSTensor& A, const TopoSymmetrySpec& spec, double tol) {
  const MFBasis& b = *spec.basis;
  const int D = b.dim;
  const Mat Q = peps_matrix(A.tensor);
  const auto alpha = topo_alpha(A);
  const auto& t = b.group();
  TopoReport r;
  r.closed = subgroup_closed(spec);
  r.phi_order_ok = std::abs(wrap_angle(subgroup_exponent(spec) * spec.phi)) < 1e-9;
  std::vector<cplx> chars;
  const double qn = std::max(Q.norm(), 1e-300);
  double amax = 0;
  for (cplx a : alpha) amax = std::max(amax, std::abs(a));
  for (int m : spec.subgroup) {
    const Mat& P = b.elements[m];
    const Mat G = linalg::kron({P, Mat(P.conjugate()), Mat(P.conjugate()), P});
    const Mat QG = Q * G;
    const cplx c = linalg::fit_scale(Q, QG);
    chars.push_back(c / std::abs(c));
    r.phis.push_back(std::arg(c));
    r.tensor_residuals.push_back((Q - chars.back() * QG).norm() / qn);
    double ares = 0;
    for (int j = 0; j < b.size(); ++j) ares = std::max(ares, std::abs(alpha[j] - chars.back() * alpha[t.prod(m, j)]));
    r.alpha_residuals.push_back(ares / std::max(amax, 1e-300));
  }
  r.character_ok = r.closed;
  if (r.closed)
    for (std::size_t i = 0; i < spec.subgroup.size(); ++i)
      for (std::size_t j = 0; j < spec.subgroup.size(); ++j) {
        const int k = t.prod(spec.subgroup[i], spec.subgroup[j]);
        const auto pos = std::find(spec.subgroup.begin(), spec.subgroup.end(), k) - spec.subgroup.begin();
        if (std::abs(chars[i] * chars[j] - chars[pos]) > 1e-8) r.character_ok = false;
      }
  const int id = b.identity_index();
  r.phi_measured = 0;
  for (std::size_t i = 0; i < spec.subgroup.size(); ++i)
    if (spec.subgroup[i] != id) {
      r.phi_measured = r.phis[i];
      break;
    }
  r.phi_matches = std::abs(wrap_angle(r.phi_measured - spec.phi)) < 1e-8;
  const double worst_t = r.tensor_residuals.empty() ? 0 : *std::max_element(r.tensor_residuals.begin(), r.tensor_residuals.end());
  const double worst_a = r.alpha_residuals.empty() ? 0 : *std::max_element(r.alpha_residuals.begin(), r.alpha_residuals.end());
  r.pass = r.closed && r.phi_order_ok && r.character_ok && r.phi_matches && worst_t < tol && worst_a < tol;
  (void)D;
  return r;
}

int degeneracy_of_max(const std::vector<cplx>& values, double rel) {
  double mx = 0;
  for (cplx v : values) mx = std::max(mx, std::abs(v));
  if (mx == 0) return static_cast<int>(values.size());
  int n = 0;
  for (cplx v : values)
    if (std::abs(std::abs(v) - mx) <= rel * mx) ++n;
  return n;
}

TransferSpectrum transfer_spectrum_analytic(const std::vector<cplx>& alpha, const MFBasis& b, int L) {
  if (L < 1) throw Error(ErrorKind::InvalidArgument, "L must be positive");
  if (!b.table) throw Error(ErrorKind::NotGroup, "basis is not a group");
  if (static_cast<int>(alpha.size()) != b.size()) throw Error(ErrorKind::DimensionMismatch, "alpha must have D^2 entries");
  const auto& t = b.group();
  TransferSpectrum s;
  s.L = L;
  for (int i = 0; i < b.size(); ++i) {
    const int inv = b.inverse_index(i);
    cplx e = 0;
    for (int j = 0; j < b.size(); ++j) e += alpha[j] * std::conj(alpha[t.prod(inv, j)]);
    s.e.push_back(e);
    s.t.push_back(std::pow(e, L));
  }
  for (cplx v : s.t) s.sorted_magnitudes.push_back(std::abs(v));
  std::sort(s.sorted_magnitudes.rbegin(), s.sorted_magnitudes.rend());
  s.degeneracy_of_max = degeneracy_of_max(s.t);
  return s;
}

std::vector<cplx> transfer_matrix_brute(const PEPSTensor& A, int L) {
  if (L < 1) throw Error(ErrorKind::InvalidArgument, "L must be positive");
  const int D = A.D();
  const double size = std::pow(static_cast<double>(D), 2 * L);
  if (size > 4096) throw Error(ErrorKind::SizeGuard, "transfer matrix larger than 4096");
  std::vector<DenseTensor> net;
  std::vector<std::string> rows, cols;
  for (int j = 0; j < L; ++j) {
    const std::string s = std::to_string(j), n = std::to_string((j + 1) % L);
    const std::vector<std::pair<std::string, std::string>> ket{
        {kLeft, "a" + s}, {kRight, "b" + s}, {kUp, "u" + s}, {kDown, "d" + s}, {kPhys, "p" + s}};
    const std::vector<std::pair<std::string, std::string>> bra{
        {kLeft, "a" + s + "'"}, {kRight, "b" + s + "'"}, {kUp, "u" + s + "'"}, {kDown, "d" + s + "'"}, {kPhys, "p" + s}};
    net.push_back(A.tensor.relabeled(ket));
    net.push_back(A.tensor.conj().relabeled(bra));
    net.push_back(DenseTensor::from_matrix(Mat::Identity(D, D), {"b" + s}, {D}, {"a" + n}, {D}));
    net.push_back(DenseTensor::from_matrix(Mat::Identity(D, D), {"b" + s + "'"}, {D}, {"a" + n + "'"}, {D}));
    rows.push_back("u" + s);
    rows.push_back("u" + s + "'");
    cols.push_back("d" + s);
    cols.push_back("d" + s + "'");
  }
  const DenseTensor T = contract_network(net);
  const Mat M = T.matrix(rows, cols) / size;
  // M has a large nilpotent part; a direct eigensolve on it is unstable. Factor M = X Y through its
  // numerical range and take the eigenvalues of the small Y X, which are the nonzero ones of M.
  Eigen::ColPivHouseholderQR<Mat> qr(M);
  qr.setThreshold(1e-12);
  const int r = static_cast<int>(qr.rank());
  std::vector<cplx> ev(static_cast<std::size_t>(M.rows()), cplx(0));
  if (r > 0) {
    const Mat X = Mat(qr.householderQ()).leftCols(r);
    const Mat Y = qr.matrixR().topRows(r).triangularView<Eigen::Upper>().toDenseMatrix() *
                  qr.colsPermutation().transpose();
    Eigen::ComplexEigenSolver<Mat> es(Y * X, false);
    for (int i = 0; i < r; ++i) ev[i] = es.eigenvalues()(i);
  }
  std::stable_sort(ev.begin(), ev.end(), [](cplx x, cplx y) { return std::abs(x) > std::abs(y); });
  return ev;
}

DegeneracyReport degeneracy_report(const TopoSymmetrySpec& spec, const std::vector<cplx>& alpha, int L, double tol) {
  DegeneracyReport r;
  r.m = static_cast<int>(spec.subgroup.size());
  if (r.m < 1 || L % r.m != 0) throw Error(ErrorKind::InvalidArgument, "L must be a multiple of the subgroup order");
  const auto s = transfer_spectrum_analytic(alpha, *spec.basis, L);
  double norm2 = 0;
  for (cplx a : alpha) norm2 += std::norm(a);
  r.degeneracy = s.degeneracy_of_max;
  r.max_value = s.sorted_magnitudes.front();
  r.bound = std::pow(norm2, L);
  r.degeneracy_ok = r.degeneracy >= r.m;
  r.max_ok = std::abs(r.max_value - r.bound) <= tol * std::max(1.0, r.bound);
  r.pass = r.degeneracy_ok && r.max_ok;
  return r;
}

InjectivityReport injectivity_check(const PEPSTensor& A, const std::optional<TopoSymmetrySpec>& spec, double tol) {
  const Mat M = peps_matrix(A.tensor);
  InjectivityReport r;
  r.rank = linalg::numerical_rank(M, tol);
  r.full = static_cast<int>(M.cols());
  r.injective = r.rank == r.full;
  r.expect_deficient = spec && spec->subgroup.size() > 1;
  r.pass = !r.expect_deficient || !r.injective;
  return r;
}

int interior_edge_count(int w, int h) { return h * (w - 1) + w * (h - 1); }

bool star_push_obstructed(int w, int h, int edge) {
  const int n = interior_edge_count(w, h);
  if (w < 1 || h < 1 || n > 24) throw Error(ErrorKind::SizeGuard, "patch too large for exhaustive search");
  if (edge < 0 || edge >= n) throw Error(ErrorKind::InvalidArgument, "edge index outside the patch");
  const int hcount = h * (w - 1);
  std::vector<std::uint32_t> stars;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      std::uint32_t m = 0;
      if (x > 0) m |= 1u << (y * (w - 1) + x - 1);
      if (x < w - 1) m |= 1u << (y * (w - 1) + x);
      if (y > 0) m |= 1u << (hcount + (y - 1) * w + x);
      if (y < h - 1) m |= 1u << (hcount + y * w + x);
      stars.push_back(m);
    }
  std::vector<char> seen(std::size_t{1} << n, 0);
  std::queue<std::uint32_t> q;
  const std::uint32_t start = 1u << edge;
  q.push(start);
  seen[start] = 1;
  while (!q.empty()) {
    const std::uint32_t cur = q.front();
    q.pop();
    if (cur == 0) return false;
    for (std::uint32_t s : stars) {
      const std::uint32_t nx = cur ^ s;
      if (!seen[nx]) {
        seen[nx] = 1;
        q.push(nx);
      }
    }
  }
  return true;
}

}  // namespace mftn
