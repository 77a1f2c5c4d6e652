#include "mftn/mpo.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/QR>

#include "mftn/linalg.hpp"

namespace mftn {

namespace {

std::string idx(const std::string& p, int k) { return p + std::to_string(k); }

BasisPtr trivial_basis() {
  static const BasisPtr b = [] {
    MFBasis t;
    t.dim = 1;
    t.elements.push_back(Mat::Ones(1, 1));
    t.labels.push_back("I");
    t.is_group = true;
    t.cocycle = check_group_closure(t);
    t.table = group_table(t);
    return std::make_shared<const MFBasis>(t);
  }();
  return b;
}

DenseTensor ordered(const DenseTensor& O) { return O.permuted({kLeft, kRight, kPhysIn, kPhysOut}); }

Mat measured_bond(const MFBasis& b, int i) { return b.elements.at(i).conjugate() / std::sqrt(static_cast<double>(b.dim)); }

DenseTensor bond_tensor(const Mat& B, const std::string& row, const std::string& col) {
  return DenseTensor::from_matrix(B, {row}, {static_cast<int>(B.rows())}, {col}, {static_cast<int>(B.cols())});
}

// Site k of a chain with separately named bond ends.
DenseTensor chain_site(const MPOTensor& O, int k, int n, bool periodic) {
  return O.tensor.relabeled({{kLeft, (k == 0 && !periodic) ? kLeft : idx("l", k)},
                             {kRight, (k == n - 1 && !periodic) ? kRight : idx("r", k)},
                             {kPhysIn, idx("in", k)},
                             {kPhysOut, idx("out", k)}});
}

void check_chain(const std::vector<MPOTensor>& chain) {
  if (chain.empty()) throw Error(ErrorKind::InvalidArgument, "empty MPO chain");
  if (chain.size() > 6) throw Error(ErrorKind::SizeGuard, "MPO chains are limited to 6 sites");
  for (const auto& o : chain) {
    o.validate();
    if (!o.basis->table) throw Error(ErrorKind::NotGroup, "protocol needs a group basis");
    if (o.D() != chain.front().D()) throw Error(ErrorKind::DimensionMismatch, "adjacent tensors differ in D");
  }
}

std::vector<std::string> output_order(int n, bool periodic) {
  std::vector<std::string> o;
  for (int k = 0; k < n; ++k) o.push_back(idx("out", k));
  if (!periodic) o.push_back(kRight);
  return o;
}

struct Feedback {
  std::vector<Mat> corrections;
  std::optional<Mat> boundary;
  bool corrected = false;
  std::string message;
};

Feedback push_defects(const std::vector<MPOTensor>& chain, bool periodic, const std::vector<int>& outcomes) {
  const int n = static_cast<int>(chain.size());
  const int D = chain.front().D();
  Feedback f;
  for (const auto& o : chain) f.corrections.push_back(Mat::Identity(o.d(), o.d()));
  Mat O = Mat::Identity(D, D);
  for (int k = 0; k + 1 < n; ++k) {
    const MFBasis& b = *chain[k + 1].basis;
    const Mat B = O * b.elements.at(outcomes[k]).conjugate();
    const auto fd = b.find(Mat(B.conjugate()));
    if (!fd) throw Error(ErrorKind::SymmetryFailure, "bond product left the basis at bond " + std::to_string(k));
    if (fd->first == b.identity_index()) {
      O = Mat::Identity(D, D);
      continue;
    }
    const PushTable t(b, kLeft, mps_rules(chain[k + 1].constraints), mpo_mult, chain[k + 1].d());
    const auto& e = t.entry(fd->first);
    if (!e) {
      f.message = "defect " + b.labels[fd->first] + " stuck at site " + std::to_string(k + 1);
      return f;
    }
    f.corrections[k + 1] = e->u.adjoint();
    O = b.elements.at(e->outs.front().second).conjugate();
  }
  if (!periodic) {
    f.boundary = linalg::inverse(Mat(O.transpose()));
    f.corrected = true;
  } else {
    const MFBasis& b = *chain.back().basis;
    const Mat B = O * b.elements.at(outcomes.back()).conjugate();
    f.corrected = linalg::proportional_residual(B, Mat::Identity(D, D)) < 1e-9;
  }
  return f;
}

}  // namespace

void MPOTensor::validate() const {
  if (!basis) throw Error(ErrorKind::InvalidArgument, "MPO tensor has no basis");
  for (const auto& l : {kLeft, kRight, kPhysIn, kPhysOut})
    if (!tensor.has_leg(l)) throw Error(ErrorKind::UnknownLeg, "MPO tensor is missing leg " + l);
  if (tensor.rank() != 4) throw Error(ErrorKind::UnknownLeg, "MPO tensor needs exactly four legs");
  if (tensor.dim(kLeft) != basis->dim || tensor.dim(kRight) != basis->dim)
    throw Error(ErrorKind::DimensionMismatch, "virtual dimension does not match the basis dimension");
  if (tensor.dim(kPhysIn) != tensor.dim(kPhysOut))
    throw Error(ErrorKind::DimensionMismatch, "phys_in and phys_out differ in dimension");
  for (const auto& c : constraints) {
    if (c.p_in < 0 || c.p_in >= basis->size() || c.p_out < 0 || c.p_out >= basis->size())
      throw Error(ErrorKind::InvalidArgument, "constraint index outside the basis");
    if (c.u_phys.rows() != d() || c.u_phys.cols() != d())
      throw Error(ErrorKind::DimensionMismatch, "u_phys does not match the physical dimension");
  }
}

Mult mpo_mult(const std::string& leg) { return leg == kLeft ? Mult::Left : Mult::Right; }

SymmetryReport check_mpo_symmetry(const MPOTensor& O, double tol) {
  O.validate();
  SymmetryReport r;
  for (const auto& rule : mps_rules(O.constraints)) {
    const double res = rule_residual(O.tensor, kPhysOut, rule, *O.basis, mpo_mult);
    r.residuals.push_back(res);
    r.max_residual = std::max(r.max_residual, res);
  }
  r.pass = r.max_residual < tol;
  return r;
}

MpoIsometryReport check_mpo_isometry(const MPOTensor& O, double tol) {
  O.validate();
  const Mat T = O.tensor.matrix({kPhysIn}, {kLeft, kRight, kPhysOut});
  MpoIsometryReport r;
  r.residual = linalg::identity_residual(T * T.adjoint(), &r.constant);
  r.pass = r.residual < tol && std::abs(r.constant) > 0;
  return r;
}

SliceReport mpo_slices(const MPOTensor& O, double tol) {
  O.validate();
  const DenseTensor t = ordered(O.tensor);
  const int d = O.d(), D = O.D();
  SliceReport r;
  for (int a = 0; a < d; ++a) {
    Mat V(d * D, D);
    for (int s = 0; s < d; ++s)
      for (int rr = 0; rr < D; ++rr)
        for (int l = 0; l < D; ++l) V(s * D + rr, l) = t.at({l, rr, a, s});
    r.slices.push_back(V);
  }
  r.gram_residuals = Mat::Zero(d, d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      Mat G = r.slices[a].adjoint() * r.slices[b];
      if (a == b) G -= Mat::Identity(D, D);
      const double res = G.norm();
      r.gram_residuals(a, b) = res;
      if (res > r.max_residual) {
        r.max_residual = res;
        r.worst_pair = {a, b};
      }
    }
  r.symmetry_residual = check_mpo_symmetry(O, tol).max_residual;
  r.pass = r.max_residual < tol && r.symmetry_residual < tol;
  return r;
}

PurifyReport build_purifying_unitary(const MPOTensor& O, double tol) {
  const auto s = mpo_slices(O, tol);
  if (!s.pass)
    throw Error(ErrorKind::SymmetryFailure, "slices fail orthogonality or symmetry at pair (" +
                                                std::to_string(s.worst_pair.first) + "," +
                                                std::to_string(s.worst_pair.second) + ")");
  const int d = O.d(), D = O.D();
  PurifyReport r;
  r.U = Mat(d * D, d * D);
  for (int a = 0; a < d; ++a) r.U.middleCols(a * D, D) = s.slices[a];
  r.unitarity_residual = linalg::unitarity_residual(r.U);
  double worst = 0;
  for (const auto& c : O.constraints) {
    const Mat W = O.basis->elements[c.p_in].conjugate(), W2 = O.basis->elements[c.p_out].conjugate();
    const Mat lhs = r.U * linalg::kron(Mat::Identity(d, d), Mat(W.transpose()));
    const Mat rhs = linalg::kron(c.u_phys, Mat(W2.transpose())) * r.U;
    r.symmetry_residuals.push_back((lhs - rhs).norm() / r.U.norm());
    worst = std::max(worst, r.symmetry_residuals.back());
  }
  r.pass = r.unitarity_residual < tol && worst < tol;
  return r;
}

MPOTensor mpo_from_unitary(const Mat& U, int d, int D, BasisPtr b, const std::vector<SymmetryConstraint>& c) {
  if (U.rows() != d * D || U.cols() != d * D) throw Error(ErrorKind::DimensionMismatch, "U must be dD x dD");
  MPOTensor O;
  O.basis = b;
  O.constraints = c;
  O.tensor = DenseTensor({kLeft, kRight, kPhysIn, kPhysOut}, {D, D, d, d});
  for (int l = 0; l < D; ++l)
    for (int r = 0; r < D; ++r)
      for (int a = 0; a < d; ++a)
        for (int s = 0; s < d; ++s) O.tensor.at({l, r, a, s}) = U(s * D + r, a * D + l);
  return O;
}

MPOTensor apply_input_unitary(const MPOTensor& O, const Mat& U_tilde) {
  MPOTensor O2 = O;
  O2.tensor = apply_on_leg(O.tensor, kPhysIn, Mat(U_tilde.transpose()));
  return O2;
}

RelativeUnitary relative_local_unitary(const MPOTensor& O, const MPOTensor& O2, double tol) {
  O.validate();
  O2.validate();
  if (O.d() != O2.d() || O.D() != O2.D()) throw Error(ErrorKind::DimensionMismatch, "MPO tensors differ in shape");
  bool same = O.constraints.size() == O2.constraints.size();
  for (std::size_t k = 0; same && k < O.constraints.size(); ++k) {
    const auto &a = O.constraints[k], &b = O2.constraints[k];
    same = a.p_in == b.p_in && a.p_out == b.p_out && (a.u_phys - b.u_phys).norm() < tol;
  }
  if (!same) throw Error(ErrorKind::SymmetryFailure, "MPO tensors carry different constraints");
  const auto p1 = build_purifying_unitary(O), p2 = build_purifying_unitary(O2);
  const int d = O.d(), D = O.D();
  const Mat M = p1.U.adjoint() * p2.U;
  Mat Ut = Mat::Zero(d, d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int l = 0; l < D; ++l) Ut(a, b) += M(a * D + l, b * D + l) / static_cast<double>(D);
  RelativeUnitary r;
  r.factor_residual = (M - linalg::kron(Ut, Mat::Identity(D, D))).norm() / M.norm();
  if (r.factor_residual > tol)
    throw Error(ErrorKind::SymmetryFailure, "U^dag U' does not factor as U_tilde (x) I");
  r.reconstruction_residual = (O2.tensor - apply_input_unitary(O, Ut).tensor).norm() / O2.tensor.norm();
  r.U_tilde = linalg::fix_phase_first_positive(Ut);
  return r;
}

MPOTensor pauli_slice_mpo(BasisPtr b) {
  if (!b->table) throw Error(ErrorKind::NotGroup, "Pauli-slice MPO needs a group basis");
  const int D = b->dim, d = b->size();
  MPOTensor O;
  O.basis = b;
  O.tensor = DenseTensor({kLeft, kRight, kPhysIn, kPhysOut}, {D, D, d, d});
  for (int a = 0; a < d; ++a)
    for (int l = 0; l < D; ++l)
      for (int r = 0; r < D; ++r) O.tensor.at({l, r, a, a}) = b->elements[a](r, l);
  for (int k : group_generators(*b)) {
    const Mat Pk = b->elements[k].adjoint();
    Mat u = Mat::Zero(d, d);
    for (int a = 0; a < d; ++a) {
      const Mat& Pa = b->elements[a];
      u(a, a) = linalg::fit_scale(Pa * Pk, Pk * Pa);
    }
    O.constraints.push_back({k, u, k, false});
  }
  return O;
}

MPOTensor identity_mpo(int d) {
  MPOTensor O;
  O.basis = trivial_basis();
  O.tensor = DenseTensor({kLeft, kRight, kPhysIn, kPhysOut}, {1, 1, d, d});
  for (int a = 0; a < d; ++a) O.tensor.at({0, 0, a, a}) = 1.0;
  return O;
}

DenseTensor mpo_apply_direct(const std::vector<MPOTensor>& chain, const DenseTensor& input) {
  check_chain(chain);
  const int n = static_cast<int>(chain.size());
  std::vector<DenseTensor> net{input};
  for (int k = 0; k < n; ++k) net.push_back(chain_site(chain[k], k, n, false));
  const int D = chain.front().D();
  for (int k = 0; k + 1 < n; ++k) net.push_back(bond_tensor(Mat::Identity(D, D), idx("r", k), idx("l", k + 1)));
  return contract_network(net).permuted(output_order(n, false));
}

DenseTensor staircase_apply(const std::vector<Mat>& U, int d, int D, const DenseTensor& input) {
  const int n = static_cast<int>(U.size());
  DenseTensor state = input;
  for (int k = 0; k < n; ++k) {
    const std::string cin = k == 0 ? kLeft : idx("c", k), cout = k == n - 1 ? kRight : idx("c", k + 1);
    const DenseTensor g = DenseTensor::from_matrix(U[k], {idx("out", k), cout}, {d, D}, {idx("in", k), cin}, {d, D});
    state = contract(g, state, {{idx("in", k), idx("in", k)}, {cin, cin}});
  }
  return state.permuted(output_order(n, false));
}

DenseTensor random_mpo_input(int n, int d, int D, std::mt19937_64& rng) {
  std::vector<std::string> legs{kLeft};
  std::vector<int> shape{D};
  for (int k = 0; k < n; ++k) {
    legs.push_back(idx("in", k));
    shape.push_back(d);
  }
  DenseTensor t(legs, shape);
  std::normal_distribution<double> g(0.0, 1.0);
  for (auto& x : t.data()) x = cplx(g(rng), g(rng));
  return t.scaled(1.0 / t.norm());
}

MpoProtocolRun apply_mpo_via_protocol(const std::vector<MPOTensor>& chain, const DenseTensor& input,
                                      std::uint64_t seed, double tol) {
  check_chain(chain);
  const int n = static_cast<int>(chain.size());
  std::mt19937_64 rng(seed);
  MpoProtocolRun out;
  out.run.seed = seed;
  DenseTensor X = contract_network({input, chain_site(chain[0], 0, n, false)});
  for (int k = 0; k + 1 < n; ++k) {
    const MFBasis& b = *chain[k + 1].basis;
    std::vector<DenseTensor> cand;
    std::vector<double> w;
    for (int i = 0; i < b.size(); ++i) {
      cand.push_back(contract_network(
          {X, bond_tensor(measured_bond(b, i), idx("r", k), idx("l", k + 1)), chain_site(chain[k + 1], k + 1, n, false)}));
      const double nn = cand.back().norm();
      w.push_back(nn * nn);
    }
    const int pick = sample_index(w, rng);
    double total = 0;
    for (double x : w) total += x;
    out.run.outcomes.push_back(pick);
    out.run.outcome_probabilities.push_back(w[pick] / total);
    X = cand[pick];
  }
  const auto fb = push_defects(chain, false, out.run.outcomes);
  out.run.corrections = fb.corrections;
  out.run.corrected = fb.corrected;
  out.run.message = fb.message;
  for (int k = 0; k < n; ++k) X = apply_on_leg(X, idx("out", k), fb.corrections[k]);
  if (fb.boundary) X = apply_on_leg(X, kRight, *fb.boundary);
  out.output = X.permuted(output_order(n, false));
  out.direct = mpo_apply_direct(chain, input);
  out.run.fidelity = fidelity(out.direct, out.output);
  out.run.success = out.run.corrected && out.run.fidelity > 1 - tol;
  out.run.final_state = out.output;
  return out;
}

double mpo_periodic_postselection_probability(const std::vector<MPOTensor>& chain, const DenseTensor& input) {
  check_chain(chain);
  const int n = static_cast<int>(chain.size());
  const MFBasis& b = *chain.front().basis;
  const int m = b.size();
  const double total = std::pow(static_cast<double>(m), n);
  if (total > 65536) throw Error(ErrorKind::SizeGuard, "more than 65536 outcome tuples");
  std::vector<int> out(n, 0);
  double all = 0, good = 0;
  for (std::size_t t = 0; t < static_cast<std::size_t>(total); ++t) {
    std::size_t rem = t;
    for (int k = n - 1; k >= 0; --k) {
      out[k] = static_cast<int>(rem % m);
      rem /= m;
    }
    std::vector<DenseTensor> net{input};
    for (int k = 0; k < n; ++k) {
      net.push_back(chain_site(chain[k], k, n, true));
      net.push_back(bond_tensor(measured_bond(b, out[k]), idx("r", k), idx("l", (k + 1) % n)));
    }
    const double w = std::pow(contract_network(net).norm(), 2);
    all += w;
    if (push_defects(chain, true, out).corrected) good += w;
  }
  return all > 0 ? good / all : 0.0;
}

Mat random_unitary(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Mat A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = cplx(g(rng), g(rng));
  Eigen::HouseholderQR<Mat> qr(A);
  Mat Q = qr.householderQ() * Mat::Identity(n, n);
  const Mat R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < n; ++i) {
    const cplx r = R(i, i);
    if (std::abs(r) > 0) Q.col(i) *= r / std::abs(r);
  }
  return Q;
}

}  // namespace mftn
