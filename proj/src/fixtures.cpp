#include "mftn/fixtures.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace mftn::fixtures {

BasisPtr wh(int D) {
  static std::mutex mu;
  static std::map<int, BasisPtr> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& b = cache[D];
  if (!b) b = std::make_shared<const MFBasis>(weyl_heisenberg_basis(D));
  return b;
}

Mat pauli_x() {
  Mat m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

Mat pauli_z() {
  Mat m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

Mat pauli_y() {
  Mat m(2, 2);
  m << 0, cplx(0, -1), cplx(0, 1), 0;
  return m;
}

Mat hadamard() {
  Mat m(2, 2);
  m << 1, 1, 1, -1;
  return m / std::sqrt(2.0);
}

std::vector<SymmetryConstraint> copy_family_constraints() {
  return {{1, pauli_x(), 1, false}, {2, Mat::Identity(2, 2), 2, false}};
}

MPSTensor copy_family(cplx alpha) {
  MPSTensor A;
  A.basis = wh(2);
  A.tensor = DenseTensor({kLeft, kPhys, kRight}, {2, 2, 2});
  for (int l = 0; l < 2; ++l)
    for (int s = 0; s < 2; ++s)
      for (int r = 0; r < 2; ++r)
        A.tensor.at({l, s, r}) = (l == s && s == r ? 1.0 : 0.0) + (l == r ? alpha / std::sqrt(2.0) : 0.0);
  A.constraints = copy_family_constraints();
  return A;
}

std::vector<SymmetryConstraint> bend_family_constraints() {
  return {{1, pauli_x(), 2, false}, {2, pauli_z(), 0, false}};
}

MPSTensor bend_family(cplx alpha) {
  const Mat H = hadamard();
  MPSTensor A;
  A.basis = wh(2);
  A.tensor = DenseTensor({kLeft, kPhys, kRight}, {2, 2, 2});
  for (int s = 0; s < 2; ++s)
    for (int r = 0; r < 2; ++r) A.tensor.at({s, s, r}) = H(s, r) + (r == 0 ? alpha : cplx(0.0));
  A.constraints = bend_family_constraints();
  return A;
}

Mat aklt_u(char p) {
  Mat u = Mat::Zero(3, 3);
  switch (p) {
    case 'X':
      u(0, 2) = u(2, 0) = 1;
      u(1, 1) = 1;
      break;
    case 'Y':
      u(0, 2) = u(2, 0) = 1;
      u(1, 1) = -1;
      break;
    case 'Z':
      u(0, 0) = u(2, 2) = 1;
      u(1, 1) = -1;
      break;
    default:
      throw Error(ErrorKind::InvalidArgument, "AKLT correction must be X, Y or Z");
  }
  return u;
}

MPSTensor aklt() {
  MPSTensor A;
  A.basis = wh(2);
  A.tensor = DenseTensor({kLeft, kPhys, kRight}, {2, 3, 2});
  A.tensor.at({1, 0, 1}) = 1.0;
  A.tensor.at({0, 1, 1}) = A.tensor.at({1, 1, 0}) = 1.0 / std::sqrt(2.0);
  A.tensor.at({0, 2, 0}) = 1.0;
  A.constraints = {{1, aklt_u('X'), 1, false}, {3, aklt_u('Y'), 3, false}, {2, aklt_u('Z'), 2, false}};
  return A;
}

MPSTensor cluster() {
  const Mat H = hadamard();
  MPSTensor A;
  A.basis = wh(2);
  A.tensor = DenseTensor({kLeft, kPhys, kRight}, {2, 2, 2});
  for (int l = 0; l < 2; ++l)
    for (int s = 0; s < 2; ++s) A.tensor.at({l, s, s}) = std::sqrt(2.0) * H(l, s);
  A.constraints = {{1, Mat::Identity(2, 2), 2, false}, {2, pauli_x(), 1, false}};
  return A;
}

MPSTensor non_bijective() {
  MPSTensor A;
  A.basis = wh(2);
  // (X, X, Y), (Z, Z, I) with Y = i XZ; the basis holds XZ, so the phase moves into u.
  A.constraints = {{1, cplx(0, -1) * pauli_x(), 3, false}, {2, pauli_z(), 0, false}};
  const auto fam = solve_symmetry_family(*A.basis, A.constraints, 2, 2);
  if (fam.tensors.empty()) throw Error(ErrorKind::SymmetryFailure, "non-bijective example has no solution");
  A.tensor = fam.tensors[0];
  for (std::size_t k = 1; k < fam.tensors.size(); ++k) A.tensor = A.tensor + fam.tensors[k].scaled(0.5 / k);
  return A;
}

MPSTensor rotating() {
  // X -> XZ, XZ -> Z, Z -> X in Weyl-Heisenberg indices.
  return q_form_tensor(wh(2), Mat::Identity(4, 4), {{1, 3}, {3, 2}, {2, 1}});
}

std::vector<cplx> ghz_alpha(int D) {
  std::vector<cplx> a(D * D, 0.0);
  for (int w = 0; w < D; ++w) a[D * w] = 1.0;
  return a;
}

std::vector<cplx> aklt_alpha() { return {3.0, -1.0, -1.0, -1.0}; }

std::vector<cplx> identity_alpha(int D) {
  std::vector<cplx> a(D * D, 0.0);
  a[0] = 1.0;
  return a;
}

std::vector<cplx> ones_alpha(int D) { return std::vector<cplx>(D * D, 1.0); }

PEPSTensor toric(int D) { return topo_solution(wh(D), quantum_double_alpha(D, 0)); }
PEPSTensor charged(int D, int k) { return topo_solution(wh(D), quantum_double_alpha(D, k)); }
PEPSTensor equal_sum(int D) { return topo_solution(wh(D), ones_alpha(D)); }
PEPSTensor interpolated(double a) { return topo_solution(wh(2), interpolated_alpha(a)); }
PEPSTensor bell_pairs(int D) { return topo_solution(wh(D), identity_alpha(D)); }

TopoSymmetrySpec x_subgroup(int D, int k) {
  TopoSymmetrySpec s;
  s.basis = wh(D);
  for (int i = 0; i < D; ++i) s.subgroup.push_back(i);
  s.phi = -2 * M_PI * k / D;
  return s;
}

}  // namespace mftn::fixtures
