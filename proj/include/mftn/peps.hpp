#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mftn/basis.hpp"
#include "mftn/mps.hpp"
#include "mftn/push.hpp"
#include "mftn/tensor.hpp"

namespace mftn {

inline const std::string kUp = "up";
inline const std::string kDown = "down";

// Legs (left, up, right, down, phys). Left and down take bond matrices as B A, up and right as A B.
struct PEPSTensor {
  DenseTensor tensor;
  BasisPtr basis;
  std::vector<DefectRule> rules;

  int d() const { return tensor.dim(kPhys); }
  int D() const { return tensor.dim(kLeft); }
  void validate() const;
};

const std::vector<std::string>& peps_virtual_legs();  // left, up, right, down
Mult peps_mult(const std::string& leg);

Mat peps_matrix(const DenseTensor& A);  // d x D^4, columns (l,u,r,dn)
DenseTensor peps_from_matrix(const Mat& M, int D);

// Two-family constraint (left or down pushed to up and right) from basis labels.
DefectRule peps_rule(const std::string& src, int g, const Mat& u, int p_up, int p_right);

SymmetryReport check_peps_mf_symmetry(const PEPSTensor& A, double tol = kDefaultTol);

struct IsometryReport {
  bool pass = false;
  cplx constant = 0;
  double residual = 0;
};
// Contracts phys, up and right against the conjugate; expects c I on (left, down).
IsometryReport peps_isometry_check(const PEPSTensor& A, double tol = kDefaultTol);

// Operator on (l,u,r,dn) that commutes with Q for one rule.
Mat rule_commutant(const MFBasis& b, const DefectRule& r);

struct PepsCliffordForm {
  Mat U_C;  // D^6 x D^6 on (p_l, p_u, p_r, p_dn, u, r); inputs l, dn enter slots 4, 5
  Vec psi;  // D^4
  double scale = 0;
  double residual = 0;
  bool is_clifford = false;
  bool stabilizer = false;
};

struct PepsPolarReport {
  Mat V, Q, R;
  int rank_q = 0;
  int rank_v = 0;
  bool null_equal = false;
  double reconstruction_residual = 0;
  std::vector<double> commutator_residuals;
  bool polar_pass = false;
  std::optional<PepsCliffordForm> clifford;
  std::string clifford_error;
};
PepsPolarReport peps_split_polar(const PEPSTensor& A, double tol = kDefaultTol);
PepsCliffordForm peps_clifford_form(const Mat& Q, const PEPSTensor& A);

// Q = sum_i alpha_i P_i^dag(l) P_i^T(u) P_i^T(r) P_i^dag(dn); rules for every ordered leg pair and generator.
PEPSTensor topo_solution(BasisPtr b, const std::vector<cplx>& alpha);
// Coefficients of a Q-form tensor in the topological family.
std::vector<cplx> topo_alpha(const PEPSTensor& A);

std::vector<cplx> quantum_double_alpha(int D, int charge = 0);  // alpha on X powers, omega^{charge i}
std::vector<cplx> interpolated_alpha(double a);                 // WH(2): I, X -> 1; Z, XZ -> a

struct TopoSymmetrySpec {
  BasisPtr basis;
  std::vector<int> subgroup;
  double phi = 0;
};
bool subgroup_closed(const TopoSymmetrySpec& s);
int subgroup_exponent(const TopoSymmetrySpec& s);

struct TopoReport {
  bool closed = false;
  bool phi_order_ok = false;
  std::vector<double> phis;
  std::vector<double> tensor_residuals;  // |Q - e^{i phi} Q G_M| / |Q|
  std::vector<double> alpha_residuals;   // max_j |alpha_j - e^{i phi} alpha_{Mj}|
  bool character_ok = false;
  bool phi_matches = false;
  double phi_measured = 0;
  bool pass = false;
};
TopoReport check_topo_symmetry(const PEPSTensor& A, const TopoSymmetrySpec& spec, double tol = kDefaultTol);

struct TransferSpectrum {
  int L = 1;
  std::vector<cplx> e;
  std::vector<cplx> t;
  std::vector<double> sorted_magnitudes;
  int degeneracy_of_max = 0;
};
TransferSpectrum transfer_spectrum_analytic(const std::vector<cplx>& alpha, const MFBasis& b, int L);
// Eigenvalues of L copies of E = A^dag A with periodic horizontal bonds, divided by D^{2L}; sorted by modulus.
std::vector<cplx> transfer_matrix_brute(const PEPSTensor& A, int L);
int degeneracy_of_max(const std::vector<cplx>& values, double rel = 1e-8);

struct DegeneracyReport {
  int m = 0;
  int degeneracy = 0;
  double max_value = 0;
  double bound = 0;
  bool degeneracy_ok = false;
  bool max_ok = false;
  bool pass = false;
};
DegeneracyReport degeneracy_report(const TopoSymmetrySpec& spec, const std::vector<cplx>& alpha, int L,
                                   double tol = 1e-8);

struct InjectivityReport {
  int rank = 0;
  int full = 0;
  bool injective = false;
  bool expect_deficient = false;
  bool pass = false;
};
InjectivityReport injectivity_check(const PEPSTensor& A, const std::optional<TopoSymmetrySpec>& spec,
                                    double tol = kDefaultTol);

// Negative fixture: with star-shaped pushes only, a defect on one interior edge of a w x h patch never
// reaches the boundary. Returns true when the single-edge configuration cannot be cleared.
bool star_push_obstructed(int w, int h, int edge);
int interior_edge_count(int w, int h);

}  // namespace mftn
