#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mftn/basis.hpp"
#include "mftn/clifford.hpp"
#include "mftn/push.hpp"
#include "mftn/tensor.hpp"

namespace mftn {

inline const std::string kLeft = "left";
inline const std::string kRight = "right";
inline const std::string kPhys = "phys";

// Bond matrix P_in^* entering on the left equals u_phys times P_out^* leaving on the right.
// Equivalently U M (P_in (x) P_out^*) = M for M[s, (l, r)] = A[l, s, r].
struct SymmetryConstraint {
  int p_in = 0;
  Mat u_phys;
  int p_out = 0;
  bool solve_u = false;  // u_phys unknown; only used by solve_with_unknown_u
};

struct MPSTensor {
  DenseTensor tensor;  // legs (left, phys, right)
  BasisPtr basis;
  std::vector<SymmetryConstraint> constraints;

  int d() const { return tensor.dim(kPhys); }
  int D() const { return tensor.dim(kLeft); }
  void validate() const;
};

Mult mps_mult(const std::string& leg);
std::vector<DefectRule> mps_rules(const std::vector<SymmetryConstraint>& c);
// Push table for bond defects entering from the left.
PushTable mps_push_table(const MPSTensor& A);

Mat mps_matrix(const DenseTensor& A);  // d x D^2
DenseTensor mps_from_matrix(const Mat& M, int D);

struct SymmetryReport {
  std::vector<double> residuals;
  double max_residual = 0;
  bool pass = true;
};
SymmetryReport check_mf_symmetry(const MPSTensor& A, double tol = kDefaultTol);

struct FamilyResult {
  std::vector<DenseTensor> tensors;  // orthonormal in the Frobenius inner product
  int dimension = 0;
};
FamilyResult solve_symmetry_family(const MFBasis& b, const std::vector<SymmetryConstraint>& c, int d, int D,
                                   double tol = kDefaultTol);

// Alternating least squares for constraints whose u_phys is unknown; requires d = D^2 for the seed.
struct AlsResult {
  DenseTensor tensor;
  std::vector<SymmetryConstraint> constraints;
  double residual = 0;
  int iterations = 0;
  bool converged = false;
};
AlsResult solve_with_unknown_u(const MFBasis& b, const std::vector<SymmetryConstraint>& c, int d, int D,
                               double tol = kDefaultTol, int max_iter = 200);

struct CanonicalReport {
  bool pass = false;
  cplx constant = 0;
  double residual = 0;
};
// sum_s A^s A^s^dag = c I_D.
CanonicalReport canonical_form_check(const MPSTensor& A, double tol = kDefaultTol);

struct PolarSplit {
  Mat V;  // d x D^2
  Mat Q;  // D^2 x D^2
  Mat R;  // V^dag V
  int rank_q = 0;
  int rank_v = 0;
  bool null_equal = false;
  bool injective = false;
  double reconstruction_residual = 0;
  std::vector<double> commutator_residuals;  // |[Q, P (x) P'^*]| / |Q| per constraint
  bool pass = false;
};
PolarSplit split_polar(const MPSTensor& A, double tol = kDefaultTol);

struct CorrectionReport {
  std::vector<double> residuals;          // |V^dag U V - (P^dag (x) P'^T) R|
  std::vector<double> null_discrepancy;   // |(P^dag (x) P'^T)(I - R)|, nonzero off the domain of V
  bool pass = false;
};
CorrectionReport correction_consistency(const MPSTensor& A, const PolarSplit& s, double tol = kDefaultTol);

struct CliffordMagicForm {
  Mat U_C;  // D^3 x D^3
  Vec psi;  // D^2, normalized
  double scale = 0;
  double residual = 0;  // |V_Q - scale U_C (psi (x) I)| / |V_Q|
  bool is_clifford = false;
  bool stabilizer = false;
};
// Sideways reading of a D^2 x D^2 matrix: V[(a,b,r), l] = Q[(a,b), (l,r)].
Mat sideways(const Mat& Q, int D);
CliffordMagicForm clifford_magic_decompose(const PolarSplit& split, const MPSTensor& A);
// Same, for a matrix Q that commutes with P (x) P'^* for the given push table.
CliffordMagicForm clifford_form_of(const Mat& Q, const MFBasis& b, const PushTable& push);

// Q = sum_i alpha_i P_i^dag (x) P_i^T with constraints (P_i, P_i^dag (x) P_i^T, P_i) for every element.
MPSTensor spt_solution(BasisPtr b, const std::vector<cplx>& alpha);
// Tensor with M = Q (physical dimension D^2) and constraints (p, P^dag (x) P'^T, p') for each pair.
MPSTensor q_form_tensor(BasisPtr b, const Mat& Q, const std::vector<std::pair<int, int>>& map);

MPSTensor block(const MPSTensor& A, int k);
// Elements reachable as outputs after pushing through k sites.
std::vector<int> pushable_image(const MPSTensor& A, int k);

struct MapOrder {
  bool bijective = false;
  std::optional<int> order;
  std::vector<int> domain;
  std::vector<int> image;  // image[i] is the output of domain[i]
};
// extend_over_group closes the map multiplicatively over the basis group first.
MapOrder map_order(const MFBasis& b, const std::vector<SymmetryConstraint>& c, bool extend_over_group);

enum class Boundary { Open, Periodic };
Boundary parse_boundary(const std::string& s);

// Contracts the chain; open: legs left, phys0..phys{N-1}, right. periodic: phys legs only.
DenseTensor mps_state(const std::vector<DenseTensor>& sites, Boundary bc);

// <psi| S_0 (x) ... (x) S_{N-1} |psi> for Q-form sites (d = D^2), each S_k a two-qudit Pauli.
cplx pauli_expectation(const std::vector<MPSTensor>& family, const std::vector<PauliVector>& paulis,
                       Boundary bc = Boundary::Open);
cplx pauli_expectation_dense(const std::vector<MPSTensor>& family, const std::vector<PauliVector>& paulis,
                             Boundary bc = Boundary::Open);

}  // namespace mftn
