#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mftn/mps.hpp"
#include "mftn/protocol.hpp"

namespace mftn {

inline const std::string kPhysIn = "phys_in";
inline const std::string kPhysOut = "phys_out";

// Legs (left, right, phys_in, phys_out). Constraints use the MPS reading with phys_out as the physical leg.
struct MPOTensor {
  DenseTensor tensor;
  BasisPtr basis;
  std::vector<SymmetryConstraint> constraints;

  int d() const { return tensor.dim(kPhysIn); }
  int D() const { return tensor.dim(kLeft); }
  void validate() const;
};

Mult mpo_mult(const std::string& leg);
SymmetryReport check_mpo_symmetry(const MPOTensor& O, double tol = kDefaultTol);

struct MpoIsometryReport {
  bool pass = false;
  cplx constant = 0;  // D for an MF-implementable MPO
  double residual = 0;
};
// sum over phys_out, left, right of O O^* = c delta on the phys_in pair.
MpoIsometryReport check_mpo_isometry(const MPOTensor& O, double tol = kDefaultTol);

struct SliceReport {
  std::vector<Mat> slices;  // V_a[(s, r), l] = O[l, r, a, s], each dD x D
  Mat gram_residuals;       // |V_a^dag V_b - delta_ab I|
  double max_residual = 0;
  std::pair<int, int> worst_pair{0, 0};
  double symmetry_residual = 0;
  bool pass = false;
};
SliceReport mpo_slices(const MPOTensor& O, double tol = kDefaultTol);

struct PurifyReport {
  Mat U;  // U[(s, r), (a, l)] = O[l, r, a, s]
  double unitarity_residual = 0;
  std::vector<double> symmetry_residuals;  // |U (I (x) W^T) - (u (x) W'^T) U| per constraint
  bool pass = false;
};
PurifyReport build_purifying_unitary(const MPOTensor& O, double tol = kDefaultTol);
MPOTensor mpo_from_unitary(const Mat& U, int d, int D, BasisPtr b, const std::vector<SymmetryConstraint>& c);

// O2 = U_tilde on phys_in of O.
MPOTensor apply_input_unitary(const MPOTensor& O, const Mat& U_tilde);

struct RelativeUnitary {
  Mat U_tilde;  // first nonzero entry real and positive
  double factor_residual = 0;          // |U^dag U' - U_tilde (x) I| / |U'|
  double reconstruction_residual = 0;  // |O2 - U_tilde on phys_in of O| / |O2|
};
// Throws SymmetryFailure when constraints differ or U^dag U' does not factor.
RelativeUnitary relative_local_unitary(const MPOTensor& O, const MPOTensor& O2, double tol = 1e-8);

// O[l, r, a, s] = delta_{sa} (P_a)_{rl} over a group basis (d = D^2); constraints (k, diag(c_a), k).
MPOTensor pauli_slice_mpo(BasisPtr b);
// D = 1, O[0, 0, a, s] = delta_{as}.
MPOTensor identity_mpo(int d);

// Open chain: input legs left, in0..in{N-1}; output legs out0..out{N-1}, right.
DenseTensor mpo_apply_direct(const std::vector<MPOTensor>& chain, const DenseTensor& input);
// Same map realized by purifying unitaries applied one after the other along the chain.
DenseTensor staircase_apply(const std::vector<Mat>& U, int d, int D, const DenseTensor& input);
DenseTensor random_mpo_input(int n, int d, int D, std::mt19937_64& rng);

struct MpoProtocolRun {
  ProtocolRun run;
  DenseTensor output;
  DenseTensor direct;
};
MpoProtocolRun apply_mpo_via_protocol(const std::vector<MPOTensor>& chain, const DenseTensor& input,
                                      std::uint64_t seed, double tol = kDefaultTol);

// Periodic chains need post-selection; only exact accounting is offered. Returns the Born probability
// that the merged defect on the closing bond is proportional to I.
double mpo_periodic_postselection_probability(const std::vector<MPOTensor>& chain, const DenseTensor& input);

Mat random_unitary(int n, std::mt19937_64& rng);

}  // namespace mftn
