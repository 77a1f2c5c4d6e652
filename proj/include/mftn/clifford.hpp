#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mftn/tensor.hpp"

namespace mftn {

// phase * X^{v_1} Z^{w_1} (x) ... (x) X^{v_n} Z^{w_n}, phase = exp(i pi phase_exp / d).
// Qudit 0 is the most significant digit of the computational index.
struct PauliVector {
  int n = 1;
  int d = 2;
  std::vector<int> v;
  std::vector<int> w;
  int phase_exp = 0;

  static PauliVector identity(int n, int d);
  static PauliVector x_on(int n, int d, int slot);
  static PauliVector z_on(int n, int d, int slot);
  void normalize();
  bool operator==(const PauliVector& o) const;
  std::string str() const;
};

Mat pauli_to_matrix(const PauliVector& p);

// Symplectic commutation: Q P = omega^{commutation_exponent(P, Q)} P Q, omega = exp(2 pi i / d).
int commutation_exponent(const PauliVector& p, const PauliVector& q);
PauliVector pauli_product(const PauliVector& p, const PauliVector& q);

// m = c * XZ(a): returns a (phase_exp 0) and c.
struct PauliDecomposition {
  PauliVector pauli;
  cplx coefficient;
};
std::optional<PauliDecomposition> decompose_pauli(const Mat& m, int n, int d, double tol = 1e-9);
// As above but requires c to be a 2d-th root of unity and folds it into phase_exp.
std::optional<PauliVector> as_pauli(const Mat& m, int n, int d, double tol = 1e-9);

struct PartialCliffordMap {
  int n = 1;
  int d = 2;
  struct Image {
    PauliVector source;  // X or Z on a single slot
    PauliVector target;
  };
  std::vector<Image> images;

  void add(int slot, char generator, const PauliVector& target);
};

struct AdmissibilityReport {
  bool sources_valid = true;
  bool commutation_ok = true;
  bool order_ok = true;
  std::vector<std::string> failures;
  bool pass() const { return sources_valid && commutation_ok && order_ok; }
};

AdmissibilityReport check_admissible(const PartialCliffordMap& m);

// Returns U_C with U_C src U_C^dag = target (phase included) for every image. Prime d only.
Mat synthesize_clifford(const PartialCliffordMap& m);

bool is_clifford(const Mat& U, int n, int d, double tol = 1e-9);

// Number of Weyl-Heisenberg strings with |<P>| = 1; equals d^n exactly for stabilizer states.
int stabilizer_count(const Vec& psi, int n, int d, double tol = 1e-8);
bool is_stabilizer_state(const Vec& psi, int n, int d, double tol = 1e-8);

bool is_prime(int d);

}  // namespace mftn
