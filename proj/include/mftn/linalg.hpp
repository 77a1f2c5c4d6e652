#pragma once

#include <vector>

#include "mftn/tensor.hpp"

namespace mftn::linalg {

Mat identity(int n);
Mat kron(const Mat& a, const Mat& b);
Mat kron(const std::vector<Mat>& factors);

struct Polar {
  Mat V;  // partial isometry, V^dag V = projector onto range(Q)
  Mat Q;  // (m^dag m)^{1/2}
  Mat R;  // V^dag V
  int rank = 0;
};
Polar polar(const Mat& m, double tol = kDefaultTol);

struct Eigh {
  Eigen::VectorXd values;  // descending
  Mat vectors;
};
Eigh eigh(const Mat& m);

Mat pinv(const Mat& m, double tol = kDefaultTol);
int numerical_rank(const Mat& m, double tol = kDefaultTol);
// Orthonormal basis (columns) of the null space; singular values <= tol * max(1, sigma_max) count as zero.
Mat nullspace(const Mat& m, double tol = 1e-8);

// Least-squares c minimizing |a - c b|.
cplx fit_scale(const Mat& a, const Mat& b);
// |a - c b| / |a| with c the least-squares scale.
double proportional_residual(const Mat& a, const Mat& b);
// |m - c I| / |c| with c = tr(m)/n; returns c through out-param.
double identity_residual(const Mat& m, cplx* constant = nullptr);

double unitarity_residual(const Mat& u);
Mat inverse(const Mat& m);

// Nearest unitary to m in Frobenius norm.
Mat nearest_unitary(const Mat& m);

// Multiplies by the conjugate phase of the first entry with modulus above tol.
Mat fix_phase_first_positive(const Mat& m, double tol = 1e-12);

std::vector<cplx> eigenvalues(const Mat& m);

}  // namespace mftn::linalg
