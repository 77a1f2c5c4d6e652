#pragma once

#include <complex>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mftn/tensor.hpp"

// Small helpers shared by the test binaries. Oracles here avoid the library's own kernels.
namespace testutil {

using mftn::cplx;
using mftn::Mat;

inline Mat random_mat(std::mt19937_64& rng, int r, int c) {
  std::normal_distribution<double> n(0.0, 1.0);
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = cplx(n(rng), n(rng));
  return m;
}

inline std::vector<cplx> random_data(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<cplx> v(n);
  for (auto& x : v) x = cplx(g(rng), g(rng));
  return v;
}

inline mftn::DenseTensor random_tensor(std::mt19937_64& rng, std::vector<std::string> legs, std::vector<int> shape) {
  std::size_t n = 1;
  for (int s : shape) n *= static_cast<std::size_t>(s);
  return mftn::DenseTensor(std::move(legs), std::move(shape), random_data(rng, n));
}

// Entrywise Kronecker product, written out by index.
inline Mat kron_loops(const Mat& a, const Mat& b) {
  Mat k(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      for (int p = 0; p < b.rows(); ++p)
        for (int q = 0; q < b.cols(); ++q) k(i * b.rows() + p, j * b.cols() + q) = a(i, j) * b(p, q);
  return k;
}

inline Mat X(int d) {
  Mat m = Mat::Zero(d, d);
  for (int a = 0; a < d; ++a) m((a + 1) % d, a) = 1.0;
  return m;
}

inline Mat Z(int d) {
  Mat m = Mat::Zero(d, d);
  for (int a = 0; a < d; ++a) m(a, a) = std::polar(1.0, 2 * M_PI * a / d);
  return m;
}

inline Mat mpow(const Mat& m, int p) {
  Mat r = Mat::Identity(m.rows(), m.cols());
  for (int i = 0; i < p; ++i) r = r * m;
  return r;
}

// |a - c b| / |a| with c fitted in closed form.
inline double prop_residual(const Mat& a, const Mat& b) {
  const cplx c = (b.adjoint() * a).trace() / std::max(1e-300, b.squaredNorm());
  return (a - c * b).norm() / std::max(1e-300, a.norm());
}

// Orthogonal projector onto the column span.
inline Mat span_projector(const Mat& cols, double tol = 1e-9) {
  Eigen::JacobiSVD<Mat> svd(cols, Eigen::ComputeThinU);
  int r = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > tol * std::max(1.0, svd.singularValues()(0))) ++r;
  const Mat U = svd.matrixU().leftCols(r);
  return U * U.adjoint();
}

}  // namespace testutil
