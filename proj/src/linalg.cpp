#include "mftn/linalg.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace mftn::linalg {

Mat identity(int n) { return Mat::Identity(n, n); }

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Mat kron(const std::vector<Mat>& factors) {
  Mat out = Mat::Identity(1, 1);
  for (const auto& f : factors) out = kron(out, f);
  return out;
}

namespace {

int rank_from(const Eigen::VectorXd& s, double tol) {
  if (s.size() == 0) return 0;
  const double smax = s.maxCoeff();
  if (smax <= 0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > tol * smax) ++r;
  return r;
}

}  // namespace

Polar polar(const Mat& m, double tol) {
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd s = svd.singularValues();
  const int r = rank_from(s, tol);
  const Mat& U = svd.matrixU();
  const Mat& W = svd.matrixV();
  Polar p;
  p.rank = r;
  Mat sig = Mat::Zero(s.size(), s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) sig(i, i) = s(i);
  const Mat Wk = W.leftCols(s.size());
  p.Q = Wk * sig * Wk.adjoint();
  p.V = U.leftCols(r) * W.leftCols(r).adjoint();
  p.R = W.leftCols(r) * W.leftCols(r).adjoint();
  return p;
}

Eigh eigh(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.adjoint()));
  const Eigen::Index n = m.rows();
  Eigh out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = es.eigenvalues()(n - 1 - k);
    out.vectors.col(k) = es.eigenvectors().col(n - 1 - k);
  }
  return out;
}

Mat pinv(const Mat& m, double tol) {
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd s = svd.singularValues();
  const int r = rank_from(s, tol);
  Mat out = Mat::Zero(m.cols(), m.rows());
  for (int i = 0; i < r; ++i) out += svd.matrixV().col(i) * (1.0 / s(i)) * svd.matrixU().col(i).adjoint();
  return out;
}

int numerical_rank(const Mat& m, double tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(m);
  return rank_from(svd.singularValues(), tol);
}

Mat nullspace(const Mat& m, double tol) {
  const Eigen::Index n = m.cols();
  if (m.rows() == 0) return Mat::Identity(n, n);
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullV);
  const Eigen::VectorXd s = svd.singularValues();
  const double thr = tol * std::max(1.0, s.size() ? s.maxCoeff() : 0.0);
  std::vector<Eigen::Index> cols;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double si = i < s.size() ? s(i) : 0.0;
    if (si <= thr) cols.push_back(i);
  }
  Mat out(n, cols.size());
  for (std::size_t k = 0; k < cols.size(); ++k) out.col(k) = svd.matrixV().col(cols[k]);
  return out;
}

cplx fit_scale(const Mat& a, const Mat& b) {
  const double bb = b.squaredNorm();
  if (bb == 0) return 0.0;
  cplx s = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) s += std::conj(b.data()[i]) * a.data()[i];
  return s / bb;
}

double proportional_residual(const Mat& a, const Mat& b) {
  const double na = a.norm();
  if (na == 0) return b.norm() == 0 ? 0.0 : 1.0;
  return (a - fit_scale(a, b) * b).norm() / na;
}

double identity_residual(const Mat& m, cplx* constant) {
  const cplx c = m.trace() / static_cast<double>(m.rows());
  if (constant) *constant = c;
  if (std::abs(c) == 0) return m.norm() == 0 ? 0.0 : std::numeric_limits<double>::infinity();
  return (m - c * Mat::Identity(m.rows(), m.cols())).norm() / (std::abs(c) * std::sqrt(static_cast<double>(m.rows())));
}

double unitarity_residual(const Mat& u) {
  if (u.rows() != u.cols()) return std::numeric_limits<double>::infinity();
  return (u.adjoint() * u - Mat::Identity(u.rows(), u.cols())).norm();
}

Mat inverse(const Mat& m) { return m.fullPivLu().inverse(); }

Mat nearest_unitary(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

Mat fix_phase_first_positive(const Mat& m, double tol) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (std::abs(m(i, j)) > tol) return m * (std::abs(m(i, j)) / m(i, j));
  return m;
}

std::vector<cplx> eigenvalues(const Mat& m) {
  Eigen::ComplexEigenSolver<Mat> es(m, false);
  const auto& ev = es.eigenvalues();
  return std::vector<cplx>(ev.data(), ev.data() + ev.size());
}

}  // namespace mftn::linalg
