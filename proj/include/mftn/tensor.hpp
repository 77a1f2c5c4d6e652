#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace mftn {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline constexpr double kDefaultTol = 1e-9;

enum class ErrorKind {
  DimensionMismatch,
  UnknownLeg,
  InvalidArgument,
  NotHermitian,
  NotUnitary,
  InvalidBasis,
  NotGroup,
  Inadmissible,
  NonPrime,
  SymmetryFailure,
  DefectStuck,
  SizeGuard,
  Malformed,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Complex dense array with named legs, row-major over shape.
class DenseTensor {
 public:
  DenseTensor() = default;
  DenseTensor(std::vector<std::string> legs, std::vector<int> shape);
  DenseTensor(std::vector<std::string> legs, std::vector<int> shape, std::vector<cplx> data);

  const std::vector<std::string>& legs() const { return legs_; }
  const std::vector<int>& shape() const { return shape_; }
  const std::vector<cplx>& data() const { return data_; }
  std::vector<cplx>& data() { return data_; }
  int rank() const { return static_cast<int>(legs_.size()); }
  std::size_t size() const { return data_.size(); }

  bool has_leg(const std::string& leg) const;
  int axis(const std::string& leg) const;
  int dim(const std::string& leg) const { return shape_[axis(leg)]; }

  cplx& at(const std::vector<int>& idx);
  const cplx& at(const std::vector<int>& idx) const;

  DenseTensor permuted(const std::vector<std::string>& order) const;
  DenseTensor relabeled(const std::string& from, const std::string& to) const;
  DenseTensor relabeled(const std::vector<std::pair<std::string, std::string>>& map) const;
  DenseTensor conj() const;
  DenseTensor scaled(cplx s) const;

  // Matrix with rows = row_legs (first slowest) and cols = col_legs.
  Mat matrix(const std::vector<std::string>& row_legs, const std::vector<std::string>& col_legs) const;
  static DenseTensor from_matrix(const Mat& m, const std::vector<std::string>& row_legs,
                                 const std::vector<int>& row_shape,
                                 const std::vector<std::string>& col_legs,
                                 const std::vector<int>& col_shape);
  static DenseTensor from_vector(const Vec& v, const std::vector<std::string>& legs,
                                 const std::vector<int>& shape);

  double norm() const;
  void validate() const;

 private:
  std::vector<std::string> legs_;
  std::vector<int> shape_;
  std::vector<cplx> data_;
};

DenseTensor operator+(const DenseTensor& a, const DenseTensor& b);
DenseTensor operator-(const DenseTensor& a, const DenseTensor& b);

// Leg-name-aware matrix reading of a tensor.
struct MatrixView {
  DenseTensor tensor;
  std::vector<std::string> row_legs;
  std::vector<std::string> col_legs;

  Mat to_matrix() const;
  std::vector<int> row_shape() const;
  std::vector<int> col_shape() const;
};

DenseTensor contract(const DenseTensor& t1, const DenseTensor& t2,
                     const std::vector<std::pair<std::string, std::string>>& pairs);

// Contracts every leg name shared by exactly two tensors; greedy pairwise order.
DenseTensor contract_network(std::vector<DenseTensor> tensors);

// Applies a square operator to one leg: new[.., x, ..] = sum_y op(x, y) t[.., y, ..].
DenseTensor apply_on_leg(const DenseTensor& t, const std::string& leg, const Mat& op);
DenseTensor apply_on_legs(const DenseTensor& t, const std::vector<std::string>& legs, const Mat& op);

// Aligns b's leg order to a's and returns <a|b>.
cplx inner(const DenseTensor& a, const DenseTensor& b);
// |<a|b>|^2 / (|a|^2 |b|^2); global phase and scale are quotiented out.
double fidelity(const DenseTensor& a, const DenseTensor& b);

struct PolarResult {
  DenseTensor V;  // legs: row legs, col legs primed
  DenseTensor Q;  // legs: col legs primed, col legs
  int rank = 0;
};
PolarResult polar_decompose(const MatrixView& m, double tol = kDefaultTol);

struct EigResult {
  std::vector<double> values;  // descending
  DenseTensor vectors;         // legs: row legs, "k"
};
EigResult eig_hermitian(const MatrixView& m, double herm_tol = 1e-10);

DenseTensor pseudo_inverse(const MatrixView& m, double tol = kDefaultTol);

std::string primed(const std::string& leg);

}  // namespace mftn
