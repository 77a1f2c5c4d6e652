#include "mftn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "mftn/linalg.hpp"

namespace mftn {

namespace {

std::size_t product(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int s : shape) n *= static_cast<std::size_t>(s);
  return n;
}

std::vector<std::size_t> strides_of(const std::vector<int>& shape) {
  std::vector<std::size_t> st(shape.size(), 1);
  for (int i = static_cast<int>(shape.size()) - 2; i >= 0; --i) st[i] = st[i + 1] * shape[i + 1];
  return st;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
  return out;
}

}  // namespace

std::string primed(const std::string& leg) { return leg + "'"; }

DenseTensor::DenseTensor(std::vector<std::string> legs, std::vector<int> shape)
    : legs_(std::move(legs)), shape_(std::move(shape)), data_(product(shape_), cplx(0.0)) {
  validate();
}

DenseTensor::DenseTensor(std::vector<std::string> legs, std::vector<int> shape, std::vector<cplx> data)
    : legs_(std::move(legs)), shape_(std::move(shape)), data_(std::move(data)) {
  validate();
}

void DenseTensor::validate() const {
  if (legs_.size() != shape_.size())
    throw Error(ErrorKind::DimensionMismatch, "leg count does not match shape rank");
  for (int s : shape_)
    if (s <= 0) throw Error(ErrorKind::DimensionMismatch, "non-positive leg dimension");
  std::set<std::string> seen(legs_.begin(), legs_.end());
  if (seen.size() != legs_.size()) throw Error(ErrorKind::InvalidArgument, "duplicate leg label in [" + join(legs_) + "]");
  if (product(shape_) != data_.size()) throw Error(ErrorKind::DimensionMismatch, "data length does not match shape");
  for (const auto& z : data_)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw Error(ErrorKind::InvalidArgument, "non-finite tensor entry");
}

bool DenseTensor::has_leg(const std::string& leg) const {
  return std::find(legs_.begin(), legs_.end(), leg) != legs_.end();
}

int DenseTensor::axis(const std::string& leg) const {
  auto it = std::find(legs_.begin(), legs_.end(), leg);
  if (it == legs_.end()) throw Error(ErrorKind::UnknownLeg, "unknown leg '" + leg + "' in [" + join(legs_) + "]");
  return static_cast<int>(it - legs_.begin());
}

cplx& DenseTensor::at(const std::vector<int>& idx) {
  return const_cast<cplx&>(static_cast<const DenseTensor&>(*this).at(idx));
}

const cplx& DenseTensor::at(const std::vector<int>& idx) const {
  if (idx.size() != shape_.size()) throw Error(ErrorKind::DimensionMismatch, "index rank mismatch");
  std::size_t off = 0;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= shape_[i]) throw Error(ErrorKind::InvalidArgument, "index out of range");
    off = off * shape_[i] + idx[i];
  }
  return data_[off];
}

DenseTensor DenseTensor::permuted(const std::vector<std::string>& order) const {
  if (order.size() != legs_.size())
    throw Error(ErrorKind::InvalidArgument, "permutation must list every leg: [" + join(order) + "] vs [" + join(legs_) + "]");
  std::vector<int> perm(order.size());
  std::vector<int> new_shape(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    perm[i] = axis(order[i]);
    new_shape[i] = shape_[perm[i]];
  }
  bool identity = true;
  for (std::size_t i = 0; i < perm.size(); ++i) identity = identity && perm[i] == static_cast<int>(i);
  if (identity) return *this;

  const auto old_strides = strides_of(shape_);
  std::vector<std::size_t> src_stride(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) src_stride[i] = old_strides[perm[i]];

  std::vector<cplx> out(data_.size());
  std::vector<int> idx(order.size(), 0);
  std::size_t src = 0;
  const int r = static_cast<int>(order.size());
  for (std::size_t n = 0; n < out.size(); ++n) {
    out[n] = data_[src];
    for (int k = r - 1; k >= 0; --k) {
      ++idx[k];
      src += src_stride[k];
      if (idx[k] < new_shape[k]) break;
      src -= src_stride[k] * new_shape[k];
      idx[k] = 0;
    }
  }
  return DenseTensor(order, new_shape, std::move(out));
}

DenseTensor DenseTensor::relabeled(const std::string& from, const std::string& to) const {
  return relabeled(std::vector<std::pair<std::string, std::string>>{{from, to}});
}

DenseTensor DenseTensor::relabeled(const std::vector<std::pair<std::string, std::string>>& map) const {
  auto legs = legs_;
  for (const auto& [from, to] : map) legs[axis(from)] = to;
  return DenseTensor(legs, shape_, data_);
}

DenseTensor DenseTensor::conj() const {
  auto d = data_;
  for (auto& z : d) z = std::conj(z);
  return DenseTensor(legs_, shape_, std::move(d));
}

DenseTensor DenseTensor::scaled(cplx s) const {
  auto d = data_;
  for (auto& z : d) z *= s;
  return DenseTensor(legs_, shape_, std::move(d));
}

Mat DenseTensor::matrix(const std::vector<std::string>& row_legs, const std::vector<std::string>& col_legs) const {
  std::vector<std::string> order = row_legs;
  order.insert(order.end(), col_legs.begin(), col_legs.end());
  DenseTensor p = permuted(order);
  std::size_t rows = 1;
  for (const auto& l : row_legs) rows *= dim(l);
  const std::size_t cols = rows ? p.size() / rows : 0;
  Mat m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = p.data_[i * cols + j];
  return m;
}

DenseTensor DenseTensor::from_matrix(const Mat& m, const std::vector<std::string>& row_legs,
                                     const std::vector<int>& row_shape,
                                     const std::vector<std::string>& col_legs,
                                     const std::vector<int>& col_shape) {
  const std::size_t rows = product(row_shape), cols = product(col_shape);
  if (rows != static_cast<std::size_t>(m.rows()) || cols != static_cast<std::size_t>(m.cols()))
    throw Error(ErrorKind::DimensionMismatch, "matrix size does not match leg shapes");
  std::vector<std::string> legs = row_legs;
  legs.insert(legs.end(), col_legs.begin(), col_legs.end());
  std::vector<int> shape = row_shape;
  shape.insert(shape.end(), col_shape.begin(), col_shape.end());
  std::vector<cplx> data(rows * cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) data[i * cols + j] = m(i, j);
  return DenseTensor(legs, shape, std::move(data));
}

DenseTensor DenseTensor::from_vector(const Vec& v, const std::vector<std::string>& legs, const std::vector<int>& shape) {
  if (product(shape) != static_cast<std::size_t>(v.size()))
    throw Error(ErrorKind::DimensionMismatch, "vector size does not match shape");
  return DenseTensor(legs, shape, std::vector<cplx>(v.data(), v.data() + v.size()));
}

double DenseTensor::norm() const {
  double s = 0;
  for (const auto& z : data_) s += std::norm(z);
  return std::sqrt(s);
}

DenseTensor operator+(const DenseTensor& a, const DenseTensor& b) {
  DenseTensor bp = b.permuted(a.legs());
  if (bp.shape() != a.shape()) throw Error(ErrorKind::DimensionMismatch, "shape mismatch in tensor sum");
  auto d = a.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += bp.data()[i];
  return DenseTensor(a.legs(), a.shape(), std::move(d));
}

DenseTensor operator-(const DenseTensor& a, const DenseTensor& b) { return a + b.scaled(-1.0); }

Mat MatrixView::to_matrix() const {
  std::set<std::string> all(row_legs.begin(), row_legs.end());
  all.insert(col_legs.begin(), col_legs.end());
  if (all.size() != static_cast<std::size_t>(tensor.rank()) || row_legs.size() + col_legs.size() != all.size())
    throw Error(ErrorKind::InvalidArgument, "matrix view must partition the tensor legs");
  return tensor.matrix(row_legs, col_legs);
}

std::vector<int> MatrixView::row_shape() const {
  std::vector<int> s;
  for (const auto& l : row_legs) s.push_back(tensor.dim(l));
  return s;
}

std::vector<int> MatrixView::col_shape() const {
  std::vector<int> s;
  for (const auto& l : col_legs) s.push_back(tensor.dim(l));
  return s;
}

DenseTensor contract(const DenseTensor& t1, const DenseTensor& t2,
                     const std::vector<std::pair<std::string, std::string>>& pairs) {
  std::vector<std::string> p1, p2;
  for (const auto& [a, b] : pairs) {
    if (t1.dim(a) != t2.dim(b))
      throw Error(ErrorKind::DimensionMismatch, "cannot contract '" + a + "' (" + std::to_string(t1.dim(a)) +
                                                    ") with '" + b + "' (" + std::to_string(t2.dim(b)) + ")");
    p1.push_back(a);
    p2.push_back(b);
  }
  std::vector<std::string> f1, f2;
  std::vector<int> s1, s2;
  for (int i = 0; i < t1.rank(); ++i)
    if (std::find(p1.begin(), p1.end(), t1.legs()[i]) == p1.end()) {
      f1.push_back(t1.legs()[i]);
      s1.push_back(t1.shape()[i]);
    }
  for (int i = 0; i < t2.rank(); ++i)
    if (std::find(p2.begin(), p2.end(), t2.legs()[i]) == p2.end()) {
      f2.push_back(t2.legs()[i]);
      s2.push_back(t2.shape()[i]);
    }
  for (const auto& l : f1)
    if (std::find(f2.begin(), f2.end(), l) != f2.end())
      throw Error(ErrorKind::InvalidArgument, "result would carry duplicate leg '" + l + "'");
  Mat m = t1.matrix(f1, p1) * t2.matrix(p2, f2);
  return DenseTensor::from_matrix(m, f1, s1, f2, s2);
}

DenseTensor contract_network(std::vector<DenseTensor> tensors) {
  if (tensors.empty()) throw Error(ErrorKind::InvalidArgument, "empty network");
  {
    std::map<std::string, int> count;
    for (const auto& t : tensors)
      for (const auto& l : t.legs()) ++count[l];
    for (const auto& [leg, c] : count)
      if (c > 2) throw Error(ErrorKind::InvalidArgument, "leg '" + leg + "' appears in more than two tensors");
  }
  while (tensors.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 1;
    bool shared_found = false;
    for (std::size_t i = 0; i < tensors.size(); ++i)
      for (std::size_t j = i + 1; j < tensors.size(); ++j) {
        double out = 1.0;
        bool shares = false;
        for (int a = 0; a < tensors[i].rank(); ++a) {
          if (tensors[j].has_leg(tensors[i].legs()[a])) shares = true;
          else out *= tensors[i].shape()[a];
        }
        for (int b = 0; b < tensors[j].rank(); ++b)
          if (!tensors[i].has_leg(tensors[j].legs()[b])) out *= tensors[j].shape()[b];
        if (shares && (!shared_found || out < best)) {
          best = out;
          bi = i;
          bj = j;
          shared_found = true;
        }
      }
    if (!shared_found) {
      // Disconnected pieces: outer product of the two smallest.
      std::vector<std::size_t> idx(tensors.size());
      std::iota(idx.begin(), idx.end(), 0);
      std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return tensors[a].size() < tensors[b].size(); });
      bi = std::min(idx[0], idx[1]);
      bj = std::max(idx[0], idx[1]);
    }
    std::vector<std::pair<std::string, std::string>> pairs;
    for (const auto& l : tensors[bi].legs())
      if (tensors[bj].has_leg(l)) pairs.emplace_back(l, l);
    DenseTensor merged = contract(tensors[bi], tensors[bj], pairs);
    tensors.erase(tensors.begin() + bj);
    tensors[bi] = std::move(merged);
  }
  return tensors.front();
}

DenseTensor apply_on_leg(const DenseTensor& t, const std::string& leg, const Mat& op) {
  return apply_on_legs(t, {leg}, op);
}

DenseTensor apply_on_legs(const DenseTensor& t, const std::vector<std::string>& legs, const Mat& op) {
  std::vector<std::string> rest;
  std::vector<int> lshape, rshape;
  for (const auto& l : legs) lshape.push_back(t.dim(l));
  for (int i = 0; i < t.rank(); ++i)
    if (std::find(legs.begin(), legs.end(), t.legs()[i]) == legs.end()) {
      rest.push_back(t.legs()[i]);
      rshape.push_back(t.shape()[i]);
    }
  Mat m = t.matrix(legs, rest);
  if (op.cols() != m.rows() || op.rows() != m.rows())
    throw Error(ErrorKind::DimensionMismatch, "operator size does not match leg dimension");
  return DenseTensor::from_matrix(op * m, legs, lshape, rest, rshape).permuted(t.legs());
}

cplx inner(const DenseTensor& a, const DenseTensor& b) {
  DenseTensor bp = b.permuted(a.legs());
  if (bp.shape() != a.shape()) throw Error(ErrorKind::DimensionMismatch, "shape mismatch in inner product");
  cplx s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a.data()[i]) * bp.data()[i];
  return s;
}

double fidelity(const DenseTensor& a, const DenseTensor& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0 || nb == 0) return 0.0;
  return std::norm(inner(a, b)) / (na * na * nb * nb);
}

PolarResult polar_decompose(const MatrixView& m, double tol) {
  const Mat mm = m.to_matrix();
  auto p = linalg::polar(mm, tol);
  std::vector<std::string> cp;
  for (const auto& l : m.col_legs) cp.push_back(primed(l));
  PolarResult r;
  r.V = DenseTensor::from_matrix(p.V, m.row_legs, m.row_shape(), cp, m.col_shape());
  r.Q = DenseTensor::from_matrix(p.Q, cp, m.col_shape(), m.col_legs, m.col_shape());
  r.rank = p.rank;
  return r;
}

EigResult eig_hermitian(const MatrixView& m, double herm_tol) {
  const Mat mm = m.to_matrix();
  if (mm.rows() != mm.cols()) throw Error(ErrorKind::NotHermitian, "eig_hermitian needs a square view");
  const double scale = std::max(1.0, mm.norm());
  if ((mm - mm.adjoint()).norm() > herm_tol * scale)
    throw Error(ErrorKind::NotHermitian, "matrix is not Hermitian within tolerance");
  auto e = linalg::eigh(mm);
  EigResult r;
  r.values.assign(e.values.data(), e.values.data() + e.values.size());
  r.vectors = DenseTensor::from_matrix(e.vectors, m.row_legs, m.row_shape(), {"k"}, {static_cast<int>(mm.cols())});
  return r;
}

DenseTensor pseudo_inverse(const MatrixView& m, double tol) {
  if (!(tol > 0)) throw Error(ErrorKind::InvalidArgument, "pseudo_inverse tolerance must be positive");
  const Mat p = linalg::pinv(m.to_matrix(), tol);
  return DenseTensor::from_matrix(p, m.col_legs, m.col_shape(), m.row_legs, m.row_shape());
}

}  // namespace mftn
