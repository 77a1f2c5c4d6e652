#include "mftn/basis.hpp"

#include <cmath>
#include <numbers>
#include <set>

#include "mftn/linalg.hpp"

namespace mftn {

namespace {

std::string wh_label(int v, int w) {
  if (v == 0 && w == 0) return "I";
  std::string s;
  if (v) s += "X" + (v > 1 ? std::to_string(v) : std::string());
  if (w) s += "Z" + (w > 1 ? std::to_string(w) : std::string());
  return s;
}

Mat matrix_power(const Mat& m, int p) {
  Mat out = Mat::Identity(m.rows(), m.cols());
  for (int i = 0; i < p; ++i) out = out * m;
  return out;
}

void finalize_group(MFBasis& b) {
  b.table = group_table(b);
  b.is_group = b.table.has_value();
  if (b.is_group) b.cocycle = check_group_closure(b);
}

}  // namespace

Mat shift_matrix(int D) {
  Mat x = Mat::Zero(D, D);
  for (int a = 0; a < D; ++a) x((a + 1) % D, a) = 1.0;
  return x;
}

Mat clock_matrix(int D) {
  Mat z = Mat::Zero(D, D);
  for (int a = 0; a < D; ++a) z(a, a) = std::polar(1.0, 2.0 * std::numbers::pi * a / D);
  return z;
}

Mat fourier_matrix(int D) {
  Mat f(D, D);
  for (int j = 0; j < D; ++j)
    for (int k = 0; k < D; ++k) f(j, k) = std::polar(1.0, 2.0 * std::numbers::pi * ((j * k) % D) / D);
  return f;
}

int MFBasis::index_of(const std::string& label) const {
  for (int i = 0; i < size(); ++i)
    if (labels[i] == label) return i;
  if (weyl_heisenberg && dim == 2 && label == "Y") return index_of("XZ");
  throw Error(ErrorKind::InvalidArgument, "unknown basis label '" + label + "'");
}

std::optional<std::pair<int, cplx>> MFBasis::find(const Mat& m, double tol) const {
  const double nm = m.norm();
  if (nm == 0 || m.rows() != dim || m.cols() != dim) return std::nullopt;
  for (int k = 0; k < size(); ++k) {
    const cplx c = (elements[k].adjoint() * m).trace() / static_cast<double>(dim);
    if (std::abs(c) < 1e-12) continue;
    if ((m - c * elements[k]).norm() <= tol * nm) return std::make_pair(k, c);
  }
  return std::nullopt;
}

int MFBasis::identity_index() const {
  auto f = find(Mat::Identity(dim, dim));
  if (!f) throw Error(ErrorKind::InvalidBasis, "basis does not contain the identity");
  return f->first;
}

const GroupTable& MFBasis::group() const {
  if (!table) throw Error(ErrorKind::NotGroup, "basis is not closed under multiplication");
  return *table;
}

int MFBasis::inverse_index(int i) const {
  auto f = find(elements[i].adjoint());
  if (!f) throw Error(ErrorKind::NotGroup, "inverse not in basis");
  return f->first;
}

void validate_basis(const MFBasis& b, double tol) {
  const int D = b.dim;
  if (D < 1) throw Error(ErrorKind::InvalidBasis, "basis dimension must be positive");
  if (b.size() != D * D) throw Error(ErrorKind::InvalidBasis, "basis must have D^2 elements");
  if (b.labels.size() != b.elements.size()) throw Error(ErrorKind::InvalidBasis, "label count mismatch");
  std::set<std::string> uniq(b.labels.begin(), b.labels.end());
  if (uniq.size() != b.labels.size()) throw Error(ErrorKind::InvalidBasis, "duplicate basis labels");
  Mat gram(D * D, D * D);
  for (int i = 0; i < b.size(); ++i) {
    const Mat& p = b.elements[i];
    if (p.rows() != D || p.cols() != D) throw Error(ErrorKind::InvalidBasis, "element has wrong size");
    if (linalg::unitarity_residual(p) > tol * D) throw Error(ErrorKind::InvalidBasis, "element '" + b.labels[i] + "' is not unitary");
  }
  for (int i = 0; i < b.size(); ++i)
    for (int j = 0; j < b.size(); ++j) gram(i, j) = (b.elements[i].adjoint() * b.elements[j]).trace() / static_cast<double>(D);
  if ((gram - Mat::Identity(D * D, D * D)).norm() > tol * D * D)
    throw Error(ErrorKind::InvalidBasis, "elements are not orthogonal: Tr(P_i^dag P_j) != D delta_ij");
}

std::optional<GroupTable> group_table(const MFBasis& b, double tol) {
  GroupTable t;
  t.n = b.size();
  t.index.resize(static_cast<std::size_t>(t.n) * t.n);
  t.phase.resize(t.index.size());
  for (int i = 0; i < t.n; ++i)
    for (int j = 0; j < t.n; ++j) {
      auto f = b.find(b.elements[i] * b.elements[j], tol);
      if (!f) return std::nullopt;
      t.index[static_cast<std::size_t>(i) * t.n + j] = f->first;
      t.phase[static_cast<std::size_t>(i) * t.n + j] = f->second;
    }
  return t;
}

std::optional<CocycleTable> check_group_closure(const MFBasis& b, double tol) {
  auto t = group_table(b, tol);
  if (!t) return std::nullopt;
  CocycleTable c;
  c.dim_sq = t->n;
  c.phases.resize(static_cast<std::size_t>(c.dim_sq) * c.dim_sq, 0.0);
  for (int j = 0; j < c.dim_sq; ++j)
    for (int k = 0; k < c.dim_sq; ++k) {
      // P_k P_j = omega(j,k) P_j P_k; defined when both products are the same element.
      if (t->prod(k, j) != t->prod(j, k)) continue;
      c.phases[static_cast<std::size_t>(j) * c.dim_sq + k] = t->prod_phase(k, j) / t->prod_phase(j, k);
    }
  return c;
}

MFBasis weyl_heisenberg_basis(int D) {
  if (D < 2) throw Error(ErrorKind::InvalidArgument, "Weyl-Heisenberg basis needs D >= 2");
  const Mat X = shift_matrix(D), Z = clock_matrix(D);
  MFBasis b;
  b.dim = D;
  b.weyl_heisenberg = true;
  for (int w = 0; w < D; ++w)
    for (int v = 0; v < D; ++v) {
      b.elements.push_back(matrix_power(X, v) * matrix_power(Z, w));
      b.labels.push_back(wh_label(v, w));
    }
  validate_basis(b);
  finalize_group(b);
  return b;
}

MFBasis composite_basis(const MFBasis& b1, const MFBasis& b2, CompositeMode mode) {
  validate_basis(b1);
  validate_basis(b2);
  MFBasis b;
  b.dim = b1.dim * b2.dim;
  if (mode == CompositeMode::Product) {
    if (!b1.is_group.value_or(false) || !b2.is_group.value_or(false))
      throw Error(ErrorKind::NotGroup, "product construction needs group bases");
    for (int i = 0; i < b1.size(); ++i)
      for (int j = 0; j < b2.size(); ++j) {
        b.elements.push_back(linalg::kron(b1.elements[i], b2.elements[j]));
        b.labels.push_back(b1.labels[i] + "*" + b2.labels[j]);
      }
  } else {
    if (!b1.weyl_heisenberg || !b2.weyl_heisenberg)
      throw Error(ErrorKind::InvalidBasis, "mixed clock construction needs Weyl-Heisenberg inputs");
    const int d1 = b1.dim, d2 = b2.dim, d = d1 * d2;
    const Mat gx1 = linalg::kron(shift_matrix(d1), Mat::Identity(d2, d2));
    const Mat gx2 = linalg::kron(Mat::Identity(d1, d1), shift_matrix(d2));
    const Mat gz = clock_matrix(d);
    for (int c = 0; c < d; ++c)
      for (int bb = 0; bb < d2; ++bb)
        for (int a = 0; a < d1; ++a) {
          b.elements.push_back(matrix_power(gx1, a) * matrix_power(gx2, bb) * matrix_power(gz, c));
          b.labels.push_back("x" + std::to_string(a) + "y" + std::to_string(bb) + "z" + std::to_string(c));
        }
  }
  try {
    validate_basis(b);
  } catch (const Error& e) {
    throw Error(ErrorKind::InvalidBasis, std::string("composite basis invalid: ") + e.what());
  }
  finalize_group(b);
  if (!b.is_group.value_or(false))
    throw Error(ErrorKind::NotGroup, "composite generators do not close into D^2 elements up to phase");
  return b;
}

MFBasis hadamard_latin_basis(const std::vector<Mat>& H, const std::vector<std::vector<int>>& lam) {
  const int D = static_cast<int>(H.size());
  if (D < 1) throw Error(ErrorKind::InvalidArgument, "need D Hadamard matrices");
  for (const auto& h : H) {
    if (h.rows() != D || h.cols() != D) throw Error(ErrorKind::InvalidArgument, "Hadamard matrix has wrong size");
    for (Eigen::Index i = 0; i < h.size(); ++i)
      if (std::abs(std::abs(h.data()[i]) - 1.0) > 1e-9) throw Error(ErrorKind::InvalidArgument, "Hadamard entries must be unimodular");
    if ((h * h.adjoint() - D * Mat::Identity(D, D)).norm() > 1e-9 * D)
      throw Error(ErrorKind::InvalidArgument, "H H^dag != D I");
  }
  if (static_cast<int>(lam.size()) != D) throw Error(ErrorKind::InvalidArgument, "Latin square has wrong size");
  for (int j = 0; j < D; ++j) {
    if (static_cast<int>(lam[j].size()) != D) throw Error(ErrorKind::InvalidArgument, "Latin square has wrong size");
    std::set<int> row(lam[j].begin(), lam[j].end()), col;
    for (int k = 0; k < D; ++k) col.insert(lam[k][j]);
    for (int k = 0; k < D; ++k)
      if (lam[j][k] < 0 || lam[j][k] >= D) throw Error(ErrorKind::InvalidArgument, "Latin entry out of range");
    if (static_cast<int>(row.size()) != D || static_cast<int>(col.size()) != D)
      throw Error(ErrorKind::InvalidArgument, "lambda is not a Latin square");
  }
  MFBasis b;
  b.dim = D;
  for (int j = 0; j < D; ++j)
    for (int i = 0; i < D; ++i) {
      Mat u = Mat::Zero(D, D);
      for (int k = 0; k < D; ++k) u(lam[j][k], k) = H[j](i, k);
      b.elements.push_back(u);
      b.labels.push_back("U" + std::to_string(i) + "_" + std::to_string(j));
    }
  validate_basis(b);
  finalize_group(b);
  return b;
}

MFBasis basis_from_spec(const std::string& spec) {
  auto pos = spec.find(':');
  if (pos == std::string::npos) throw Error(ErrorKind::Malformed, "basis spec must look like WH:D");
  const std::string kind = spec.substr(0, pos), rest = spec.substr(pos + 1);
  try {
    if (kind == "WH") return weyl_heisenberg_basis(std::stoi(rest));
    auto comma = rest.find(',');
    if (comma == std::string::npos) throw Error(ErrorKind::Malformed, "composite basis spec needs two dimensions");
    const int d1 = std::stoi(rest.substr(0, comma)), d2 = std::stoi(rest.substr(comma + 1));
    if (kind == "product") return composite_basis(weyl_heisenberg_basis(d1), weyl_heisenberg_basis(d2), CompositeMode::Product);
    if (kind == "mixed") return composite_basis(weyl_heisenberg_basis(d1), weyl_heisenberg_basis(d2), CompositeMode::MixedClock);
  } catch (const std::invalid_argument&) {
    throw Error(ErrorKind::Malformed, "bad basis dimension in '" + spec + "'");
  }
  throw Error(ErrorKind::Malformed, "unknown basis kind '" + kind + "'");
}

}  // namespace mftn
