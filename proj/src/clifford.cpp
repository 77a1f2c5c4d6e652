#include "mftn/clifford.hpp"

#include <cmath>
#include <numbers>
#include <set>

#include "mftn/basis.hpp"
#include "mftn/linalg.hpp"

namespace mftn {

namespace {

int mod(int a, int m) { return ((a % m) + m) % m; }

int ipow(int b, int e) {
  int r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

int inv_mod(int a, int p) {
  a = mod(a, p);
  for (int x = 1; x < p; ++x)
    if ((a * x) % p == 1) return x;
  throw Error(ErrorKind::NonPrime, "no modular inverse of " + std::to_string(a) + " mod " + std::to_string(p));
}

std::vector<int> digits(long idx, int n, int d) {
  std::vector<int> out(n);
  for (int j = n - 1; j >= 0; --j) {
    out[j] = static_cast<int>(idx % d);
    idx /= d;
  }
  return out;
}

long undigits(const std::vector<int>& dig, int d) {
  long idx = 0;
  for (int x : dig) idx = idx * d + x;
  return idx;
}

cplx omega_pow(int k, int d) { return std::polar(1.0, 2.0 * std::numbers::pi * mod(k, d) / d); }

// Integer k with c = omega^k, if c is a d-th root of unity.
std::optional<int> log_omega(cplx c, int d, double tol = 1e-8) {
  const int k = mod(static_cast<int>(std::lround(std::arg(c) * d / (2.0 * std::numbers::pi))), d);
  if (std::abs(c - omega_pow(k, d)) > tol) return std::nullopt;
  return k;
}

Mat embed(const Mat& g, int qudit, int n, int d) {
  return linalg::kron({Mat::Identity(ipow(d, qudit), ipow(d, qudit)), g,
                       Mat::Identity(ipow(d, n - qudit - 1), ipow(d, n - qudit - 1))});
}

Mat fourier_gate(int d) { return fourier_matrix(d).transpose() / std::sqrt(static_cast<double>(d)); }

Mat phase_gate(int d) {
  Mat s = Mat::Zero(d, d);
  for (int j = 0; j < d; ++j) {
    if (d == 2) s(j, j) = j ? cplx(0, 1) : cplx(1, 0);
    else s(j, j) = omega_pow(j * (j - 1) / 2, d);
  }
  return s;
}

Mat multiply_gate(int a, int d) {
  Mat m = Mat::Zero(d, d);
  for (int j = 0; j < d; ++j) m(mod(a * j, d), j) = 1.0;
  return m;
}

Mat sum_gate(int control, int target, int m, int n, int d) {
  const long N = ipow(d, n);
  Mat g = Mat::Zero(N, N);
  for (long x = 0; x < N; ++x) {
    auto dig = digits(x, n, d);
    dig[target] = mod(dig[target] + m * dig[control], d);
    g(undigits(dig, d), x) = 1.0;
  }
  return g;
}

Mat matpow(const Mat& m, int p) {
  Mat r = Mat::Identity(m.rows(), m.cols());
  for (int i = 0; i < p; ++i) r = r * m;
  return r;
}

bool is_single_generator(const PauliVector& p, int* slot, char* gen) {
  int nz = 0;
  for (int j = 0; j < p.n; ++j) {
    if (p.v[j] == 0 && p.w[j] == 0) continue;
    ++nz;
    if (p.v[j] == 1 && p.w[j] == 0) *gen = 'X';
    else if (p.v[j] == 0 && p.w[j] == 1) *gen = 'Z';
    else return false;
    *slot = j;
  }
  return nz == 1 && p.phase_exp == 0;
}

}  // namespace

bool is_prime(int d) {
  if (d < 2) return false;
  for (int k = 2; k * k <= d; ++k)
    if (d % k == 0) return false;
  return true;
}

PauliVector PauliVector::identity(int n, int d) {
  PauliVector p;
  p.n = n;
  p.d = d;
  p.v.assign(n, 0);
  p.w.assign(n, 0);
  return p;
}

PauliVector PauliVector::x_on(int n, int d, int slot) {
  auto p = identity(n, d);
  p.v[slot] = 1;
  return p;
}

PauliVector PauliVector::z_on(int n, int d, int slot) {
  auto p = identity(n, d);
  p.w[slot] = 1;
  return p;
}

void PauliVector::normalize() {
  if (static_cast<int>(v.size()) != n || static_cast<int>(w.size()) != n)
    throw Error(ErrorKind::InvalidArgument, "Pauli vector length does not match n");
  for (auto& x : v) x = mod(x, d);
  for (auto& x : w) x = mod(x, d);
  phase_exp = mod(phase_exp, 2 * d);
}

bool PauliVector::operator==(const PauliVector& o) const {
  PauliVector a = *this, b = o;
  a.normalize();
  b.normalize();
  return a.n == b.n && a.d == b.d && a.v == b.v && a.w == b.w && a.phase_exp == b.phase_exp;
}

std::string PauliVector::str() const {
  std::string s = "e^(i pi " + std::to_string(phase_exp) + "/" + std::to_string(d) + ")";
  for (int j = 0; j < n; ++j) s += " X" + std::to_string(v[j]) + "Z" + std::to_string(w[j]);
  return s;
}

Mat pauli_to_matrix(const PauliVector& p0) {
  PauliVector p = p0;
  p.normalize();
  if (p.d < 2 || p.n < 1) throw Error(ErrorKind::InvalidArgument, "Pauli needs d >= 2 and n >= 1");
  const long N = ipow(p.d, p.n);
  Mat m = Mat::Zero(N, N);
  const cplx ph = std::polar(1.0, std::numbers::pi * p.phase_exp / p.d);
  for (long x = 0; x < N; ++x) {
    auto dig = digits(x, p.n, p.d);
    int e = 0;
    for (int j = 0; j < p.n; ++j) {
      e += p.w[j] * dig[j];
      dig[j] = mod(dig[j] + p.v[j], p.d);
    }
    m(undigits(dig, p.d), x) = ph * omega_pow(e, p.d);
  }
  return m;
}

int commutation_exponent(const PauliVector& p, const PauliVector& q) {
  int e = 0;
  for (int j = 0; j < p.n; ++j) e += q.w[j] * p.v[j] - p.w[j] * q.v[j];
  return mod(e, p.d);
}

PauliVector pauli_product(const PauliVector& p, const PauliVector& q) {
  PauliVector r = PauliVector::identity(p.n, p.d);
  int e = 0;
  for (int j = 0; j < p.n; ++j) {
    e += p.w[j] * q.v[j];
    r.v[j] = p.v[j] + q.v[j];
    r.w[j] = p.w[j] + q.w[j];
  }
  r.phase_exp = p.phase_exp + q.phase_exp + 2 * e;
  r.normalize();
  return r;
}

std::optional<PauliDecomposition> decompose_pauli(const Mat& m, int n, int d, double tol) {
  const long N = ipow(d, n);
  if (m.rows() != N || m.cols() != N) return std::nullopt;
  const double nm = m.norm();
  if (nm == 0) return std::nullopt;
  Eigen::Index r0 = 0;
  m.col(0).cwiseAbs().maxCoeff(&r0);
  const cplx c0 = m(r0, 0);
  if (std::abs(c0) < 1e-12) return std::nullopt;
  PauliDecomposition out;
  out.pauli = PauliVector::identity(n, d);
  out.pauli.v = digits(r0, n, d);
  for (int j = 0; j < n; ++j) {
    std::vector<int> e(n, 0);
    e[j] = 1;
    const long col = undigits(e, d);
    std::vector<int> row = e;
    for (int k = 0; k < n; ++k) row[k] = mod(row[k] + out.pauli.v[k], d);
    const cplx ratio = m(undigits(row, d), col) / c0;
    out.pauli.w[j] = mod(static_cast<int>(std::lround(std::arg(ratio) * d / (2.0 * std::numbers::pi))), d);
  }
  out.coefficient = c0;
  if ((m - c0 * pauli_to_matrix(out.pauli)).norm() > tol * nm) return std::nullopt;
  return out;
}

std::optional<PauliVector> as_pauli(const Mat& m, int n, int d, double tol) {
  auto dec = decompose_pauli(m, n, d, tol);
  if (!dec) return std::nullopt;
  const cplx c = dec->coefficient;
  if (std::abs(std::abs(c) - 1.0) > tol) return std::nullopt;
  const int p = mod(static_cast<int>(std::lround(std::arg(c) * d / std::numbers::pi)), 2 * d);
  if (std::abs(c - std::polar(1.0, std::numbers::pi * p / d)) > 1e-7) return std::nullopt;
  PauliVector out = dec->pauli;
  out.phase_exp = p;
  return out;
}

void PartialCliffordMap::add(int slot, char generator, const PauliVector& target) {
  Image im;
  im.source = generator == 'X' ? PauliVector::x_on(n, d, slot) : PauliVector::z_on(n, d, slot);
  im.target = target;
  images.push_back(im);
}

AdmissibilityReport check_admissible(const PartialCliffordMap& m) {
  AdmissibilityReport r;
  std::set<std::pair<int, char>> seen;
  for (const auto& im : m.images) {
    int slot = -1;
    char gen = '?';
    if (im.source.n != m.n || im.source.d != m.d || im.target.n != m.n || im.target.d != m.d) {
      r.sources_valid = false;
      r.failures.push_back("image has mismatched n or d");
      continue;
    }
    if (!is_single_generator(im.source, &slot, &gen)) {
      r.sources_valid = false;
      r.failures.push_back("source " + im.source.str() + " is not a single-slot X or Z generator");
    } else if (!seen.insert({slot, gen}).second) {
      r.sources_valid = false;
      r.failures.push_back("duplicate source generator");
    }
  }
  if (!r.sources_valid) return r;
  const int d = m.d;
  for (std::size_t i = 0; i < m.images.size(); ++i)
    for (std::size_t j = i + 1; j < m.images.size(); ++j) {
      const int es = commutation_exponent(m.images[i].source, m.images[j].source);
      const int et = commutation_exponent(m.images[i].target, m.images[j].target);
      if (es != et) {
        r.commutation_ok = false;
        r.failures.push_back("commutation phase mismatch between images " + std::to_string(i) + " and " +
                             std::to_string(j) + ": source omega^" + std::to_string(es) + ", target omega^" +
                             std::to_string(et));
      }
    }
  for (std::size_t i = 0; i < m.images.size(); ++i) {
    PauliVector t = m.images[i].target;
    t.normalize();
    long wv = 0;
    for (int j = 0; j < t.n; ++j) wv += static_cast<long>(t.w[j]) * t.v[j];
    // (c XZ(a))^d = exp(i pi (p + (w.v)(d-1))) I
    if ((t.phase_exp + wv * (d - 1)) % 2 != 0) {
      r.order_ok = false;
      r.failures.push_back("target " + std::to_string(i) + " has order 2d, not d");
    }
  }
  return r;
}

Mat synthesize_clifford(const PartialCliffordMap& m) {
  const int n = m.n, d = m.d;
  if (!is_prime(d)) throw Error(ErrorKind::NonPrime, "Clifford synthesis is implemented for prime d only");
  auto rep = check_admissible(m);
  if (!rep.pass()) {
    std::string msg = "inadmissible Clifford map";
    for (const auto& f : rep.failures) msg += "; " + f;
    throw Error(ErrorKind::Inadmissible, msg);
  }
  const long N = ipow(d, n);
  Mat C = Mat::Identity(N, N);
  std::vector<Mat> T;
  for (const auto& im : m.images) T.push_back(pauli_to_matrix(im.target));

  auto apply = [&](const Mat& G) {
    C = G * C;
    for (auto& t : T) t = G * t * G.adjoint();
  };
  auto current = [&](int idx) {
    auto dec = decompose_pauli(T[idx], n, d);
    if (!dec) throw Error(ErrorKind::Inadmissible, "internal: conjugated target left the Pauli group");
    return dec->pauli;
  };

  // slot -> (image index for X, image index for Z)
  std::vector<std::pair<int, int>> slots(n, {-1, -1});
  for (std::size_t i = 0; i < m.images.size(); ++i) {
    int slot = 0;
    char gen = 'X';
    is_single_generator(m.images[i].source, &slot, &gen);
    (gen == 'X' ? slots[slot].first : slots[slot].second) = static_cast<int>(i);
  }
  std::vector<int> order;
  for (int k = 0; k < n; ++k)
    if (slots[k].first >= 0 && slots[k].second >= 0) order.push_back(k);
  int partial = 0;
  for (int k = 0; k < n; ++k)
    if ((slots[k].first >= 0) != (slots[k].second >= 0)) {
      order.push_back(k);
      ++partial;
    }
  if (partial > 1) throw Error(ErrorKind::Inadmissible, "at most one slot may carry a single image");

  std::vector<bool> fixed(n, false);
  const Mat F = fourier_gate(d), S = phase_gate(d);

  // Conjugates the image idx to X_k, touching only unfixed qudits.
  auto reduce_to_x = [&](int idx, int k) {
    PauliVector p = current(idx);
    for (int j = 0; j < n; ++j) {
      if (fixed[j] || (p.v[j] == 0 && p.w[j] == 0)) continue;
      if (p.v[j] == 0) {
        apply(embed(F, j, n, d));
        p = current(idx);
      }
      if (p.w[j] != 0) {
        apply(embed(matpow(S, mod(-p.w[j] * inv_mod(p.v[j], d), d)), j, n, d));
        p = current(idx);
      }
    }
    if (p.v[k] == 0) {
      for (int j = 0; j < n; ++j)
        if (j != k && !fixed[j] && p.v[j] != 0) {
          apply(sum_gate(j, k, 1, n, d));
          break;
        }
      p = current(idx);
    }
    for (int j = 0; j < n; ++j)
      if (j != k && !fixed[j] && p.v[j] != 0) apply(sum_gate(k, j, mod(-p.v[j] * inv_mod(p.v[k], d), d), n, d));
    p = current(idx);
    if (p.v[k] != 1) apply(embed(multiply_gate(inv_mod(p.v[k], d), d), k, n, d));
    p = current(idx);
    if (!(p == PauliVector::x_on(n, d, k))) throw Error(ErrorKind::Inadmissible, "internal: X reduction failed");
  };

  // Conjugates the image idx to Z_k while keeping X_k fixed.
  auto reduce_z_keep_x = [&](int idx, int k) {
    PauliVector p = current(idx);
    for (int j = 0; j < n; ++j) {
      if (j == k || fixed[j] || (p.v[j] == 0 && p.w[j] == 0)) continue;
      if (p.v[j] == 0) {
        apply(embed(F, j, n, d));
        p = current(idx);
      }
      if (p.w[j] != 0) {
        apply(embed(matpow(S, mod(-p.w[j] * inv_mod(p.v[j], d), d)), j, n, d));
        p = current(idx);
      }
      apply(embed(F, j, n, d));
      p = current(idx);
      apply(sum_gate(j, k, p.w[j], n, d));
      p = current(idx);
    }
    if (p.v[k] != 0) {
      apply(embed(F.adjoint() * matpow(S, p.v[k]) * F, k, n, d));
      p = current(idx);
    }
    if (!(p == PauliVector::z_on(n, d, k))) throw Error(ErrorKind::Inadmissible, "internal: Z reduction failed");
  };

  for (int k : order) {
    const int ix = slots[k].first, iz = slots[k].second;
    if (ix >= 0) reduce_to_x(ix, k);
    if (ix >= 0 && iz >= 0) reduce_z_keep_x(iz, k);
    if (ix < 0 && iz >= 0) {
      reduce_to_x(iz, k);
      apply(embed(F, k, n, d));
    }
    // Remaining unit phases are d-th roots of unity; a Pauli on slot k removes them.
    int a = 0, b = 0;
    if (ix >= 0) {
      auto lx = log_omega(decompose_pauli(T[ix], n, d)->coefficient, d);
      if (!lx) throw Error(ErrorKind::Inadmissible, "image phase is not a root of unity");
      b = mod(-*lx, d);
    }
    if (iz >= 0) {
      auto lz = log_omega(decompose_pauli(T[iz], n, d)->coefficient, d);
      if (!lz) throw Error(ErrorKind::Inadmissible, "image phase is not a root of unity");
      a = *lz;
    }
    apply(embed(matpow(shift_matrix(d), a) * matpow(clock_matrix(d), b), k, n, d));
    fixed[k] = true;
  }

  Mat U = C.adjoint();
  for (const auto& im : m.images) {
    const Mat lhs = U * pauli_to_matrix(im.source) * U.adjoint();
    if ((lhs - pauli_to_matrix(im.target)).norm() > 1e-8 * N)
      throw Error(ErrorKind::Inadmissible, "internal: synthesized unitary misses an image");
  }
  return U;
}

bool is_clifford(const Mat& U, int n, int d, double tol) {
  const long N = ipow(d, n);
  if (U.rows() != N || U.cols() != N) throw Error(ErrorKind::DimensionMismatch, "unitary has wrong dimension");
  if (linalg::unitarity_residual(U) > 1e-8 * N) throw Error(ErrorKind::NotUnitary, "is_clifford needs a unitary");
  for (int k = 0; k < n; ++k)
    for (const auto& g : {PauliVector::x_on(n, d, k), PauliVector::z_on(n, d, k)}) {
      auto dec = decompose_pauli(U * pauli_to_matrix(g) * U.adjoint(), n, d, tol);
      if (!dec || std::abs(std::abs(dec->coefficient) - 1.0) > tol) return false;
    }
  return true;
}

int stabilizer_count(const Vec& psi0, int n, int d, double tol) {
  const long N = ipow(d, n);
  if (psi0.size() != N) throw Error(ErrorKind::DimensionMismatch, "state has wrong dimension");
  const Vec psi = psi0 / psi0.norm();
  int count = 0;
  const long total = static_cast<long>(N) * N;
  for (long code = 0; code < total; ++code) {
    PauliVector p = PauliVector::identity(n, d);
    p.v = digits(code / N, n, d);
    p.w = digits(code % N, n, d);
    Vec out = Vec::Zero(N);
    for (long x = 0; x < N; ++x) {
      auto dig = digits(x, n, d);
      int e = 0;
      for (int j = 0; j < n; ++j) {
        e += p.w[j] * dig[j];
        dig[j] = mod(dig[j] + p.v[j], d);
      }
      out(undigits(dig, d)) = omega_pow(e, d) * psi(x);
    }
    if (std::abs(psi.dot(out)) > 1.0 - tol) ++count;
  }
  return count;
}

bool is_stabilizer_state(const Vec& psi, int n, int d, double tol) {
  return stabilizer_count(psi, n, d, tol) == ipow(d, n);
}

}  // namespace mftn
