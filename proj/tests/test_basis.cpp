#include <gtest/gtest.h>

#include <cmath>

#include "mftn/basis.hpp"
#include "util.hpp"

using namespace mftn;
using testutil::mpow;

namespace {

// Sum_i vec(P_i) vec(P_i)^dag / D == identity.
double completeness_residual(const MFBasis& b) {
  const int D = b.dim;
  Mat acc = Mat::Zero(D * D, D * D);
  for (const auto& p : b.elements) {
    Eigen::Map<const Eigen::VectorXcd> v(p.data(), D * D);
    acc += v * v.adjoint() / double(D);
  }
  return (acc - Mat::Identity(D * D, D * D)).norm();
}

// Brute-force closure: every product proportional (unit phase) to some element.
bool closed_by_scan(const MFBasis& b) {
  const int D = b.dim;
  for (const auto& p : b.elements)
    for (const auto& q : b.elements) {
      const Mat pq = p * q;
      bool found = false;
      for (const auto& r : b.elements) {
        const cplx ov = (r.adjoint() * pq).trace() / double(D);
        if (std::abs(std::abs(ov) - 1.0) < 1e-9) found = true;
      }
      if (!found) return false;
    }
  return true;
}

Mat fourier(int D) {
  Mat f(D, D);
  for (int i = 0; i < D; ++i)
    for (int k = 0; k < D; ++k) f(i, k) = std::polar(1.0, 2 * M_PI * i * k / D);
  return f;
}

std::vector<std::vector<int>> cyclic_latin(int D) {
  std::vector<std::vector<int>> l(D, std::vector<int>(D));
  for (int j = 0; j < D; ++j)
    for (int k = 0; k < D; ++k) l[j][k] = (j + k) % D;
  return l;
}

}  // namespace

TEST(WeylHeisenberg, QubitElementsAndOrthogonality) {
  const MFBasis b = weyl_heisenberg_basis(2);
  ASSERT_EQ(b.size(), 4);
  EXPECT_EQ(b.labels, (std::vector<std::string>{"I", "X", "Z", "XZ"}));
  const Mat X = testutil::X(2), Z = testutil::Z(2);
  EXPECT_LT((b.elements[1] - X).norm(), 1e-14);
  EXPECT_LT((b.elements[2] - Z).norm(), 1e-14);
  EXPECT_LT((b.elements[3] - X * Z).norm(), 1e-14);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      EXPECT_LT(std::abs((b.elements[i].adjoint() * b.elements[j]).trace() - (i == j ? 2.0 : 0.0)), 1e-13);
  ASSERT_TRUE(b.cocycle.has_value());
  EXPECT_LT(std::abs((*b.cocycle)(1, 2) - cplx(-1.0)), 1e-13);
}

TEST(WeylHeisenberg, QutritCompleteness) {
  const MFBasis b = weyl_heisenberg_basis(3);
  EXPECT_EQ(b.size(), 9);
  EXPECT_LT(completeness_residual(b), 1e-10);
  EXPECT_TRUE(b.is_group.value_or(false));
  EXPECT_TRUE(check_group_closure(b).has_value());
  EXPECT_TRUE(closed_by_scan(b));
}

TEST(WeylHeisenberg, ExactCocycle) {
  for (int D : {2, 3, 4, 5}) {
    const MFBasis b = weyl_heisenberg_basis(D);
    ASSERT_TRUE(b.cocycle.has_value());
    for (int j = 0; j < b.size(); ++j)
      for (int k = 0; k < b.size(); ++k) {
        const int v = j % D, w = j / D, v2 = k % D, w2 = k / D;
        const cplx expect = std::polar(1.0, 2 * M_PI * (v * w2 - w * v2) / D);
        EXPECT_LT(std::abs((*b.cocycle)(j, k) - expect), 1e-12) << D << " " << j << " " << k;
      }
  }
}

TEST(WeylHeisenberg, GeneratorRelations) {
  for (int D : {2, 3, 5}) {
    const Mat X = shift_matrix(D), Z = clock_matrix(D);
    EXPECT_LT((mpow(X, D) - Mat::Identity(D, D)).norm(), 1e-12);
    EXPECT_LT((mpow(Z, D) - Mat::Identity(D, D)).norm(), 1e-12);
    EXPECT_LT((Z * X - std::polar(1.0, 2 * M_PI / D) * X * Z).norm(), 1e-12);
  }
  EXPECT_THROW(weyl_heisenberg_basis(1), Error);
}

TEST(Composite, ProductOfQubits) {
  const MFBasis w = weyl_heisenberg_basis(2);
  const MFBasis p = composite_basis(w, w, CompositeMode::Product);
  EXPECT_EQ(p.dim, 4);
  EXPECT_EQ(p.size(), 16);
  EXPECT_LT(completeness_residual(p), 1e-10);
  ASSERT_TRUE(p.cocycle.has_value());
  // omega factorizes as omega_1 * omega_2 (index i * 4 + j for P_i (x) P_j).
  for (int a = 0; a < 16; ++a)
    for (int b = 0; b < 16; ++b) {
      const cplx expect = (*w.cocycle)(a / 4, b / 4) * (*w.cocycle)(a % 4, b % 4);
      EXPECT_LT(std::abs((*p.cocycle)(a, b) - expect), 1e-12);
      // Brute-force commutator phase from the matrices.
      const Mat& Pj = p.elements[a];
      const Mat& Pk = p.elements[b];
      const cplx brute = (Pj * Pk).conjugate().cwiseProduct(Pk * Pj).sum() / 4.0;  // Tr((P_j P_k)^dag P_k P_j) / D
      EXPECT_LT(std::abs(brute - expect), 1e-12);
    }
}

TEST(Composite, MixedClock) {
  const MFBasis w = weyl_heisenberg_basis(2);
  const MFBasis m = composite_basis(w, w, CompositeMode::MixedClock);
  EXPECT_EQ(m.dim, 4);
  EXPECT_EQ(m.size(), 16);
  EXPECT_LT(completeness_residual(m), 1e-10);
  EXPECT_TRUE(closed_by_scan(m));
  // The generators themselves are present.
  const Mat gz = clock_matrix(4);
  EXPECT_TRUE(m.find(gz).has_value());
  EXPECT_TRUE(m.find(testutil::kron_loops(shift_matrix(2), Mat::Identity(2, 2))).has_value());
  EXPECT_TRUE(m.find(testutil::kron_loops(Mat::Identity(2, 2), shift_matrix(2))).has_value());
}

TEST(HadamardLatin, QubitReproducesPaulis) {
  Mat H(2, 2);
  H << 1, 1, 1, -1;
  const MFBasis b = hadamard_latin_basis({H, H}, cyclic_latin(2));
  const MFBasis w = weyl_heisenberg_basis(2);
  for (const auto& p : w.elements) {
    const auto f = b.find(p);
    ASSERT_TRUE(f.has_value());
    EXPECT_NEAR(std::abs(f->second), 1.0, 1e-12);
  }
}

TEST(HadamardLatin, RejectsNonLatin) {
  Mat H(2, 2);
  H << 1, 1, 1, -1;
  EXPECT_THROW(hadamard_latin_basis({H, H}, {{0, 0}, {1, 1}}), Error);
  Mat bad = Mat::Identity(2, 2);
  EXPECT_THROW(hadamard_latin_basis({bad, bad}, cyclic_latin(2)), Error);
}

TEST(HadamardLatin, QutritFourierIsGroup) {
  const Mat F = fourier(3);
  const MFBasis b = hadamard_latin_basis({F, F, F}, cyclic_latin(3));
  EXPECT_TRUE(b.is_group.value_or(false));
  EXPECT_TRUE(closed_by_scan(b));
  EXPECT_LT(completeness_residual(b), 1e-10);
}

TEST(HadamardLatin, NonGroupLatinSquareIsNotClosed) {
  // Latin square of order 5 in which every element is its own inverse; no group of order 5 has that.
  const std::vector<std::vector<int>> lam = {
      {0, 1, 2, 3, 4}, {1, 0, 4, 2, 3}, {2, 3, 0, 4, 1}, {3, 4, 1, 0, 2}, {4, 2, 3, 1, 0}};
  const Mat F = fourier(5);
  const MFBasis b = hadamard_latin_basis({F, F, F, F, F}, lam);
  EXPECT_LT(completeness_residual(b), 1e-9);
  EXPECT_FALSE(closed_by_scan(b));
  EXPECT_FALSE(check_group_closure(b).has_value());
  EXPECT_FALSE(b.is_group.value_or(true));
}

TEST(Cocycle, AntisymmetryAndUnitDiagonal) {
  for (const std::string spec : {"WH:2", "WH:3", "product:2,2", "mixed:2,2"}) {
    const MFBasis b = basis_from_spec(spec);
    const auto c = check_group_closure(b);
    ASSERT_TRUE(c.has_value()) << spec;
    EXPECT_LT(completeness_residual(b), 1e-9);
    for (int j = 0; j < b.size(); ++j) {
      EXPECT_LT(std::abs((*c)(j, j) - 1.0), 1e-12);
      for (int k = 0; k < b.size(); ++k) {
        // mixed clock has pairs whose products land on different elements; omega is left at 0 there
        if (spec == "mixed:2,2" && std::abs((*c)(j, k)) == 0.0) continue;
        EXPECT_NEAR(std::abs((*c)(j, k)), 1.0, 1e-12) << spec << " " << j << " " << k;
        EXPECT_LT(std::abs((*c)(j, k) * (*c)(k, j) - 1.0), 1e-12) << spec;
      }
    }
  }
}

TEST(Validate, RejectsBrokenBases) {
  MFBasis b = weyl_heisenberg_basis(2);
  b.elements[3] = b.elements[1];
  EXPECT_THROW(validate_basis(b), Error);
  MFBasis c = weyl_heisenberg_basis(2);
  c.elements.pop_back();
  c.labels.pop_back();
  EXPECT_THROW(validate_basis(c), Error);
  MFBasis d = weyl_heisenberg_basis(2);
  d.elements[1] *= 2.0;
  EXPECT_THROW(validate_basis(d), Error);
  EXPECT_THROW(basis_from_spec("WH"), Error);
  EXPECT_THROW(basis_from_spec("bogus:3"), Error);
}

TEST(GroupTable, InverseAndIdentity) {
  const MFBasis b = weyl_heisenberg_basis(3);
  const int e = b.identity_index();
  EXPECT_EQ(b.labels[e], "I");
  for (int i = 0; i < b.size(); ++i) {
    const int inv = b.inverse_index(i);
    const Mat prod = b.elements[i] * b.elements[inv];
    EXPECT_LT(testutil::prop_residual(prod, Mat::Identity(3, 3)), 1e-12);
  }
}
