#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "mftn/linalg.hpp"
#include "mftn/tensor.hpp"
#include "util.hpp"

using namespace mftn;
using testutil::random_mat;
using testutil::random_tensor;

TEST(DenseTensor, RejectsBadShapes) {
  EXPECT_THROW(DenseTensor({"a", "b"}, {2}), Error);
  EXPECT_THROW(DenseTensor({"a", "a"}, {2, 2}), Error);
  EXPECT_THROW(DenseTensor({"a"}, {2}, {1.0, 2.0, 3.0}), Error);
  EXPECT_THROW(DenseTensor({"a"}, {0}), Error);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(DenseTensor({"a"}, {1}, {cplx(nan, 0)}), Error);
}

TEST(DenseTensor, RowMajorLayoutAndPermute) {
  DenseTensor t({"a", "b"}, {2, 3}, {0.0, 1.0, 2.0, 3.0, 4.0, 5.0});
  EXPECT_EQ(t.at({1, 2}), cplx(5.0));
  const DenseTensor p = t.permuted({"b", "a"});
  EXPECT_EQ(p.shape(), (std::vector<int>{3, 2}));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_EQ(p.at({j, i}), t.at({i, j}));
  EXPECT_THROW(t.axis("c"), Error);
}

TEST(Contract, IdentityRelabels) {
  DenseTensor id({"a", "b"}, {2, 2}, {1.0, 0.0, 0.0, 1.0});
  DenseTensor v({"b"}, {2}, {cplx(0.3, 0.1), cplx(-2.0, 0.5)});
  const DenseTensor r = contract(id, v, {{"b", "b"}});
  ASSERT_EQ(r.legs(), std::vector<std::string>{"a"});
  EXPECT_EQ(r.data(), v.data());
}

TEST(Contract, BellMapOfX) {
  // sum_ab (P)_ab |a>|b> with P = X, read through an identity on the second leg.
  DenseTensor x({"a", "c"}, {2, 2}, {0.0, 1.0, 1.0, 0.0});
  DenseTensor id({"c", "b"}, {2, 2}, {1.0, 0.0, 0.0, 1.0});
  const DenseTensor s = contract(x, id, {{"c", "c"}});
  EXPECT_EQ(s.data(), (std::vector<cplx>{0.0, 1.0, 1.0, 0.0}));  // |01> + |10>
}

TEST(Contract, FullSelfContractionIsSquaredNorm) {
  std::mt19937_64 rng(11);
  const DenseTensor t = random_tensor(rng, {"i", "j", "k"}, {2, 3, 4});
  const DenseTensor r = contract(t, t.conj(), {{"i", "i"}, {"j", "j"}, {"k", "k"}});
  double explicit_sum = 0;
  for (const auto& z : t.data()) explicit_sum += std::norm(z);
  ASSERT_EQ(r.rank(), 0);
  EXPECT_NEAR(r.data()[0].real(), explicit_sum, 1e-10 * explicit_sum);
  EXPECT_NEAR(r.data()[0].imag(), 0.0, 1e-10 * explicit_sum);
}

TEST(Contract, NoPairsIsOuterProduct) {
  DenseTensor a({"a"}, {2}, {1.0, cplx(0, 2)});
  DenseTensor b({"b"}, {3}, {3.0, 4.0, 5.0});
  const DenseTensor o = contract(a, b, {});
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_EQ(o.at({i, j}), a.data()[i] * b.data()[j]);
}

TEST(Contract, Errors) {
  DenseTensor a({"a"}, {2});
  DenseTensor b({"b"}, {3});
  try {
    contract(a, b, {{"a", "b"}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
  }
  try {
    contract(a, b, {{"z", "b"}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnknownLeg);
  }
}

TEST(Contract, AssociativeProperty) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const DenseTensor t1 = random_tensor(rng, {"a", "b", "x"}, {2, 3, 2});
    const DenseTensor t2 = random_tensor(rng, {"b", "c"}, {3, 4});
    const DenseTensor t3 = random_tensor(rng, {"c", "d", "x2"}, {4, 2, 3});
    const DenseTensor left = contract(contract(t1, t2, {{"b", "b"}}), t3, {{"c", "c"}});
    const DenseTensor right = contract(t1, contract(t2, t3, {{"c", "c"}}), {{"b", "b"}});
    const DenseTensor diff = left - right.permuted(left.legs());
    EXPECT_LT(diff.norm(), 1e-10 * left.norm());
  }
}

TEST(Contract, MatchesExplicitLoops) {
  std::mt19937_64 rng(6);
  const DenseTensor A = random_tensor(rng, {"i", "k", "l"}, {2, 3, 2});
  const DenseTensor B = random_tensor(rng, {"l", "j", "k"}, {2, 4, 3});
  const DenseTensor C = contract(A, B, {{"k", "k"}, {"l", "l"}});
  ASSERT_EQ(C.legs(), (std::vector<std::string>{"i", "j"}));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 4; ++j) {
      cplx s = 0;
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 2; ++l) s += A.at({i, k, l}) * B.at({l, j, k});
      EXPECT_LT(std::abs(C.at({i, j}) - s), 1e-12);
    }
}

TEST(Polar, UnitaryInput) {
  std::mt19937_64 rng(2);
  const Mat U = linalg::nearest_unitary(random_mat(rng, 3, 3));
  const DenseTensor t = DenseTensor::from_matrix(U, {"r"}, {3}, {"c"}, {3});
  const PolarResult p = polar_decompose({t, {"r"}, {"c"}});
  EXPECT_LT((p.V.matrix({"r"}, {primed("c")}) - U).norm(), 1e-10);
  EXPECT_LT((p.Q.matrix({primed("c")}, {"c"}) - Mat::Identity(3, 3)).norm(), 1e-10);
  EXPECT_EQ(p.rank, 3);
}

TEST(Polar, RankOneDiagonal) {
  Mat m = Mat::Zero(2, 2);
  m(0, 0) = 2;
  const Mat Q = linalg::polar(m).Q;
  EXPECT_LT((Q - m).norm(), 1e-12);
  const linalg::Polar p = linalg::polar(m);
  Mat proj = Mat::Zero(2, 2);
  proj(0, 0) = 1;
  EXPECT_LT((p.V.adjoint() * p.V - proj).norm(), 1e-12);
  EXPECT_EQ(p.rank, 1);
}

TEST(Polar, RandomProperty) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Mat m = random_mat(rng, 4, 4);
    if (trial % 2) m.col(3) = m.col(0) + m.col(1);  // rank deficient half the time
    const DenseTensor t = DenseTensor::from_matrix(m, {"r"}, {4}, {"c1", "c2"}, {2, 2});
    const PolarResult p = polar_decompose({t, {"r"}, {"c1", "c2"}});
    const Mat V = p.V.matrix({"r"}, {primed("c1"), primed("c2")});
    const Mat Q = p.Q.matrix({primed("c1"), primed("c2")}, {"c1", "c2"});
    EXPECT_LT((m - V * Q).norm(), 1e-10 * m.norm());
    EXPECT_LT((Q - Q.adjoint()).norm(), 1e-10 * m.norm());
    Eigen::SelfAdjointEigenSolver<Mat> es(Q);
    EXPECT_GT(es.eigenvalues().minCoeff(), -1e-10 * m.norm());
    // V^dag V is the projector onto range(Q), computed here by an independent SVD.
    EXPECT_LT((V.adjoint() * V - testutil::span_projector(Q)).norm(), 1e-9);
    EXPECT_EQ(p.rank, trial % 2 ? 3 : 4);
  }
}

TEST(Eig, Trivial) {
  const Mat I = Mat::Identity(3, 3);
  const EigResult e = eig_hermitian({DenseTensor::from_matrix(I, {"r"}, {3}, {"c"}, {3}), {"r"}, {"c"}});
  EXPECT_EQ(e.values, (std::vector<double>{1.0, 1.0, 1.0}));
  Mat z = Mat::Zero(2, 2);
  z(0, 0) = 1;
  z(1, 1) = -1;
  const EigResult ez = eig_hermitian({DenseTensor::from_matrix(z, {"r"}, {2}, {"c"}, {2}), {"r"}, {"c"}});
  EXPECT_NEAR(ez.values[0], 1.0, 1e-14);
  EXPECT_NEAR(ez.values[1], -1.0, 1e-14);
}

TEST(Eig, RejectsNonHermitian) {
  Mat m = Mat::Zero(2, 2);
  m(0, 1) = 1;
  try {
    eig_hermitian({DenseTensor::from_matrix(m, {"r"}, {2}, {"c"}, {2}), {"r"}, {"c"}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotHermitian);
  }
}

TEST(Eig, ReconstructionAndSquareSharesEigenspaces) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const Mat g = random_mat(rng, 4, 4);
    const Mat Q = g * g.adjoint();
    const EigResult e = eig_hermitian({DenseTensor::from_matrix(Q, {"r"}, {4}, {"c"}, {4}), {"r"}, {"c"}});
    const Mat V = e.vectors.matrix({"r"}, {"k"});
    Mat rec = Mat::Zero(4, 4);
    for (int k = 0; k < 4; ++k) rec += e.values[k] * V.col(k) * V.col(k).adjoint();
    EXPECT_LT((Q - rec).norm(), 1e-8);
    for (int k = 1; k < 4; ++k) EXPECT_GE(e.values[k - 1], e.values[k]);
    EXPECT_LT((V.adjoint() * V - Mat::Identity(4, 4)).norm(), 1e-10);

    const Mat Q2 = Q * Q;
    const EigResult e2 = eig_hermitian({DenseTensor::from_matrix(Q2, {"r"}, {4}, {"c"}, {4}), {"r"}, {"c"}});
    const Mat V2 = e2.vectors.matrix({"r"}, {"k"});
    for (int k = 0; k < 4; ++k) {
      EXPECT_NEAR(e2.values[k], e.values[k] * e.values[k], 1e-8 * e2.values[0]);
      // Random spectra are simple, so the one-dimensional projectors must coincide.
      const Mat p1 = V.col(k) * V.col(k).adjoint();
      const Mat p2 = V2.col(k) * V2.col(k).adjoint();
      EXPECT_LT((p1 - p2).norm(), 1e-6);
    }
  }
}

TEST(PseudoInverse, Trivial) {
  const Mat I = Mat::Identity(3, 3);
  const Mat p = pseudo_inverse({DenseTensor::from_matrix(I, {"r"}, {3}, {"c"}, {3}), {"r"}, {"c"}}).matrix({"c"}, {"r"});
  EXPECT_LT((p - I).norm(), 1e-14);
  Mat d = Mat::Zero(2, 2);
  d(0, 0) = 2;
  const Mat pd = pseudo_inverse({DenseTensor::from_matrix(d, {"r"}, {2}, {"c"}, {2}), {"r"}, {"c"}}).matrix({"c"}, {"r"});
  Mat expect = Mat::Zero(2, 2);
  expect(0, 0) = 0.5;
  EXPECT_LT((pd - expect).norm(), 1e-14);
  EXPECT_THROW(pseudo_inverse({DenseTensor::from_matrix(d, {"r"}, {2}, {"c"}, {2}), {"r"}, {"c"}}, 0.0), Error);
}

TEST(PseudoInverse, PenroseConditions) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const Mat m = random_mat(rng, 4, 2) * random_mat(rng, 2, 4);  // rank 2
    const Mat p = pseudo_inverse({DenseTensor::from_matrix(m, {"r"}, {4}, {"c"}, {4}), {"r"}, {"c"}}).matrix({"c"}, {"r"});
    EXPECT_LT((m * p * m - m).norm(), 1e-9 * m.norm());
    EXPECT_LT((p * m * p - p).norm(), 1e-9 * p.norm());
    const Mat mp = m * p;
    EXPECT_LT((mp - mp.adjoint()).norm(), 1e-9);
    EXPECT_LT((mp - testutil::span_projector(m)).norm(), 1e-9);
  }
}

TEST(MatrixView, MustPartitionLegs) {
  DenseTensor t({"a", "b", "c"}, {2, 2, 2});
  EXPECT_THROW((MatrixView{t, {"a"}, {"b"}}.to_matrix()), Error);
  EXPECT_EQ((MatrixView{t, {"a", "c"}, {"b"}}.to_matrix().rows()), 4);
}

TEST(ApplyOnLeg, MatchesLoop) {
  std::mt19937_64 rng(12);
  const DenseTensor t = random_tensor(rng, {"a", "b", "c"}, {2, 3, 2});
  const Mat op = random_mat(rng, 3, 3);
  const DenseTensor r = apply_on_leg(t, "b", op);
  for (int a = 0; a < 2; ++a)
    for (int x = 0; x < 3; ++x)
      for (int c = 0; c < 2; ++c) {
        cplx s = 0;
        for (int y = 0; y < 3; ++y) s += op(x, y) * t.at({a, y, c});
        EXPECT_LT(std::abs(r.at({a, x, c}) - s), 1e-12);
      }
}

TEST(Fidelity, QuotientsPhaseAndScale) {
  std::mt19937_64 rng(13);
  const DenseTensor t = random_tensor(rng, {"a", "b"}, {2, 3});
  EXPECT_NEAR(fidelity(t, t.scaled(cplx(0, -3.5))), 1.0, 1e-14);
  EXPECT_NEAR(fidelity(t, t.permuted({"b", "a"})), 1.0, 1e-14);
}
