#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>

#include "metarep/errors.hpp"
#include "metarep/linalg.hpp"
#include "oracles.hpp"

using namespace metarep;

namespace {

Matrix diag2(double a, double b) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

Representation span_of(const Vector& v) { return Representation(v.normalized()); }

}  // namespace

TEST_CASE("svd factors reconstruct and are sign normalized") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix m = oracle::gaussian_matrix(3 + trial % 4, 2 + trial % 5, rng);
    const SvdFactors f = svd(m);
    CHECK((f.reconstruct() - m).norm() <= 1e-10 * (1.0 + m.norm()));
    for (Eigen::Index j = 1; j < f.singular_values.size(); ++j) {
      CHECK(f.singular_values(j) <= f.singular_values(j - 1));
    }
    for (Eigen::Index j = 0; j < f.left_vectors.cols(); ++j) {
      CHECK(f.left_vectors(0, j) > 0.0);
    }
  }
}

TEST_CASE("svt soft-thresholds singular values") {
  CHECK((svt(diag2(3, 1), 2.0) - diag2(1, 0)).norm() < 1e-14);

  std::mt19937_64 rng(3);
  const Matrix m = oracle::gaussian_matrix(4, 6, rng);
  CHECK((svt(m, 0.0) - m).norm() == 0.0);

  // Everything below the largest singular value is removed.
  CHECK(svt(m, svd(m).singular_values(0) + 1e-9).norm() == 0.0);
}

TEST_CASE("svt matches the Jacobi-SVD prox oracle") {
  std::mt19937_64 rng(2024);
  const Matrix m = oracle::gaussian_matrix(5, 4, rng);
  CHECK((svt(m, 0.5) - oracle::prox_nuclear(m, 0.5)).norm() <= 1e-8);
}

TEST_CASE("svt rejects bad input") {
  Matrix m = diag2(1, 2);
  CHECK_THROWS_AS(svt(m, -1.0), InvalidArgument);
  m(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(svt(m, 0.5), InvalidInput);
  m(0, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(svt(m, 0.0), InvalidInput);
}

TEST_CASE("svt satisfies the prox subgradient optimality condition") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> tau_dist(0.05, 2.0);
  for (int trial = 0; trial < 30; ++trial) {
    const Matrix m = oracle::gaussian_matrix(5, 4, rng);
    const double tau = tau_dist(rng);
    const Matrix x = svt(m, tau);
    // (M - X) / tau must be a subgradient of the nuclear norm at X.
    const Matrix sub = (m - x) / tau;
    const oracle::Svd fx = oracle::jacobi_svd(x);
    Eigen::Index k = 0;
    while (k < fx.s.size() && fx.s(k) > 1e-10) ++k;
    const Matrix u = fx.u.leftCols(k), v = fx.v.leftCols(k);
    const Matrix p = Matrix::Identity(5, 5) - u * u.transpose();
    const Matrix q = Matrix::Identity(4, 4) - v * v.transpose();
    CHECK((u.transpose() * sub * v - Matrix::Identity(k, k)).norm() <= 1e-7);
    CHECK((u.transpose() * sub * q).norm() <= 1e-7);
    CHECK((p * sub * v).norm() <= 1e-7);
    CHECK(operator_norm(p * sub * q) <= 1.0 + 1e-7);
  }
}

TEST_CASE("truncate_rank") {
  CHECK((truncate_rank(diag2(3, 1), 1) - diag2(3, 0)).norm() < 1e-14);

  Vector u(3), v(2);
  u << 1, 2, 3;
  v << -1, 0.5;
  const Matrix rank_one = u * v.transpose();
  CHECK((truncate_rank(rank_one, 1) - rank_one).norm() <= 1e-10);

  CHECK_THROWS_AS(truncate_rank(diag2(3, 1), 0), InvalidArgument);
  CHECK_THROWS_AS(truncate_rank(diag2(3, 1), 3), InvalidArgument);
}

TEST_CASE("truncate_rank beats a sweep of random rank-2 candidates") {
  std::mt19937_64 rng(99);
  const Matrix m = oracle::gaussian_matrix(6, 4, rng);
  const double best = (m - truncate_rank(m, 2)).norm();
  for (int c = 0; c < 200; ++c) {
    // Candidate: projection of M onto a random 2-d column space (the best
    // rank-2 matrix with that column space).
    const Matrix basis = oracle::gaussian_matrix(6, 2, rng).householderQr().householderQ() *
                         Matrix::Identity(6, 2);
    const Matrix candidate = basis * (basis.transpose() * m);
    CHECK(best <= (m - candidate).norm() + 1e-12);
  }
}

TEST_CASE("Eckart-Young residual equals the tail singular values") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix m = oracle::gaussian_matrix(7, 5, rng);
    const oracle::Svd f = oracle::jacobi_svd(m);
    for (Eigen::Index r = 1; r <= 5; ++r) {
      const double residual = (m - truncate_rank(m, r)).squaredNorm();
      const double tail = f.s.tail(5 - r).squaredNorm();
      CHECK(std::abs(residual - tail) <= 1e-10 * (1.0 + m.squaredNorm()));
    }
  }
}

TEST_CASE("orthonormal_range") {
  const Representation full = orthonormal_range(diag2(2, 1), 1e-6);
  CHECK(full.rank() == 2);
  CHECK((full.projector() - Matrix::Identity(2, 2)).norm() < 1e-12);

  const Representation one = orthonormal_range(diag2(2, 1e-9), 1e-6);
  REQUIRE(one.rank() == 1);
  CHECK(std::abs(one.columns()(0, 0)) == doctest::Approx(1.0));

  CHECK_THROWS_AS(orthonormal_range(Matrix::Zero(3, 2), 1e-6), DegenerateInput);
  CHECK_THROWS_AS(orthonormal_range(diag2(2, 1), 0.0), InvalidArgument);
  CHECK_THROWS_AS(orthonormal_range(diag2(2, 1), 1.0), InvalidArgument);
}

TEST_CASE("orthonormal_range output is orthonormal for random inputs") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    // Low-rank plus scaled noise to exercise different numerical ranks.
    const Matrix m = oracle::gaussian_matrix(8, 3, rng) * oracle::gaussian_matrix(3, 6, rng) +
                     std::pow(10.0, -(trial % 10)) * oracle::gaussian_matrix(8, 6, rng);
    const Representation b = orthonormal_range(m);
    const Matrix gram = b.columns().transpose() * b.columns();
    CHECK((gram - Matrix::Identity(b.rank(), b.rank())).norm() <= 1e-10);
  }
}

TEST_CASE("subspace_distance") {
  Vector e1(2), e2(2), diag(2);
  e1 << 1, 0;
  e2 << 0, 1;
  diag << 1, 1;
  CHECK(subspace_distance(span_of(e1), span_of(e1)) < 1e-15);
  CHECK(subspace_distance(span_of(e1), span_of(e2)) == doctest::Approx(1.0));
  // Principal angle of 45 degrees: sin(pi/4).
  const double expected = std::sin(std::acos(e1.dot(diag.normalized())));
  CHECK(subspace_distance(span_of(e1), span_of(diag)) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(0.70711).epsilon(1e-5));

  CHECK_THROWS_AS(subspace_distance(Representation::identity(2), Representation::identity(3)),
                  InvalidArgument);
}

TEST_CASE("subspace_distance is a symmetric pseudometric") {
  std::mt19937_64 rng(23);
  auto random_basis = [&](int d, int r) {
    const Matrix q = oracle::gaussian_matrix(d, r, rng).householderQr().householderQ() *
                     Matrix::Identity(d, r);
    return Representation(q);
  };
  for (int trial = 0; trial < 50; ++trial) {
    const Representation a = random_basis(6, 2), b = random_basis(6, 2), c = random_basis(6, 2);
    const double ab = subspace_distance(a, b);
    CHECK(ab == doctest::Approx(subspace_distance(b, a)).epsilon(1e-12));
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    CHECK(ab <= subspace_distance(a, c) + subspace_distance(c, b) + 1e-9);
  }
}

TEST_CASE("nuclear_norm") {
  CHECK(nuclear_norm(Matrix::Zero(3, 4)) == 0.0);
  CHECK(nuclear_norm(diag2(3, 1)) == doctest::Approx(4.0));

  std::mt19937_64 rng(31);
  const Matrix q = oracle::gaussian_matrix(4, 4, rng).householderQr().householderQ();
  Vector lambda(4);
  lambda << 3.0, 1.5, 0.25, 0.0;
  const Matrix psd = q * lambda.asDiagonal() * q.transpose();
  CHECK(nuclear_norm(psd) == doctest::Approx(psd.trace()).epsilon(1e-12));
  CHECK(nuclear_norm(psd) == doctest::Approx(oracle::nuclear(psd)).epsilon(1e-12));
}

TEST_CASE("representation validates orthonormality") {
  Matrix not_orthonormal(3, 1);
  not_orthonormal << 1, 1, 0;
  CHECK_THROWS_AS(Representation{not_orthonormal}, InvalidInput);
  CHECK(Representation::identity(4).rank() == 4);
  CHECK(Representation::empty(4).rank() == 0);
}
