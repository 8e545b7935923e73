#include <gtest/gtest.h>

#include <Eigen/QR>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "besq/error.hpp"
#include "besq/symcore.hpp"
#include "oracles.hpp"

namespace {

using besq::SymMatrix;

SymMatrix from_dense(const oracle::Dense& a) {
  SymMatrix s(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i; j < a.size(); ++j) s.set(i, j, a[i][j]);
  }
  return s;
}

oracle::Dense to_dense(const SymMatrix& s) {
  oracle::Dense a(s.dim(), std::vector<double>(s.dim()));
  for (std::size_t i = 0; i < s.dim(); ++i) {
    for (std::size_t j = 0; j < s.dim(); ++j) a[i][j] = s(i, j);
  }
  return a;
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

double max_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

Eigen::MatrixXd random_orthogonal(std::size_t p, std::mt19937_64& gen) {
  std::normal_distribution<double> n01;
  Eigen::MatrixXd a(p, p);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) a(i, j) = n01(gen);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  return qr.householderQ();
}

TEST(SymMatrix, SetWritesBothTriangles) {
  SymMatrix s(3);
  s.set(2, 0, 5.0);
  EXPECT_EQ(s(0, 2), 5.0);
  EXPECT_EQ(s(2, 0), 5.0);
}

TEST(SymMatrix, FromUpperIgnoresLowerTriangle) {
  Eigen::MatrixXd m(2, 2);
  m << 1.0, 2.0, 99.0, 3.0;
  const SymMatrix s = SymMatrix::from_upper(m);
  EXPECT_EQ(s(1, 0), 2.0);
  EXPECT_EQ(s.upper(), (std::vector<double>{1.0, 2.0, 3.0}));
}

TEST(SymMatrix, RejectsZeroDimension) { EXPECT_THROW(SymMatrix(0), besq::InvalidInput); }

TEST(Eig, IdentityHasUnitEigenvalues) {
  const auto spec = besq::eig(SymMatrix::identity(3));
  for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(spec.values(i), 1.0);
}

TEST(Eig, DiagonalGivesSortedValuesAndPermutationVectors) {
  const auto spec = besq::eig(SymMatrix::diagonal({3.0, 1.0}));
  EXPECT_DOUBLE_EQ(spec.values(0), 1.0);
  EXPECT_DOUBLE_EQ(spec.values(1), 3.0);
  EXPECT_DOUBLE_EQ(std::abs(spec.vectors(1, 0)), 1.0);
  EXPECT_DOUBLE_EQ(std::abs(spec.vectors(0, 1)), 1.0);
  EXPECT_DOUBLE_EQ(spec.vectors(0, 0), 0.0);
}

TEST(Eig, RejectsNonFiniteEntries) {
  SymMatrix s(2);
  s.set(0, 1, std::numeric_limits<double>::quiet_NaN());
  EXPECT_THROW(besq::eig(s), besq::InvalidInput);
}

TEST(Eig, RandomMatricesReconstructAndMatchJacobi) {
  std::mt19937_64 gen(11);
  for (std::size_t p = 1; p <= 6; ++p) {
    for (int rep = 0; rep < 50; ++rep) {
      const auto dense = oracle::random_symmetric(p, gen);
      const SymMatrix s = from_dense(dense);
      const auto spec = besq::eig(s);
      for (std::size_t i = 1; i < p; ++i) EXPECT_LE(spec.values(i - 1), spec.values(i));
      EXPECT_LE(max_diff(spec.reconstruct(), s.matrix()), besq::reconstruction_tolerance(s));
      EXPECT_LE(max_diff(spec.vectors.transpose() * spec.vectors, Eigen::MatrixXd::Identity(p, p)),
                besq::orthogonality_tolerance(p));
      const auto jacobi = oracle::jacobi_eigenvalues(dense);
      for (std::size_t i = 0; i < p; ++i) EXPECT_NEAR(spec.values(i), jacobi[i], 1e-12);
    }
  }
}

TEST(SpectralApply, AbsoluteValueOnDiagonal) {
  const auto out = besq::spectral_apply(SymMatrix::diagonal({-1.0, 2.0}), besq::spectral_abs);
  EXPECT_NEAR(out(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(out(1, 1), 2.0, 1e-15);
  EXPECT_NEAR(out(0, 1), 0.0, 1e-15);
}

TEST(SpectralApply, SquareRootOnDiagonal) {
  const auto out = besq::spectral_apply(SymMatrix::diagonal({4.0, 9.0}), [](double x) { return std::sqrt(x); });
  EXPECT_NEAR(out(0, 0), 2.0, 1e-15);
  EXPECT_NEAR(out(1, 1), 3.0, 1e-15);
}

TEST(SpectralApply, NonFiniteResultThrows) {
  EXPECT_THROW(besq::spectral_apply(SymMatrix::diagonal({-1.0, 1.0}), [](double x) { return std::sqrt(x); }),
               besq::DomainError);
}

TEST(SpectralApply, IdentityAndSqrtAbsSquaredProperties) {
  std::mt19937_64 gen(5);
  for (std::size_t p = 1; p <= 6; ++p) {
    for (int rep = 0; rep < 30; ++rep) {
      const SymMatrix s = from_dense(oracle::random_symmetric(p, gen));
      const double tol = besq::reconstruction_tolerance(s);
      const auto same = besq::spectral_apply(s, [](double x) { return x; });
      EXPECT_LE(max_diff(same.matrix(), s.matrix()), tol);
      const auto root = besq::spectral_apply(s, besq::spectral_sqrt_abs);
      const auto absval = besq::spectral_apply(s, besq::spectral_abs);
      EXPECT_LE(max_diff(root.matrix() * root.matrix(), absval.matrix()), 10 * tol);
    }
  }
}

TEST(ElementarySymmetric, OnesGiveBinomials) {
  const std::vector<double> ones{1.0, 1.0, 1.0};
  const auto e = besq::elementary_symmetric(ones);
  EXPECT_EQ(e.values, (std::vector<double>{3.0, 3.0, 1.0}));
  EXPECT_EQ(e.e(0), 1.0);
}

TEST(ElementarySymmetric, ZeroEigenvalueKillsTopPolynomial) {
  const std::vector<double> x{0.0, 2.5};
  const auto e = besq::elementary_symmetric(x);
  EXPECT_EQ(e.e(1), 2.5);
  EXPECT_EQ(e.e(2), 0.0);
}

TEST(ElementarySymmetric, EmptyInputThrows) {
  EXPECT_THROW(besq::elementary_symmetric(std::vector<double>{}), besq::InvalidInput);
}

TEST(ElementarySymmetric, MatchesSubsetEnumeration) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  for (std::size_t p = 1; p <= 6; ++p) {
    for (int rep = 0; rep < 200; ++rep) {
      std::vector<double> x(p);
      for (auto& v : x) v = dist(gen);
      const auto e = besq::elementary_symmetric(x);
      for (std::size_t n = 1; n <= p; ++n) {
        const double ref = oracle::elementary_by_subsets(x, n);
        EXPECT_NEAR(e.e(n), ref, 1e-12 * std::max(1.0, std::abs(ref)));
      }
    }
  }
}

TEST(ElementarySymmetric, MatchesCharacteristicPolynomial) {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> dist(-3.0, 3.0);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> x(4);
    for (auto& v : x) v = dist(gen);
    const auto coeffs = oracle::characteristic_coefficients(x);  // prod (u - x_i)
    const auto e = besq::elementary_symmetric(x);
    // coefficient of u^{p-n} is (-1)^n e_n
    for (std::size_t n = 1; n <= 4; ++n) {
      const double sign = n % 2 == 0 ? 1.0 : -1.0;
      EXPECT_NEAR(e.e(n), sign * coeffs[4 - n], 1e-11);
    }
  }
}

TEST(ElementarySymmetric, TopPolynomialIsDeterminant) {
  std::mt19937_64 gen(8);
  for (std::size_t p = 1; p <= 6; ++p) {
    for (int rep = 0; rep < 100; ++rep) {
      const auto dense = oracle::random_symmetric(p, gen);
      const auto ev = to_vector(besq::eigenvalues(from_dense(dense)));
      const double det = oracle::leibniz_determinant(dense);
      const double ep = besq::elementary_symmetric(ev).e(p);
      EXPECT_NEAR(ep, det, 1e-8 * std::max(std::abs(det), 1e-3)) << "p=" << p;
    }
  }
}

TEST(IncompleteSymmetric, HandValues) {
  const std::vector<double> two{2.0, 5.0};
  EXPECT_EQ(besq::incomplete_symmetric(two, 0, 1), 5.0);
  const std::vector<double> three{1.0, 2.0, 3.0};
  EXPECT_EQ(besq::incomplete_symmetric(three, 1, 2), 3.0);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(besq::incomplete_symmetric(three, i, 0), 1.0);
}

TEST(IncompleteSymmetric, OrderAtDimensionThrows) {
  const std::vector<double> x{1.0, 2.0};
  EXPECT_THROW(besq::incomplete_symmetric(x, 0, 2), besq::InvalidInput);
}

TEST(IncompleteSymmetric, RecursionLinksCompleteAndIncomplete) {
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  for (std::size_t p = 2; p <= 6; ++p) {
    for (int rep = 0; rep < 100; ++rep) {
      std::vector<double> x(p);
      for (auto& v : x) v = dist(gen);
      const auto e = besq::elementary_symmetric(x);
      for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t n = 1; n < p; ++n) {
          const double rhs = x[i] * besq::incomplete_symmetric(x, i, n - 1) + besq::incomplete_symmetric(x, i, n);
          EXPECT_NEAR(e.e(n), rhs, 1e-12 * std::max(1.0, std::abs(rhs)));
        }
        EXPECT_NEAR(e.e(p), x[i] * besq::incomplete_symmetric(x, i, p - 1), 1e-12 * std::max(1.0, std::abs(e.e(p))));
      }
    }
  }
}

TEST(RankTol, ZeroMatrixHasRankZero) { EXPECT_EQ(besq::rank_tol(SymMatrix::zero(3)).rank, 0); }

TEST(RankTol, ExplicitRankOne) { EXPECT_EQ(besq::rank_tol(SymMatrix::diagonal({1.0, 0.0, 0.0}), 1e-9).rank, 1); }

TEST(RankTol, RotatedNearSingularMatrix) {
  std::mt19937_64 gen(2);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::MatrixXd q = random_orthogonal(3, gen);
    const Eigen::Vector3d d(1.0, 1e-14, 2.0);
    const auto s = SymMatrix::from_upper(Eigen::MatrixXd(q * d.asDiagonal() * q.transpose()));
    const auto r = besq::rank_tol(s, 1e-9);
    EXPECT_EQ(r.rank, 2);
    EXPECT_FALSE(r.not_psd);
  }
}

TEST(RankTol, FlagsIndefiniteInput) {
  const auto r = besq::rank_tol(SymMatrix::diagonal({-1.0, 2.0}));
  EXPECT_TRUE(r.not_psd);
  EXPECT_DOUBLE_EQ(r.min_eigenvalue, -1.0);
}

}  // namespace
