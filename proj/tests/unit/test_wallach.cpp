#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/QR>

#include "besq/error.hpp"
#include "besq/rng.hpp"
#include "besq/stats.hpp"
#include "besq/wallach.hpp"
#include "oracles.hpp"

namespace {

using besq::LaplaceQuery;
using besq::SymMatrix;
using besq::WallachBranch;
using besq::WallachPoint;

SymMatrix diag_with_rank(std::size_t p, std::size_t rank) {
  std::vector<double> d(p, 0.0);
  for (std::size_t i = 0; i < rank; ++i) d[i] = 1.0 + static_cast<double>(i);
  return SymMatrix::diagonal(d);
}

SymMatrix conjugate(const Eigen::MatrixXd& q, const SymMatrix& s) {
  return SymMatrix::from_upper(Eigen::MatrixXd(q * s.matrix() * q.transpose()));
}

Eigen::MatrixXd random_orthogonal(std::size_t p, std::mt19937_64& gen) {
  std::normal_distribution<double> n01;
  Eigen::MatrixXd a(p, p);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) a(i, j) = n01(gen);
  }
  return Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ();
}

TEST(CentralWallach, HalfIntegersAndThreshold) {
  EXPECT_TRUE(besq::central_member(0.5, 3));
  EXPECT_FALSE(besq::central_member(0.75, 3));
  EXPECT_TRUE(besq::central_member(1.0, 3));
  EXPECT_TRUE(besq::central_member(0.0, 3));
  EXPECT_FALSE(besq::central_member(-0.5, 3));
  for (double b : {0.0, 0.1, 0.5, 2.0}) EXPECT_TRUE(besq::central_member(b, 1));
  EXPECT_THROW(besq::central_member(1.0, 0), besq::InvalidInput);
}

TEST(NoncentralWallach, HandCases) {
  const auto full = besq::noncentral_member(WallachPoint{SymMatrix::identity(3), 1.0});
  EXPECT_TRUE(full.member);
  EXPECT_EQ(full.branch, WallachBranch::Threshold);
  const auto r1 = besq::noncentral_member(WallachPoint{SymMatrix::diagonal({1.0, 0.0, 0.0}), 0.5});
  EXPECT_TRUE(r1.member);
  EXPECT_EQ(r1.branch, WallachBranch::Discrete);
  EXPECT_EQ(r1.rank, 1);
  const auto r2 = besq::noncentral_member(WallachPoint{SymMatrix::diagonal({1.0, 1.0, 0.0}), 0.5});
  EXPECT_FALSE(r2.member);
  EXPECT_EQ(r2.branch, WallachBranch::None);
  EXPECT_EQ(r2.rank, 2);
}

TEST(NoncentralWallach, RejectsIndefiniteStart) {
  EXPECT_THROW(besq::noncentral_member(WallachPoint{SymMatrix::diagonal({1.0, -1.0}), 1.0}), besq::InvalidPoint);
}

TEST(NoncentralWallach, HalfIntegerToleranceIsTight) {
  const SymMatrix x0 = SymMatrix::diagonal({1.0, 0.0, 0.0});
  EXPECT_TRUE(besq::noncentral_member(WallachPoint{x0, 0.5 + 1e-14}).member);
  EXPECT_FALSE(besq::noncentral_member(WallachPoint{x0, 0.5 + 1e-9}).member);
}

TEST(ConeSolvable, HandCases) {
  EXPECT_TRUE(besq::cone_sde_solvable(SymMatrix::diagonal({2.0, 3.0}), 1.0).member);
  EXPECT_TRUE(besq::cone_sde_solvable(SymMatrix::zero(2), 0.0).member);
  EXPECT_FALSE(besq::cone_sde_solvable(SymMatrix::identity(2), 0.5).member);
}

TEST(WallachProperties, TruthTableAgainstDirectCharacterization) {
  for (int p = 1; p <= 5; ++p) {
    for (int q = 0; q <= 12; ++q) {  // beta = q / 4
      const double beta = q / 4.0;
      EXPECT_EQ(besq::central_member(beta, p), oracle::wallach_truth(p, q, 0)) << "p=" << p << " beta=" << beta;
      for (int r = 0; r <= p; ++r) {
        const auto m = besq::noncentral_member(WallachPoint{diag_with_rank(p, r), beta});
        EXPECT_EQ(m.member, oracle::wallach_truth(p, q, r)) << "p=" << p << " beta=" << beta << " rank=" << r;
        EXPECT_EQ(m.rank, r);
        EXPECT_EQ(besq::cone_sde_solvable(diag_with_rank(p, r), 2.0 * beta).member, m.member);
      }
    }
  }
}

TEST(WallachProperties, CentralEqualsNoncentralAtZero) {
  for (std::size_t p = 1; p <= 6; ++p) {
    for (double beta = -0.5; beta <= 3.0; beta += 0.125) {
      EXPECT_EQ(besq::central_member(beta, p), besq::noncentral_member(WallachPoint{SymMatrix::zero(p), beta}).member);
    }
  }
}

TEST(WallachProperties, MembershipIsMonotoneAboveThreshold) {
  for (std::size_t p = 1; p <= 5; ++p) {
    for (std::size_t r = 0; r <= p; ++r) {
      for (double beta = 0.0; beta <= 3.0; beta += 0.25) {
        const SymMatrix x0 = diag_with_rank(p, r);
        if (!besq::noncentral_member(WallachPoint{x0, beta}).member) continue;
        const double floor = std::max(beta, (static_cast<double>(p) - 1.0) / 2.0);
        for (double extra : {0.0, 0.1, 1.0, 7.3}) {
          EXPECT_TRUE(besq::noncentral_member(WallachPoint{x0, floor + extra}).member);
        }
      }
    }
  }
}

TEST(ReduceSigma, IdentityAndScalar) {
  const SymMatrix x0 = SymMatrix::from_upper(2, std::vector<double>{2.0, 0.5, 1.0});
  EXPECT_LE((besq::reduce_sigma(x0, SymMatrix::identity(2)).matrix() - x0.matrix()).cwiseAbs().maxCoeff(), 1e-15);
  const auto r = besq::reduce_sigma(SymMatrix::diagonal({8.0, 4.0}), SymMatrix::diagonal({4.0, 4.0}));
  EXPECT_NEAR(r(0, 0), 2.0, 1e-14);
  EXPECT_NEAR(r(1, 1), 1.0, 1e-14);
  EXPECT_NEAR(r(0, 1), 0.0, 1e-14);
}

TEST(ReduceSigma, RejectsSingularSigma) {
  EXPECT_THROW(besq::reduce_sigma(SymMatrix::identity(2), SymMatrix::diagonal({1.0, 0.0})), besq::InvalidSigma);
}

TEST(ReduceSigma, PreservesRankAndInvertsWithInverseSigma) {
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> spread(0.2, 3.0);
  for (std::size_t p = 1; p <= 5; ++p) {
    for (std::size_t r = 0; r <= p; ++r) {
      const Eigen::MatrixXd q = random_orthogonal(p, gen);
      const SymMatrix x0 = conjugate(q, diag_with_rank(p, r));
      Eigen::VectorXd sd(p);
      for (std::size_t i = 0; i < p; ++i) sd(static_cast<Eigen::Index>(i)) = spread(gen);
      const Eigen::MatrixXd q2 = random_orthogonal(p, gen);
      const SymMatrix sigma = SymMatrix::from_upper(Eigen::MatrixXd(q2 * sd.asDiagonal() * q2.transpose()));
      const SymMatrix sigma_inv =
          SymMatrix::from_upper(Eigen::MatrixXd(q2 * sd.cwiseInverse().asDiagonal() * q2.transpose()));
      const SymMatrix reduced = besq::reduce_sigma(x0, sigma);
      const auto rank = besq::rank_tol(reduced);
      EXPECT_EQ(rank.rank, static_cast<int>(r));
      EXPECT_GE(rank.min_eigenvalue, -1e-12);
      const SymMatrix back = besq::reduce_sigma(reduced, sigma_inv);
      EXPECT_LE((back.matrix() - x0.matrix()).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, x0.max_abs()));
    }
  }
}

TEST(Laplace, NearZeroArgumentGivesOne) {
  const auto q = LaplaceQuery::at_time(SymMatrix::diagonal({1e-12, 1e-12}), 1.0);
  EXPECT_NEAR(besq::laplace_closed_form(SymMatrix::diagonal({1.0, 0.5}), 1.5, q), 1.0, 1e-10);
}

TEST(Laplace, ScalarCases) {
  for (double t : {0.5, 1.0, 2.0}) {
    for (double s : {0.1, 0.7}) {
      const auto q = LaplaceQuery::at_time(SymMatrix::diagonal({s}), t);
      EXPECT_NEAR(besq::laplace_closed_form(SymMatrix::diagonal({0.0}), 0.75, q), std::pow(1 + 2 * t * s, -0.75), 1e-15);
    }
  }
  const auto q = LaplaceQuery::at_time(SymMatrix::diagonal({0.5}), 1.0);
  EXPECT_NEAR(besq::laplace_closed_form(SymMatrix::diagonal({1.0}), 1.0, q), 0.5 * std::exp(-0.25), 1e-15);
}

TEST(Laplace, DiagonalValueMatchesHandEvaluation) {
  const auto q = LaplaceQuery::at_time(SymMatrix::diagonal({0.3, 0.1}), 1.0);
  const double expected = (1.0 / (1.6 * 1.2)) * std::exp(-(1.0 * 0.3 / 1.6 + 0.5 * 0.1 / 1.2));
  EXPECT_NEAR(besq::laplace_closed_form(SymMatrix::diagonal({1.0, 0.5}), 1.0, q), expected, 1e-15);
  EXPECT_NEAR(expected, 0.4141646, 1e-7);
}

TEST(Laplace, InvariantUnderJointRotation) {
  std::mt19937_64 gen(41);
  const SymMatrix x0 = SymMatrix::diagonal({1.0, 0.5, 0.2});
  const SymMatrix u = SymMatrix::diagonal({0.3, 0.1, 0.6});
  const double ref = besq::laplace_closed_form(x0, 1.3, LaplaceQuery::at_time(u, 0.7));
  for (int rep = 0; rep < 20; ++rep) {
    const auto qm = random_orthogonal(3, gen);
    const double v = besq::laplace_closed_form(conjugate(qm, x0), 1.3, LaplaceQuery::at_time(conjugate(qm, u), 0.7));
    EXPECT_NEAR(v, ref, 1e-13);
  }
}

TEST(Laplace, StrictlyDecreasingInTime) {
  const SymMatrix x0 = SymMatrix::from_upper(2, std::vector<double>{1.0, 0.2, 0.5});
  const SymMatrix u = SymMatrix::diagonal({0.3, 0.1});
  double prev = 1.0;
  for (double t = 0.1; t <= 5.0; t += 0.1) {
    const double v = besq::laplace_closed_form(x0, 1.0, LaplaceQuery::at_time(u, t));
    EXPECT_LT(v, prev) << "t=" << t;
    prev = v;
  }
}

TEST(Laplace, QueryValidation) {
  EXPECT_THROW(LaplaceQuery::at_time(SymMatrix::diagonal({1.0, -1.0}), 1.0), besq::InvalidInput);
  EXPECT_THROW(LaplaceQuery::at_time(SymMatrix::identity(2), 0.0), besq::InvalidInput);
  EXPECT_THROW(LaplaceQuery::with_sigma(SymMatrix::identity(2), SymMatrix::diagonal({1.0, 0.0})), besq::InvalidSigma);
}

TEST(Laplace, SigmaFormMatchesTimeFormForScalarSigma) {
  const SymMatrix x0 = SymMatrix::from_upper(2, std::vector<double>{1.0, 0.2, 0.5});
  const SymMatrix u = SymMatrix::from_upper(2, std::vector<double>{0.3, 0.05, 0.1});
  const double a = besq::laplace_closed_form(x0, 1.0, LaplaceQuery::at_time(u, 1.7));
  const double b = besq::laplace_closed_form(x0, 1.0, LaplaceQuery::with_sigma(u, SymMatrix::diagonal({1.7, 1.7})));
  EXPECT_NEAR(a, b, 1e-14);
}

// Woodbury form for one Gaussian vector: E exp(-xi' u xi), xi ~ N(m, Sigma),
// equals det(I + 2 Sigma u)^{-1/2} exp(-m' (u^{-1} + 2 Sigma)^{-1} m). 2x2, by hand.
double one_vector_laplace_2x2(const double m[2], const double s[3], const double u[3]) {
  const double du = u[0] * u[2] - u[1] * u[1];
  const double a = u[2] / du + 2 * s[0];
  const double b = -u[1] / du + 2 * s[1];
  const double c = u[0] / du + 2 * s[2];
  const double dm = a * c - b * b;
  const double quad = (c * m[0] * m[0] - 2 * b * m[0] * m[1] + a * m[1] * m[1]) / dm;
  const double i00 = 1 + 2 * (s[0] * u[0] + s[1] * u[1]);
  const double i01 = 2 * (s[0] * u[1] + s[1] * u[2]);
  const double i10 = 2 * (s[1] * u[0] + s[2] * u[1]);
  const double i11 = 1 + 2 * (s[1] * u[1] + s[2] * u[2]);
  return std::pow(i00 * i11 - i01 * i10, -0.5) * std::exp(-quad);
}

TEST(Laplace, NonCommutingSigmaMatchesGaussianConstruction) {
  const double m[2] = {1.5, 0.0};
  const double s[3] = {2.0, 0.0, 0.1};
  const double c = std::cos(0.7), sn = std::sin(0.7);
  const double l0 = 0.8, l1 = 0.05;
  const double u[3] = {c * c * l0 + sn * sn * l1, c * sn * (l0 - l1), sn * sn * l0 + c * c * l1};
  const SymMatrix x0 = SymMatrix::diagonal({m[0] * m[0], 0.0});
  const SymMatrix sigma = SymMatrix::diagonal({s[0], s[2]});
  const SymMatrix um = SymMatrix::from_upper(2, std::vector<double>{u[0], u[1], u[2]});
  const double closed = besq::laplace_closed_form(x0, 0.5, LaplaceQuery::with_sigma(um, sigma));
  EXPECT_NEAR(closed, one_vector_laplace_2x2(m, s, u), 1e-13);

  const besq::ExactSampler sampler(1, {Eigen::Vector2d(m[0], m[1])}, sigma);
  const std::size_t n = 200000;
  std::vector<double> vals(n);
  for (std::size_t i = 0; i < n; ++i) {
    besq::RngStream rng(55, i);
    vals[i] = std::exp(-(um.matrix() * sampler.sample(rng).matrix()).trace());
  }
  const auto est = besq::mean_with_stderr(vals);
  EXPECT_LT(std::abs(est.mean - closed), 4.0 * est.stderr_);
}

TEST(ExactSampler, SingleOuterProductFromScriptedDraw) {
  besq::ScriptedNormals noise({1.0, 0.0});
  const auto x = besq::sample_exact(1, {Eigen::Vector2d::Zero()}, SymMatrix::identity(2), noise);
  EXPECT_EQ(x, SymMatrix::diagonal({1.0, 0.0}));
  EXPECT_EQ(besq::rank_tol(x).rank, 1);
}

TEST(ExactSampler, OutputIsGramMatrixWithBoundedRank) {
  const SymMatrix sigma = SymMatrix::from_upper(3, std::vector<double>{1.0, 0.3, 0.1, 0.8, 0.2, 0.5});
  for (std::size_t n = 1; n <= 4; ++n) {
    const besq::ExactSampler sampler(n, {}, sigma);
    besq::RngStream rng(3, n);
    for (int rep = 0; rep < 50; ++rep) {
      const auto r = besq::rank_tol(sampler.sample(rng));
      EXPECT_GE(r.min_eigenvalue, -1e-12);
      EXPECT_LE(static_cast<std::size_t>(r.rank), std::min<std::size_t>(n, 3));
    }
  }
}

TEST(ExactSampler, MeanIsCountTimesSigma) {
  const besq::ExactSampler sampler(2, {}, SymMatrix::identity(2));
  const std::size_t n = 100000;
  std::vector<std::vector<double>> entries(3, std::vector<double>(n));
  besq::RngStream rng(4, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = sampler.sample(rng);
    entries[0][i] = x(0, 0);
    entries[1][i] = x(0, 1);
    entries[2][i] = x(1, 1);
  }
  const double target[3] = {2.0, 0.0, 2.0};
  for (int e = 0; e < 3; ++e) {
    const auto m = besq::mean_with_stderr(entries[e]);
    EXPECT_LT(std::abs(m.mean - target[e]), 4.0 * m.stderr_);
  }
}

TEST(MeansForGram, ReproducesStartAndPads) {
  const SymMatrix x0 = SymMatrix::from_upper(3, std::vector<double>{1.0, 0.5, 0.0, 0.25, 0.0, 0.0});
  const auto means = besq::means_for_gram(x0, 3);
  ASSERT_EQ(means.size(), 3u);
  const besq::ExactSampler sampler(3, means, SymMatrix::identity(3));
  EXPECT_LE((sampler.mean_gram().matrix() - x0.matrix()).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_THROW(besq::means_for_gram(SymMatrix::identity(3), 2), besq::PreconditionError);
}

TEST(ExactSampler, ScalarChiSquareLaplace) {
  const besq::ExactSampler sampler(1, {}, SymMatrix::identity(1));
  const double s = 0.4;
  const std::size_t n = 100000;
  std::vector<double> vals(n);
  besq::RngStream rng(8, 0);
  for (std::size_t i = 0; i < n; ++i) vals[i] = std::exp(-s * sampler.sample(rng)(0, 0));
  const auto est = besq::mean_with_stderr(vals);
  EXPECT_LT(std::abs(est.mean - std::pow(1 + 2 * s, -0.5)), 4.0 * est.stderr_);
}

TEST(MembershipJson, RoundTrip) {
  const auto out = besq::evaluate_membership_json(R"({"p": 3, "beta": 0.5, "x0": [1,0,0,0,0,0]})");
  EXPECT_EQ(out, R"({"branch":"discrete","member":true,"rank":1})");
  EXPECT_THROW(besq::evaluate_membership_json("{"), besq::InvalidInput);
  EXPECT_THROW(besq::evaluate_membership_json(R"({"p": 2, "beta": 1})"), besq::InvalidInput);
  EXPECT_THROW(besq::evaluate_membership_json(R"({"p": 2, "beta": 1, "x0": [1, 2]})"), besq::InvalidInput);
}

}  // namespace
