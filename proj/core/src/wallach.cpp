#include "besq/wallach.hpp"

#include <cmath>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <nlohmann/json.hpp>

#include "besq/error.hpp"

namespace besq {

namespace {

// Returns round(2 beta) when 2 beta is an integer to tolerance.
std::optional<long> twice_as_integer(double beta) {
  const double twice = 2.0 * beta;
  const double rounded = std::round(twice);
  if (std::abs(twice - rounded) <= kHalfIntegerTolerance) return static_cast<long>(rounded);
  return std::nullopt;
}

bool at_or_above_threshold(double beta, std::size_t p) {
  return 2.0 * beta >= static_cast<double>(p) - 1.0 - kHalfIntegerTolerance;
}

bool in_discrete_set(double beta, std::size_t p) {
  const auto twice = twice_as_integer(beta);
  return twice && *twice >= 0 && *twice <= static_cast<long>(p) - 2;
}

bool positive_definite(const SymMatrix& s) {
  Eigen::LLT<Eigen::MatrixXd> llt(s.matrix());
  return llt.info() == Eigen::Success;
}

double log_det_spd(const Eigen::MatrixXd& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw NumericalError("laplace: I + 2 Sigma u is not positive definite");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

}  // namespace

std::string_view to_string(WallachBranch branch) {
  switch (branch) {
    case WallachBranch::Threshold: return "threshold";
    case WallachBranch::Discrete: return "discrete";
    case WallachBranch::None: return "none";
  }
  return "none";
}

bool central_member(double beta, std::size_t p) {
  if (p == 0) throw InvalidInput("central_member: p must be at least 1");
  if (!std::isfinite(beta) || beta < 0.0) return false;
  return at_or_above_threshold(beta, p) || in_discrete_set(beta, p);
}

Membership noncentral_member(const WallachPoint& point, double epsilon) {
  const std::size_t p = point.dim();
  if (!point.x0.all_finite()) throw InvalidPoint("wallach: x0 has non-finite entries");
  const RankResult rank = rank_tol(point.x0, epsilon);
  if (rank.not_psd) {
    throw InvalidPoint("wallach: x0 is not positive semidefinite (min eigenvalue " +
                       std::to_string(rank.min_eigenvalue) + ")");
  }
  Membership m;
  m.rank = rank.rank;
  if (!std::isfinite(point.beta) || point.beta < 0.0) return m;
  if (at_or_above_threshold(point.beta, p)) {
    m.member = true;
    m.branch = WallachBranch::Threshold;
  } else if (in_discrete_set(point.beta, p) && rank.rank <= *twice_as_integer(point.beta)) {
    m.member = true;
    m.branch = WallachBranch::Discrete;
  }
  return m;
}

Membership cone_sde_solvable(const SymMatrix& x0, double alpha, double epsilon) {
  return noncentral_member(WallachPoint{x0, alpha / 2.0}, epsilon);
}

SymMatrix reduce_sigma(const SymMatrix& x0, const SymMatrix& sigma) {
  if (x0.dim() != sigma.dim()) throw InvalidInput("reduce_sigma: dimension mismatch");
  const Spectrum spec = eig(sigma);
  const double top = std::max(std::abs(spec.values.maxCoeff()), 1.0);
  if (!(spec.values.minCoeff() > kDefaultRankEpsilon * top)) {
    throw InvalidSigma("reduce_sigma: Sigma is not positive definite");
  }
  const SymMatrix inv_root = spectral_apply(spec, [](double l) { return 1.0 / std::sqrt(l); });
  return SymMatrix::from_upper(inv_root.matrix() * x0.matrix() * inv_root.matrix());
}

LaplaceQuery::LaplaceQuery(SymMatrix u, std::optional<SymMatrix> sigma, std::optional<double> t)
    : u_(std::move(u)), sigma_(std::move(sigma)), t_(t) {
  if (!u_.all_finite() || !positive_definite(u_)) {
    throw InvalidInput("laplace query: u must be positive definite");
  }
}

LaplaceQuery LaplaceQuery::at_time(SymMatrix u, double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw InvalidInput("laplace query: t must be positive");
  return LaplaceQuery(std::move(u), std::nullopt, t);
}

LaplaceQuery LaplaceQuery::with_sigma(SymMatrix u, SymMatrix sigma) {
  if (u.dim() != sigma.dim()) throw InvalidInput("laplace query: dimension mismatch");
  if (!sigma.all_finite() || !positive_definite(sigma)) {
    throw InvalidSigma("laplace query: Sigma must be positive definite");
  }
  return LaplaceQuery(std::move(u), std::move(sigma), std::nullopt);
}

SymMatrix LaplaceQuery::sigma() const {
  if (sigma_) return *sigma_;
  SymMatrix s = SymMatrix::identity(u_.dim());
  for (std::size_t i = 0; i < u_.dim(); ++i) s.set(i, i, *t_);
  return s;
}

double laplace_closed_form(const SymMatrix& x0, double beta, const LaplaceQuery& query) {
  const std::size_t p = x0.dim();
  if (query.u().dim() != p) throw InvalidInput("laplace: dimension mismatch between x0 and u");
  if (!(beta >= 0.0)) throw InvalidInput("laplace: beta must be nonnegative");
  const Eigen::MatrixXd& u = query.u().matrix();
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(p, p);

  // Exponent Tr(x0 u (I + 2 Sigma u)^{-1}) = Tr(x0 (I + 2 u Sigma)^{-1} u); for
  // Sigma = tI this is the same as Tr(x0 (I + 2 Sigma u)^{-1} u).
  double log_det = 0.0;
  Eigen::MatrixXd system;  // I + 2 u Sigma
  if (const auto t = query.time()) {
    const Eigen::MatrixXd m = id + 2.0 * (*t) * u;
    log_det = log_det_spd(m);
    system = m;
  } else {
    // det(I + 2 Sigma u) = det(I + 2 Sigma^{1/2} u Sigma^{1/2}), symmetric PD.
    const SymMatrix sigma = query.sigma();
    const SymMatrix root = spectral_apply(sigma, [](double l) { return std::sqrt(l); });
    log_det = log_det_spd(id + 2.0 * root.matrix() * u * root.matrix());
    system = id + 2.0 * u * sigma.matrix();
  }

  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
  const Eigen::MatrixXd y = lu.solve(u);
  if (!y.allFinite()) throw NumericalError("laplace: I + 2 u Sigma is numerically singular");
  const double exponent = (x0.matrix() * y).trace();
  return std::exp(-beta * log_det - exponent);
}

ExactSampler::ExactSampler(std::size_t n, std::vector<Eigen::VectorXd> means, const SymMatrix& sigma)
    : n_(n), p_(sigma.dim()), means_(std::move(means)) {
  if (n_ == 0) throw InvalidInput("sample_exact: need at least one Gaussian vector");
  if (!sigma.all_finite() || !positive_definite(sigma)) {
    throw InvalidSigma("sample_exact: Sigma must be positive definite");
  }
  if (means_.empty()) means_.assign(n_, Eigen::VectorXd::Zero(p_));
  if (means_.size() != n_) throw InvalidInput("sample_exact: expected one mean per Gaussian vector");
  for (const auto& m : means_) {
    if (static_cast<std::size_t>(m.size()) != p_) throw InvalidInput("sample_exact: mean has wrong length");
  }
  sigma_root_ = spectral_apply(sigma, [](double l) { return std::sqrt(l); }).matrix();
}

SymMatrix ExactSampler::sample(NormalSource& noise) const {
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(p_, p_);
  Eigen::VectorXd z(p_);
  for (std::size_t i = 0; i < n_; ++i) {
    noise.fill(std::span<double>(z.data(), p_));
    const Eigen::VectorXd xi = sigma_root_ * z + means_[i];
    acc.selfadjointView<Eigen::Upper>().rankUpdate(xi);
  }
  return SymMatrix::from_upper(acc);
}

SymMatrix ExactSampler::mean_gram() const {
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(p_, p_);
  for (const auto& m : means_) acc += m * m.transpose();
  return SymMatrix::from_upper(acc);
}

SymMatrix sample_exact(std::size_t n, const std::vector<Eigen::VectorXd>& means,
                       const SymMatrix& sigma, NormalSource& noise) {
  return ExactSampler(n, means, sigma).sample(noise);
}

std::vector<Eigen::VectorXd> means_for_gram(const SymMatrix& x0, std::size_t n, double epsilon) {
  const std::size_t p = x0.dim();
  const Spectrum spec = eig(x0);
  const std::span<const double> values(spec.values.data(), p);
  const RankResult rank = rank_tol(values, epsilon);
  if (rank.not_psd) throw InvalidPoint("means_for_gram: x0 is not positive semidefinite");
  if (static_cast<std::size_t>(rank.rank) > n) {
    throw PreconditionError("means_for_gram: rank(x0) = " + std::to_string(rank.rank) +
                            " exceeds the number of Gaussian vectors n = " + std::to_string(n));
  }
  std::vector<Eigen::VectorXd> means;
  means.reserve(n);
  const double threshold = epsilon * std::max(values.back(), 1.0);
  for (std::size_t i = p; i-- > 0;) {
    if (values[i] > threshold) means.push_back(std::sqrt(values[i]) * spec.vectors.col(i));
  }
  while (means.size() < n) means.push_back(Eigen::VectorXd::Zero(p));
  return means;
}

std::string evaluate_membership_json(std::string_view query) {
  nlohmann::json in;
  try {
    in = nlohmann::json::parse(query);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput(std::string("membership query: malformed JSON: ") + e.what());
  }
  if (!in.is_object() || !in.contains("p") || !in.contains("beta") || !in.contains("x0")) {
    throw InvalidInput("membership query: expected keys p, beta, x0");
  }
  const auto& jp = in.at("p");
  if (!jp.is_number_integer() || jp.get<long>() < 1) throw InvalidInput("membership query: p must be a positive integer");
  const auto p = jp.get<std::size_t>();
  if (!in.at("beta").is_number()) throw InvalidInput("membership query: beta must be a number");
  const double beta = in.at("beta").get<double>();
  if (!in.at("x0").is_array()) throw InvalidInput("membership query: x0 must be an array");
  std::vector<double> upper;
  for (const auto& v : in.at("x0")) {
    if (!v.is_number()) throw InvalidInput("membership query: x0 entries must be numbers");
    upper.push_back(v.get<double>());
  }
  double epsilon = kDefaultRankEpsilon;
  if (in.contains("epsilon")) {
    if (!in.at("epsilon").is_number()) throw InvalidInput("membership query: epsilon must be a number");
    epsilon = in.at("epsilon").get<double>();
  }
  const Membership m = noncentral_member(WallachPoint{SymMatrix::from_upper(p, upper), beta}, epsilon);
  nlohmann::json out;
  out["member"] = m.member;
  out["branch"] = std::string(to_string(m.branch));
  out["rank"] = m.rank;
  return out.dump();
}

}  // namespace besq
