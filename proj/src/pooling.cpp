#include "opinionpool/pooling.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include "opinionpool/rng.hpp"

namespace opinionpool {

namespace {

constexpr Eigen::Index kBatchChunk = 1 << 16;

Eigen::VectorXd validate_weights(Eigen::VectorXd weights, std::size_t m) {
  if (static_cast<std::size_t>(weights.size()) != m) {
    throw std::invalid_argument("weights must have one entry per expert");
  }
  if (!weights.allFinite() || (weights.array() < 0.0).any()) {
    throw std::invalid_argument("weights must be finite and non-negative");
  }
  if (std::abs(weights.sum() - 1.0) > kWeightSumTolerance) {
    throw std::invalid_argument("weights must sum to 1");
  }
  return weights;
}

void check_common_dim(const std::vector<DiagonalGaussian>& experts) {
  if (experts.empty()) {
    throw std::invalid_argument("expert set must be non-empty");
  }
  const Eigen::Index d = experts.front().dim();
  for (const auto& e : experts) {
    if (e.dim() != d) {
      throw std::invalid_argument("experts must share a common dimension");
    }
  }
}

Eigen::VectorXd log_weights(const Eigen::VectorXd& weights) {
  Eigen::VectorXd lw(weights.size());
  for (Eigen::Index j = 0; j < weights.size(); ++j) {
    lw[j] = weights[j] > 0.0 ? std::log(weights[j])
                             : -std::numeric_limits<double>::infinity();
  }
  return lw;
}

/// (1/alpha) log sum_j exp(logw_j + alpha log q_j(z)) per row. alpha = 1
/// gives the plain mixture log density.
Eigen::VectorXd scaled_mixture_log_density(const std::vector<DiagonalGaussian>& comps,
                                           const Eigen::VectorXd& logw, double alpha,
                                           const Eigen::Ref<const Eigen::MatrixXd>& z) {
  const Eigen::Index n = z.rows();
  const Eigen::Index m = static_cast<Eigen::Index>(comps.size());
  Eigen::VectorXd out(n);
  for (Eigen::Index start = 0; start < n; start += kBatchChunk) {
    const Eigen::Index len = std::min(kBatchChunk, n - start);
    Eigen::MatrixXd terms(len, m);
    for (Eigen::Index j = 0; j < m; ++j) {
      terms.col(j) =
          (alpha * comps[static_cast<std::size_t>(j)].log_density_batch(z.middleRows(start, len)))
              .array() +
          logw[j];
    }
    Eigen::VectorXd rowmax = terms.rowwise().maxCoeff();
    Eigen::VectorXd lse =
        ((terms.colwise() - rowmax).array().exp().rowwise().sum().log() + rowmax.array()).matrix();
    out.segment(start, len) = lse / alpha;
  }
  return out;
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0) || alpha > 1.0) {
    throw std::invalid_argument("alpha must be in (0, 1]");
  }
}

std::size_t pair_index(std::size_t i, std::size_t j, std::size_t m) {
  return i * m - i * (i + 1) / 2 + (j - i - 1);
}

/// Upper-triangle tables of the pairwise cross quantities, so subset
/// aggregation (mohel) computes each pair once.
struct PairwiseTables {
  std::vector<Eigen::ArrayXd> mu;
  std::vector<Eigen::ArrayXd> second;  // mu_ij^2 + var_ij per dimension
  std::vector<double> affinity;
};

PairwiseTables build_pair_tables(const std::vector<DiagonalGaussian>& experts) {
  const std::size_t m = experts.size();
  PairwiseTables t;
  t.mu.reserve(m * (m - 1) / 2);
  t.second.reserve(m * (m - 1) / 2);
  t.affinity.reserve(m * (m - 1) / 2);
  for (std::size_t i = 0; i + 1 < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      CrossTerms ct = cross_terms(experts[i], experts[j]);
      t.mu.push_back(ct.mu.array());
      t.second.push_back(ct.mu.array().square() + ct.variance.array());
      t.affinity.push_back(ct.affinity);
    }
  }
  return t;
}

detail::HellingerMoments hellinger_from_tables(const std::vector<DiagonalGaussian>& experts,
                                               const PairwiseTables& tables,
                                               const std::vector<std::size_t>& indices,
                                               const Eigen::VectorXd& lambda) {
  const std::size_t m = experts.size();
  const Eigen::Index d = experts.front().dim();
  double denom = 0.0;
  Eigen::ArrayXd num_mean = Eigen::ArrayXd::Zero(d);
  Eigen::ArrayXd num_second = Eigen::ArrayXd::Zero(d);
  for (std::size_t a = 0; a < indices.size(); ++a) {
    const std::size_t i = indices[a];
    const double w = lambda[static_cast<Eigen::Index>(a)] * lambda[static_cast<Eigen::Index>(a)];
    denom += w;
    num_mean += w * experts[i].mean().array();
    num_second += w * (experts[i].mean().array().square() + experts[i].variance().array());
  }
  for (std::size_t a = 0; a + 1 < indices.size(); ++a) {
    for (std::size_t b = a + 1; b < indices.size(); ++b) {
      const std::size_t i = indices[a];
      const std::size_t j = indices[b];
      const std::size_t p = i < j ? pair_index(i, j, m) : pair_index(j, i, m);
      const double w = 2.0 * lambda[static_cast<Eigen::Index>(a)] *
                       lambda[static_cast<Eigen::Index>(b)] * tables.affinity[p];
      denom += w;
      num_mean += w * tables.mu[p];
      num_second += w * tables.second[p];
    }
  }
  detail::HellingerMoments out;
  out.mean = (num_mean / denom).matrix();
  out.raw_variance = (num_second / denom - (num_mean / denom).square()).matrix();
  return out;
}

}  // namespace

ExpertSet::ExpertSet(std::vector<DiagonalGaussian> experts) : experts_(std::move(experts)) {
  check_common_dim(experts_);
  weights_ = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(experts_.size()),
                                       1.0 / static_cast<double>(experts_.size()));
}

ExpertSet::ExpertSet(std::vector<DiagonalGaussian> experts, Eigen::VectorXd weights)
    : experts_(std::move(experts)) {
  check_common_dim(experts_);
  weights_ = validate_weights(std::move(weights), experts_.size());
}

ExpertSet ExpertSet::with_uniform_weights() const { return ExpertSet(experts_); }

double GaussianMixture::log_density(const Eigen::Ref<const Eigen::VectorXd>& z) const {
  return log_density_batch(z.transpose())[0];
}

Eigen::VectorXd GaussianMixture::log_density_batch(
    const Eigen::Ref<const Eigen::MatrixXd>& z) const {
  return scaled_mixture_log_density(components, log_weights(weights), 1.0, z);
}

double moe_log_density(const ExpertSet& experts, const Eigen::Ref<const Eigen::VectorXd>& z) {
  return moe_log_density_batch(experts, z.transpose())[0];
}

Eigen::VectorXd moe_log_density_batch(const ExpertSet& experts,
                                      const Eigen::Ref<const Eigen::MatrixXd>& z) {
  if (z.cols() != experts.dim()) {
    throw std::invalid_argument("point dimension does not match the expert set");
  }
  return scaled_mixture_log_density(experts.experts(), log_weights(experts.weights()), 1.0, z);
}

Eigen::MatrixXd moe_sample(const ExpertSet& experts, std::size_t n, std::uint64_t seed) {
  rng::Stream stream(seed);
  const Eigen::Index d = experts.dim();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), d);
  std::vector<Eigen::VectorXd> sds;
  sds.reserve(experts.size());
  for (const auto& e : experts.experts()) {
    sds.push_back(e.variance().cwiseSqrt());
  }
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const auto j = static_cast<std::size_t>(stream.categorical(experts.weights()));
    for (Eigen::Index k = 0; k < d; ++k) {
      out(i, k) = experts.expert(j).mean()[k] + sds[j][k] * stream.normal();
    }
  }
  return out;
}

double holder_log_density_unnorm(const ExpertSet& experts, double alpha,
                                 const Eigen::Ref<const Eigen::VectorXd>& z) {
  return holder_log_density_unnorm_batch(experts, alpha, z.transpose())[0];
}

Eigen::VectorXd holder_log_density_unnorm_batch(const ExpertSet& experts, double alpha,
                                                const Eigen::Ref<const Eigen::MatrixXd>& z) {
  check_alpha(alpha);
  if (z.cols() != experts.dim()) {
    throw std::invalid_argument("point dimension does not match the expert set");
  }
  return scaled_mixture_log_density(experts.experts(), log_weights(experts.weights()), alpha, z);
}

NormEstimate holder_normalize(const ExpertSet& experts, double alpha, std::size_t n,
                              std::uint64_t seed) {
  check_alpha(alpha);
  if (n < 2) {
    throw std::invalid_argument("normalizer estimation needs at least 2 samples");
  }
  const ExpertSet proposal = experts.with_uniform_weights();
  const Eigen::VectorXd uniform_logw = log_weights(proposal.weights());
  const Eigen::VectorXd target_logw = log_weights(experts.weights());

  rng::Stream stream(seed);
  const Eigen::Index d = experts.dim();
  std::vector<Eigen::VectorXd> sds;
  sds.reserve(experts.size());
  for (const auto& e : experts.experts()) {
    sds.push_back(e.variance().cwiseSqrt());
  }

  Eigen::VectorXd logw(static_cast<Eigen::Index>(n));
  Eigen::MatrixXd z(kBatchChunk, d);
  Eigen::Index done = 0;
  const auto total = static_cast<Eigen::Index>(n);
  while (done < total) {
    const Eigen::Index len = std::min(kBatchChunk, total - done);
    for (Eigen::Index i = 0; i < len; ++i) {
      const auto j = static_cast<std::size_t>(stream.categorical(proposal.weights()));
      for (Eigen::Index k = 0; k < d; ++k) {
        z(i, k) = experts.expert(j).mean()[k] + sds[j][k] * stream.normal();
      }
    }
    const auto block = z.topRows(len);
    logw.segment(done, len) =
        scaled_mixture_log_density(experts.experts(), target_logw, alpha, block) -
        scaled_mixture_log_density(experts.experts(), uniform_logw, 1.0, block);
    done += len;
  }

  const double logmax = logw.maxCoeff();
  const Eigen::ArrayXd w = (logw.array() - logmax).exp();
  const double sw = w.sum();
  const double sw2 = w.square().sum();
  const double n_d = static_cast<double>(n);
  const double mean_w = sw / n_d;
  const double var_w = std::max(0.0, (sw2 - sw * sw / n_d) / (n_d - 1.0));

  NormEstimate out;
  out.log_norm = logmax + std::log(mean_w);
  out.std_err = std::sqrt(var_w / n_d) / mean_w;
  out.ess = sw * sw / sw2;
  out.low_ess = out.ess < 0.1 * n_d;
  return out;
}

DiagonalGaussian poe_aggregate(const ExpertSet& experts) {
  const double m = static_cast<double>(experts.size());
  const Eigen::Index d = experts.dim();
  Eigen::ArrayXd wprec = Eigen::ArrayXd::Zero(d);
  Eigen::ArrayXd wmean = Eigen::ArrayXd::Zero(d);
  for (std::size_t j = 0; j < experts.size(); ++j) {
    const double lam = experts.weights()[static_cast<Eigen::Index>(j)];
    const Eigen::ArrayXd prec = experts.expert(j).variance().array().inverse();
    wprec += lam * prec;
    wmean += lam * prec * experts.expert(j).mean().array();
  }
  const Eigen::VectorXd mean = (wmean / wprec).matrix();
  const Eigen::VectorXd variance = (m * wprec).inverse().matrix();
  return {mean, variance};
}

detail::HellingerMoments detail::hellinger_raw_moments(const ExpertSet& experts) {
  const PairwiseTables tables = build_pair_tables(experts.experts());
  std::vector<std::size_t> all(experts.size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    all[i] = i;
  }
  return hellinger_from_tables(experts.experts(), tables, all, experts.weights());
}

DiagonalGaussian hellinger_aggregate(const ExpertSet& experts) {
  const detail::HellingerMoments m = detail::hellinger_raw_moments(experts);
  return {m.mean, m.raw_variance};
}

GaussianMixture mohel_aggregate(const ExpertSet& experts) {
  const std::size_t m = experts.size();
  if (m > kMohelMaxExperts) {
    throw std::invalid_argument("mixture-of-subsets aggregation supports at most " +
                                std::to_string(kMohelMaxExperts) + " experts");
  }
  const PairwiseTables tables = build_pair_tables(experts.experts());
  const std::size_t count = (std::size_t{1} << m) - 1;

  GaussianMixture out;
  out.components.reserve(count);
  out.weights = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(count),
                                          1.0 / static_cast<double>(count));
  std::vector<std::size_t> indices;
  indices.reserve(m);
  for (std::size_t mask = 1; mask <= count; ++mask) {
    indices.clear();
    for (std::size_t i = 0; i < m; ++i) {
      if (mask & (std::size_t{1} << i)) {
        indices.push_back(i);
      }
    }
    const Eigen::VectorXd lambda = Eigen::VectorXd::Constant(
        static_cast<Eigen::Index>(indices.size()), 1.0 / static_cast<double>(indices.size()));
    const detail::HellingerMoments hm =
        hellinger_from_tables(experts.experts(), tables, indices, lambda);
    out.components.emplace_back(hm.mean, hm.raw_variance);
  }
  return out;
}

DiagonalGaussian wasserstein_barycenter(const ExpertSet& experts) {
  const Eigen::Index d = experts.dim();
  Eigen::ArrayXd mean = Eigen::ArrayXd::Zero(d);
  Eigen::ArrayXd sd = Eigen::ArrayXd::Zero(d);
  for (std::size_t j = 0; j < experts.size(); ++j) {
    const double lam = experts.weights()[static_cast<Eigen::Index>(j)];
    mean += lam * experts.expert(j).mean().array();
    sd += lam * experts.expert(j).variance().array().sqrt();
  }
  return {mean.matrix(), sd.square().matrix()};
}

PooledDensity::PooledDensity(Kind kind, ExpertSet experts, double alpha)
    : kind_(kind), experts_(std::move(experts)), alpha_(alpha) {}

PooledDensity PooledDensity::moe(ExpertSet experts) {
  PooledDensity out(Kind::moe, std::move(experts), 1.0);
  out.norm_ = NormEstimate{};
  return out;
}

PooledDensity PooledDensity::holder(ExpertSet experts, double alpha) {
  check_alpha(alpha);
  return PooledDensity(Kind::holder, std::move(experts), alpha);
}

PooledDensity PooledDensity::poe_exact(ExpertSet experts) {
  PooledDensity out(Kind::poe_exact, std::move(experts), 0.0);
  out.gaussian_ = poe_aggregate(out.experts_);
  out.norm_ = NormEstimate{};
  return out;
}

PooledDensity PooledDensity::hellinger_exact(ExpertSet experts) {
  PooledDensity out(Kind::hellinger_exact, std::move(experts), 0.5);
  out.gaussian_ = hellinger_aggregate(out.experts_);
  out.norm_ = NormEstimate{};
  return out;
}

const DiagonalGaussian& PooledDensity::gaussian() const {
  if (!gaussian_) {
    throw std::logic_error("only exact Gaussian kinds carry an aggregate");
  }
  return *gaussian_;
}

double PooledDensity::log_density_unnorm(const Eigen::Ref<const Eigen::VectorXd>& z) const {
  return log_density_unnorm_batch(z.transpose())[0];
}

Eigen::VectorXd PooledDensity::log_density_unnorm_batch(
    const Eigen::Ref<const Eigen::MatrixXd>& z) const {
  switch (kind_) {
    case Kind::moe:
      return moe_log_density_batch(experts_, z);
    case Kind::holder:
      return holder_log_density_unnorm_batch(experts_, alpha_, z);
    case Kind::poe_exact:
    case Kind::hellinger_exact:
      return gaussian_->log_density_batch(z);
  }
  throw std::logic_error("unreachable pooled density kind");
}

bool PooledDensity::normalized() const { return norm_.has_value(); }

const NormEstimate& PooledDensity::norm_estimate() const {
  if (!norm_) {
    throw std::logic_error(
        "holder density is unnormalized; call normalize() or holder_normalize first");
  }
  return *norm_;
}

void PooledDensity::normalize(std::size_t n, std::uint64_t seed) {
  if (kind_ == Kind::holder) {
    norm_ = holder_normalize(experts_, alpha_, n, seed);
  }
}

double PooledDensity::log_density(const Eigen::Ref<const Eigen::VectorXd>& z) const {
  return log_density_batch(z.transpose())[0];
}

Eigen::VectorXd PooledDensity::log_density_batch(
    const Eigen::Ref<const Eigen::MatrixXd>& z) const {
  const NormEstimate& norm = norm_estimate();
  Eigen::VectorXd out = log_density_unnorm_batch(z);
  if (norm.log_norm != 0.0) {
    out.array() -= norm.log_norm;
  }
  return out;
}

}  // namespace opinionpool
