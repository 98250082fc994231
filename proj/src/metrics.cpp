#include "opinionpool/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "opinionpool/rng.hpp"

namespace opinionpool {

namespace {

constexpr Eigen::Index kChunk = 1 << 15;

struct RunningMoments {
  double sum = 0.0;
  double sumsq = 0.0;
  std::size_t n = 0;

  void add(const Eigen::VectorXd& values) {
    sum += values.sum();
    sumsq += values.squaredNorm();
    n += static_cast<std::size_t>(values.size());
  }

  double mean() const { return sum / static_cast<double>(n); }

  double std_err() const {
    const double n_d = static_cast<double>(n);
    const double var = std::max(0.0, (sumsq - sum * sum / n_d) / (n_d - 1.0));
    return std::sqrt(var / n_d);
  }
};

void check_n(std::size_t n) {
  if (n < 2) {
    throw std::invalid_argument("Monte Carlo estimation needs at least 2 samples");
  }
}

/// Streams n truth draws through fn in chunks; fn maps a batch of points to
/// one value per row.
RunningMoments accumulate_over_truth(
    const DiagonalGaussian& truth, std::size_t n, std::uint64_t seed,
    const std::function<Eigen::VectorXd(const Eigen::Ref<const Eigen::MatrixXd>&)>& fn) {
  rng::Stream stream(seed);
  const Eigen::Index d = truth.dim();
  const Eigen::VectorXd sd = truth.variance().cwiseSqrt();
  Eigen::MatrixXd z(kChunk, d);
  RunningMoments acc;
  auto left = static_cast<Eigen::Index>(n);
  while (left > 0) {
    const Eigen::Index len = std::min(kChunk, left);
    for (Eigen::Index i = 0; i < len; ++i) {
      for (Eigen::Index k = 0; k < d; ++k) {
        z(i, k) = truth.mean()[k] + sd[k] * stream.normal();
      }
    }
    acc.add(fn(z.topRows(len)));
    left -= len;
  }
  return acc;
}

Estimate nll_impl(
    const std::function<Eigen::VectorXd(const Eigen::Ref<const Eigen::MatrixXd>&)>& log_density,
    const DiagonalGaussian& truth, std::size_t n, std::uint64_t seed, double norm_std_err) {
  check_n(n);
  const RunningMoments acc = accumulate_over_truth(
      truth, n, seed,
      [&](const Eigen::Ref<const Eigen::MatrixXd>& z) { return (-log_density(z)).eval(); });
  return {acc.mean(), std::hypot(acc.std_err(), norm_std_err)};
}

BcEstimate bc_impl(
    const std::function<Eigen::VectorXd(const Eigen::Ref<const Eigen::MatrixXd>&)>& log_density,
    const DiagonalGaussian& truth, std::size_t n, std::uint64_t seed, double norm_std_err) {
  check_n(n);
  const RunningMoments acc = accumulate_over_truth(
      truth, n, seed, [&](const Eigen::Ref<const Eigen::MatrixXd>& z) {
        return (0.5 * (log_density(z) - truth.log_density_batch(z)).array()).exp().matrix().eval();
      });
  BcEstimate out;
  out.raw = acc.mean();
  out.value = std::clamp(out.raw, 0.0, 1.0);
  // The normalizer enters as exp(-logZ/2); first order in its error.
  out.std_err = std::hypot(acc.std_err(), 0.5 * out.raw * norm_std_err);
  return out;
}

Estimate empirical_sharpness(const Eigen::MatrixXd& z) {
  const double n = static_cast<double>(z.rows());
  const Eigen::RowVectorXd mu = z.colwise().mean();
  const Eigen::VectorXd y = (z.rowwise() - mu).rowwise().squaredNorm();
  const double mean_y = y.mean();
  const double var_y = std::max(0.0, (y.array() - mean_y).square().sum() / (n - 1.0));
  return {mean_y * n / (n - 1.0), std::sqrt(var_y / n)};
}

/// Systematic resampling: n evenly spaced positions with one random offset.
std::vector<Eigen::Index> systematic_resample(const Eigen::VectorXd& norm_weights, double offset) {
  const Eigen::Index n = norm_weights.size();
  std::vector<Eigen::Index> picks(static_cast<std::size_t>(n));
  double cum = norm_weights[0];
  Eigen::Index j = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double u = (static_cast<double>(k) + offset) / static_cast<double>(n);
    while (u > cum && j + 1 < n) {
      ++j;
      cum += norm_weights[j];
    }
    picks[static_cast<std::size_t>(k)] = j;
  }
  return picks;
}

}  // namespace

Estimate mc_nll(const PooledDensity& target, const DiagonalGaussian& truth, std::size_t n,
                std::uint64_t seed) {
  if (target.dim() != truth.dim()) {
    throw std::invalid_argument("target and truth must share a dimension");
  }
  const double norm_se = target.norm_estimate().std_err;
  return nll_impl(
      [&](const Eigen::Ref<const Eigen::MatrixXd>& z) { return target.log_density_batch(z); },
      truth, n, seed, norm_se);
}

Estimate mc_nll(const DiagonalGaussian& target, const DiagonalGaussian& truth, std::size_t n,
                std::uint64_t seed) {
  if (target.dim() != truth.dim()) {
    throw std::invalid_argument("target and truth must share a dimension");
  }
  return nll_impl(
      [&](const Eigen::Ref<const Eigen::MatrixXd>& z) { return target.log_density_batch(z); },
      truth, n, seed, 0.0);
}

BcEstimate mc_bhattacharyya(const PooledDensity& target, const DiagonalGaussian& truth,
                            std::size_t n, std::uint64_t seed) {
  if (target.dim() != truth.dim()) {
    throw std::invalid_argument("target and truth must share a dimension");
  }
  const double norm_se = target.norm_estimate().std_err;
  return bc_impl(
      [&](const Eigen::Ref<const Eigen::MatrixXd>& z) { return target.log_density_batch(z); },
      truth, n, seed, norm_se);
}

BcEstimate mc_bhattacharyya(const DiagonalGaussian& target, const DiagonalGaussian& truth,
                            std::size_t n, std::uint64_t seed) {
  if (target.dim() != truth.dim()) {
    throw std::invalid_argument("target and truth must share a dimension");
  }
  return bc_impl(
      [&](const Eigen::Ref<const Eigen::MatrixXd>& z) { return target.log_density_batch(z); },
      truth, n, seed, 0.0);
}

double sharpness(const DiagonalGaussian& target) { return target.variance().sum(); }

Estimate sharpness_sampled(const PooledDensity& target, std::size_t n, std::uint64_t seed) {
  if (n < 2) {
    throw std::invalid_argument("sampled sharpness needs at least 2 samples");
  }
  switch (target.kind()) {
    case PooledDensity::Kind::moe:
      return empirical_sharpness(
          moe_sample(target.source(), n, rng::derive(seed, {0})));
    case PooledDensity::Kind::poe_exact:
    case PooledDensity::Kind::hellinger_exact:
      return empirical_sharpness(sample(target.gaussian(), n, rng::derive(seed, {0})));
    case PooledDensity::Kind::holder:
      break;
  }

  // Hoelder pool: importance resampling from the uniform expert mixture.
  // The weights self-normalize, so no normalizer estimate is needed.
  const ExpertSet proposal = target.source().with_uniform_weights();
  const Eigen::MatrixXd z = moe_sample(proposal, n, rng::derive(seed, {0}));
  Eigen::VectorXd logw =
      target.log_density_unnorm_batch(z) - moe_log_density_batch(proposal, z);
  logw.array() -= logw.maxCoeff();
  Eigen::VectorXd w = logw.array().exp();
  w /= w.sum();

  rng::Stream pick_stream(rng::derive(seed, {1}));
  const std::vector<Eigen::Index> picks = systematic_resample(w, pick_stream.uniform());
  Eigen::MatrixXd resampled(z.rows(), z.cols());
  for (Eigen::Index k = 0; k < resampled.rows(); ++k) {
    resampled.row(k) = z.row(picks[static_cast<std::size_t>(k)]);
  }
  const Estimate res = empirical_sharpness(resampled);

  // Standard error from the self-normalized weighted estimator; resampling
  // noise is of the same order.
  const Eigen::RowVectorXd wmu = w.transpose() * z;
  const Eigen::VectorXd y = (z.rowwise() - wmu).rowwise().squaredNorm();
  const double wy = w.dot(y);
  const double se = std::sqrt((w.array().square() * (y.array() - wy).square()).sum());
  return {res.value, se};
}

Estimate estimate_alpha_divergence(const DiagonalGaussian& q, const DiagonalGaussian& phi,
                                   double alpha, std::size_t n, std::uint64_t seed) {
  if (!(alpha > 0.0) || !(alpha < 1.0)) {
    throw std::invalid_argument("alpha must be in (0, 1)");
  }
  if (q.dim() != phi.dim()) {
    throw std::invalid_argument("densities must share a dimension");
  }
  check_n(n);
  const double scale = 1.0 / (alpha * (alpha - 1.0));
  const RunningMoments acc = accumulate_over_truth(
      phi, n, seed, [&](const Eigen::Ref<const Eigen::MatrixXd>& z) {
        const Eigen::ArrayXd ratio =
            (alpha * (q.log_density_batch(z) - phi.log_density_batch(z)).array()).exp();
        return ((ratio - 1.0) * scale).matrix().eval();
      });
  return {acc.mean(), acc.std_err()};
}

}  // namespace opinionpool
