#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "opinionpool/gaussian.hpp"

namespace opinionpool {

/// mohel_aggregate refuses expert sets larger than this (2^M - 1 subsets).
inline constexpr std::size_t kMohelMaxExperts = 20;

/// Weight vectors must sum to 1 within this tolerance.
inline constexpr double kWeightSumTolerance = 1e-9;

/// A panel of expert densities over a common space plus simplex weights.
class ExpertSet {
 public:
  /// Uniform weights 1/M.
  explicit ExpertSet(std::vector<DiagonalGaussian> experts);

  /// Throws std::invalid_argument if experts is empty, dimensions differ,
  /// weights has the wrong length, any weight is negative or non-finite, or
  /// the weights do not sum to 1 within kWeightSumTolerance.
  ExpertSet(std::vector<DiagonalGaussian> experts, Eigen::VectorXd weights);

  std::size_t size() const { return experts_.size(); }
  Eigen::Index dim() const { return experts_.front().dim(); }
  const std::vector<DiagonalGaussian>& experts() const { return experts_; }
  const DiagonalGaussian& expert(std::size_t j) const { return experts_[j]; }
  const Eigen::VectorXd& weights() const { return weights_; }

  ExpertSet with_uniform_weights() const;

 private:
  std::vector<DiagonalGaussian> experts_;
  Eigen::VectorXd weights_;
};

/// Finite Gaussian mixture (components share a dimension, weights on the
/// simplex). The return type of mohel_aggregate.
struct GaussianMixture {
  std::vector<DiagonalGaussian> components;
  Eigen::VectorXd weights;

  double log_density(const Eigen::Ref<const Eigen::VectorXd>& z) const;
  Eigen::VectorXd log_density_batch(const Eigen::Ref<const Eigen::MatrixXd>& z) const;
};

/// Linear pool (mixture of experts): log sum_j lambda_j q_j(z).
double moe_log_density(const ExpertSet& experts, const Eigen::Ref<const Eigen::VectorXd>& z);
Eigen::VectorXd moe_log_density_batch(const ExpertSet& experts,
                                      const Eigen::Ref<const Eigen::MatrixXd>& z);

/// Ancestral draws from the linear pool, one per row.
Eigen::MatrixXd moe_sample(const ExpertSet& experts, std::size_t n, std::uint64_t seed);

/// Unnormalized Hoelder pool: (1/alpha) log sum_j lambda_j q_j(z)^alpha.
/// Requires alpha in (0, 1].
double holder_log_density_unnorm(const ExpertSet& experts, double alpha,
                                 const Eigen::Ref<const Eigen::VectorXd>& z);
Eigen::VectorXd holder_log_density_unnorm_batch(const ExpertSet& experts, double alpha,
                                                const Eigen::Ref<const Eigen::MatrixXd>& z);

/// Self-normalized importance estimate of the Hoelder pool's log normalizer,
/// with the uniform-weight expert mixture as proposal.
struct NormEstimate {
  double log_norm = 0.0;
  double std_err = 0.0;
  double ess = 0.0;
  bool low_ess = false;  // ess < 0.1 n
};

NormEstimate holder_normalize(const ExpertSet& experts, double alpha, std::size_t n,
                              std::uint64_t seed);

/// Product of experts, moment form. Weighted precisions are scaled by M so
/// that uniform weights reproduce the plain product of the experts exactly:
/// precision_d = M sum_j lambda_j / sigma_jd^2.
DiagonalGaussian poe_aggregate(const ExpertSet& experts);

/// Closed-form Gaussian moment match of the normalized Hoelder(1/2) pool.
DiagonalGaussian hellinger_aggregate(const ExpertSet& experts);

/// Equal-weight mixture of hellinger_aggregate over every non-empty expert
/// subset (uniform weights within each subset), components in ascending
/// bitmask order. Throws std::invalid_argument above kMohelMaxExperts.
GaussianMixture mohel_aggregate(const ExpertSet& experts);

/// 2-Wasserstein barycenter: mean_d = sum_j lambda_j mu_jd and
/// std_d = sum_j lambda_j sigma_jd.
DiagonalGaussian wasserstein_barycenter(const ExpertSet& experts);

namespace detail {

/// Moments of the normalized Hoelder(1/2) pool before the variance floor is
/// applied; raw_variance can carry tiny negative rounding residue.
struct HellingerMoments {
  Eigen::VectorXd mean;
  Eigen::VectorXd raw_variance;
};

HellingerMoments hellinger_raw_moments(const ExpertSet& experts);

}  // namespace detail

/// A pooled density that metrics can evaluate. Exact kinds (moe, poe,
/// hellinger) are normalized by construction; holder kinds carry an
/// unnormalized density plus an optional normalizer estimate.
class PooledDensity {
 public:
  enum class Kind { moe, holder, poe_exact, hellinger_exact };

  static PooledDensity moe(ExpertSet experts);
  static PooledDensity holder(ExpertSet experts, double alpha);
  static PooledDensity poe_exact(ExpertSet experts);
  static PooledDensity hellinger_exact(ExpertSet experts);

  Kind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  const ExpertSet& source() const { return experts_; }
  Eigen::Index dim() const { return experts_.dim(); }

  /// The aggregated Gaussian for poe_exact / hellinger_exact kinds.
  /// Throws std::logic_error for other kinds.
  const DiagonalGaussian& gaussian() const;

  double log_density_unnorm(const Eigen::Ref<const Eigen::VectorXd>& z) const;
  Eigen::VectorXd log_density_unnorm_batch(const Eigen::Ref<const Eigen::MatrixXd>& z) const;

  /// True for exact kinds and for holder kinds after normalize().
  bool normalized() const;

  /// Zero with zero error for exact kinds; the stored estimate for holder.
  /// Throws std::logic_error for a holder density before normalize().
  const NormEstimate& norm_estimate() const;

  /// Estimates the holder normalizer (no-op for exact kinds).
  void normalize(std::size_t n, std::uint64_t seed);

  /// Normalized log density. A holder density must be normalized first;
  /// otherwise std::logic_error says to call normalize / holder_normalize.
  double log_density(const Eigen::Ref<const Eigen::VectorXd>& z) const;
  Eigen::VectorXd log_density_batch(const Eigen::Ref<const Eigen::MatrixXd>& z) const;

 private:
  PooledDensity(Kind kind, ExpertSet experts, double alpha);

  Kind kind_;
  ExpertSet experts_;
  double alpha_ = 0.0;
  std::optional<DiagonalGaussian> gaussian_;
  std::optional<NormEstimate> norm_;
};

}  // namespace opinionpool
