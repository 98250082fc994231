#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace opinionpool {

/// Variance entries are clamped to this floor on construction.
inline constexpr double kVarianceFloor = 1e-12;

/// Gaussian with diagonal covariance, immutable after construction.
class DiagonalGaussian {
 public:
  /// Throws std::invalid_argument if the vectors are empty, differ in size,
  /// or contain non-finite entries. Variances are floored at kVarianceFloor.
  DiagonalGaussian(Eigen::VectorXd mean, Eigen::VectorXd variance);

  Eigen::Index dim() const { return mean_.size(); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::VectorXd& variance() const { return variance_; }

  double log_density(const Eigen::Ref<const Eigen::VectorXd>& z) const;

  /// Row-wise log density for a batch of points (one point per row).
  Eigen::VectorXd log_density_batch(const Eigen::Ref<const Eigen::MatrixXd>& z) const;

 private:
  Eigen::VectorXd mean_;
  Eigen::VectorXd variance_;
  Eigen::VectorXd half_precision_;  // 1 / (2 sigma_d^2)
  double log_norm_ = 0.0;           // -0.5 * sum_d log(2 pi sigma_d^2)
};

/// Pairwise quantities used by Hellinger aggregation: the cross mean and
/// variance per dimension and the Bhattacharyya coefficient of the pair.
struct CrossTerms {
  Eigen::VectorXd mu;
  Eigen::VectorXd variance;
  double log_affinity = 0.0;  // <= 0
  double affinity = 1.0;      // exp(log_affinity), in (0, 1]
};

/// n i.i.d. draws, one per row. Deterministic for a fixed seed; the stream
/// is private to the call, so concurrent sampling needs no locking.
Eigen::MatrixXd sample(const DiagonalGaussian& g, std::size_t n, std::uint64_t seed);

/// Throws std::invalid_argument on dimension mismatch.
CrossTerms cross_terms(const DiagonalGaussian& a, const DiagonalGaussian& b);

}  // namespace opinionpool
