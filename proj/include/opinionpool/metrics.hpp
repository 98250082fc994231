#pragma once

#include <cstdint>

#include "opinionpool/gaussian.hpp"
#include "opinionpool/pooling.hpp"

namespace opinionpool {

/// Monte Carlo estimate with its standard error.
struct Estimate {
  double value = 0.0;
  double std_err = 0.0;
};

/// Bhattacharyya estimate. value is clamped to [0, 1]; raw keeps the
/// unclamped mean so callers can see overshoot.
struct BcEstimate {
  double value = 0.0;
  double raw = 0.0;
  double std_err = 0.0;
};

struct MetricReport {
  Estimate nll;
  BcEstimate bc;
  Estimate sharpness;
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
};

/// E_truth[-log q(z)] by Monte Carlo with n draws from truth. For a holder
/// target the normalizer estimate must exist (normalize() first) and its
/// uncertainty is folded into std_err.
Estimate mc_nll(const PooledDensity& target, const DiagonalGaussian& truth, std::size_t n,
                std::uint64_t seed);
Estimate mc_nll(const DiagonalGaussian& target, const DiagonalGaussian& truth, std::size_t n,
                std::uint64_t seed);

/// E_truth[sqrt(q(z)/p(z))], the Bhattacharyya coefficient, by Monte Carlo
/// with n draws from truth. A holder target must be normalized; the
/// normalizer uncertainty enters std_err through the delta method.
BcEstimate mc_bhattacharyya(const PooledDensity& target, const DiagonalGaussian& truth,
                            std::size_t n, std::uint64_t seed);
BcEstimate mc_bhattacharyya(const DiagonalGaussian& target, const DiagonalGaussian& truth,
                            std::size_t n, std::uint64_t seed);

/// Total predictive variance, trace of the covariance. Closed form.
double sharpness(const DiagonalGaussian& target);

/// Empirical covariance trace from n draws. moe targets are sampled
/// directly; holder targets are sampled by importance resampling from the
/// uniform expert mixture (no normalizer needed); exact Gaussian kinds are
/// sampled from their aggregate.
Estimate sharpness_sampled(const PooledDensity& target, std::size_t n, std::uint64_t seed);

/// D_alpha(q || phi) = (1/(alpha(alpha-1))) E_phi[(q/phi)^alpha - 1] by
/// Monte Carlo with n draws from phi. Requires alpha in (0, 1).
Estimate estimate_alpha_divergence(const DiagonalGaussian& q, const DiagonalGaussian& phi,
                                   double alpha, std::size_t n, std::uint64_t seed);

}  // namespace opinionpool
