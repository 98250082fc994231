#include "opinionpool/gaussian.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "opinionpool/rng.hpp"

namespace opinionpool {

namespace {

constexpr double kLogTwoPi = 1.8378770664093453;

void check_finite(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite()) {
    throw std::invalid_argument(std::string(what) + " must be finite");
  }
}

}  // namespace

DiagonalGaussian::DiagonalGaussian(Eigen::VectorXd mean, Eigen::VectorXd variance)
    : mean_(std::move(mean)), variance_(std::move(variance)) {
  if (mean_.size() == 0) {
    throw std::invalid_argument("mean must be non-empty");
  }
  if (variance_.size() != mean_.size()) {
    throw std::invalid_argument("mean and variance must have the same dimension");
  }
  check_finite(mean_, "mean");
  check_finite(variance_, "variance");
  variance_ = variance_.cwiseMax(kVarianceFloor);
  half_precision_ = 0.5 * variance_.cwiseInverse();
  log_norm_ = -0.5 * (variance_.array().log() + kLogTwoPi).sum();
}

double DiagonalGaussian::log_density(const Eigen::Ref<const Eigen::VectorXd>& z) const {
  if (z.size() != dim()) {
    throw std::invalid_argument("point dimension does not match the density");
  }
  const Eigen::ArrayXd centered = (z - mean_).array();
  return log_norm_ - (centered.square() * half_precision_.array()).sum();
}

Eigen::VectorXd DiagonalGaussian::log_density_batch(
    const Eigen::Ref<const Eigen::MatrixXd>& z) const {
  if (z.cols() != dim()) {
    throw std::invalid_argument("point dimension does not match the density");
  }
  Eigen::MatrixXd centered = z.rowwise() - mean_.transpose();
  Eigen::VectorXd out = centered.array().square().matrix() * half_precision_;
  return (-out).array() + log_norm_;
}

Eigen::MatrixXd sample(const DiagonalGaussian& g, std::size_t n, std::uint64_t seed) {
  rng::Stream stream(seed);
  const Eigen::Index d = g.dim();
  const Eigen::VectorXd sd = g.variance().cwiseSqrt();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), d);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      out(i, j) = g.mean()[j] + sd[j] * stream.normal();
    }
  }
  return out;
}

CrossTerms cross_terms(const DiagonalGaussian& a, const DiagonalGaussian& b) {
  if (a.dim() != b.dim()) {
    throw std::invalid_argument("cross terms need densities of equal dimension");
  }
  const Eigen::ArrayXd va = a.variance().array();
  const Eigen::ArrayXd vb = b.variance().array();
  const Eigen::ArrayXd ma = a.mean().array();
  const Eigen::ArrayXd mb = b.mean().array();
  const Eigen::ArrayXd vsum = va + vb;

  CrossTerms out;
  out.mu = ((ma * vb + mb * va) / vsum).matrix();
  out.variance = (2.0 * va * vb / vsum).matrix();
  out.log_affinity =
      (0.5 * (2.0 * (va * vb).sqrt() / vsum).log() - (ma - mb).square() / (4.0 * vsum)).sum();
  out.affinity = std::exp(out.log_affinity);
  return out;
}

}  // namespace opinionpool
