#include "opinionpool/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace opinionpool::rng {

std::uint64_t derive(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix64(root);
  for (std::uint64_t p : path) {
    s = mix64(s ^ mix64(p + 0x9e3779b97f4a7c15ULL));
  }
  return s;
}

double Stream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

Eigen::Index Stream::categorical(const Eigen::Ref<const Eigen::VectorXd>& weights) {
  if (weights.size() == 0) {
    throw std::invalid_argument("categorical draw needs a non-empty weight vector");
  }
  const double u = uniform() * weights.sum();
  double acc = 0.0;
  Eigen::Index last_positive = 0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights[i] > 0.0) {
      last_positive = i;
    }
    acc += weights[i];
    if (u < acc) {
      return i;
    }
  }
  return last_positive;
}

}  // namespace opinionpool::rng
