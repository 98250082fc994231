#include "opinionpool/expfam.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace opinionpool {

namespace {

constexpr double kLogPi = 1.1447298858494002;

void check_member(const ExpFamilyMember& m) {
  if (m.eta.size() != m.family.natural_dim) {
    throw std::invalid_argument("natural parameter has the wrong dimension for " + m.family.name);
  }
  if (!m.family.in_domain(m.eta)) {
    throw std::invalid_argument("natural parameter outside the domain of " + m.family.name);
  }
}

void check_same_family(const ExpFamilyMember& a, const ExpFamilyMember& b) {
  if (a.family.name != b.family.name || a.family.natural_dim != b.family.natural_dim) {
    throw std::invalid_argument("members must belong to the same family");
  }
}

}  // namespace

FamilyDescriptor gaussian_diagonal_family(Eigen::Index dim) {
  if (dim <= 0) {
    throw std::invalid_argument("dimension must be positive");
  }
  FamilyDescriptor f;
  f.name = "gaussian_diagonal_" + std::to_string(dim);
  f.natural_dim = 2 * dim;
  // eta = (eta1, eta2) with eta1_d = mu_d / sigma_d^2, eta2_d = -1/(2 sigma_d^2).
  f.in_domain = [dim](const Eigen::VectorXd& eta) {
    return eta.allFinite() && (eta.tail(dim).array() < 0.0).all();
  };
  f.log_partition = [dim](const Eigen::VectorXd& eta) {
    const Eigen::ArrayXd e1 = eta.head(dim).array();
    const Eigen::ArrayXd e2 = eta.tail(dim).array();
    return (-e1.square() / (4.0 * e2) + 0.5 * (kLogPi - (-e2).log())).sum();
  };
  f.mean = [dim](const Eigen::VectorXd& eta) {
    const Eigen::ArrayXd e1 = eta.head(dim).array();
    const Eigen::ArrayXd e2 = eta.tail(dim).array();
    return Eigen::VectorXd((-e1 / (2.0 * e2)).matrix());
  };
  f.second_moment = [dim](const Eigen::VectorXd& eta) {
    const Eigen::ArrayXd e1 = eta.head(dim).array();
    const Eigen::ArrayXd e2 = eta.tail(dim).array();
    const Eigen::ArrayXd mu = -e1 / (2.0 * e2);
    const Eigen::ArrayXd var = -1.0 / (2.0 * e2);
    Eigen::MatrixXd out = mu.matrix() * mu.matrix().transpose();
    out.diagonal() += var.matrix();
    return out;
  };
  return f;
}

FamilyDescriptor exponential_family() {
  FamilyDescriptor f;
  f.name = "exponential";
  f.natural_dim = 1;
  // eta = -rate; A(eta) = -log(-eta); support z >= 0.
  f.in_domain = [](const Eigen::VectorXd& eta) { return eta.allFinite() && eta[0] < 0.0; };
  f.log_partition = [](const Eigen::VectorXd& eta) { return -std::log(-eta[0]); };
  f.mean = [](const Eigen::VectorXd& eta) {
    return Eigen::VectorXd::Constant(1, -1.0 / eta[0]).eval();
  };
  f.second_moment = [](const Eigen::VectorXd& eta) {
    return Eigen::MatrixXd::Constant(1, 1, 2.0 / (eta[0] * eta[0])).eval();
  };
  return f;
}

ExpFamilyMember gaussian_member(const Eigen::VectorXd& mean, const Eigen::VectorXd& variance) {
  if (mean.size() != variance.size() || mean.size() == 0) {
    throw std::invalid_argument("mean and variance must have the same positive dimension");
  }
  if (!(variance.array() > 0.0).all()) {
    throw std::invalid_argument("variance must be positive");
  }
  const Eigen::Index d = mean.size();
  Eigen::VectorXd eta(2 * d);
  eta.head(d) = (mean.array() / variance.array()).matrix();
  eta.tail(d) = (-0.5 * variance.array().inverse()).matrix();
  return {gaussian_diagonal_family(d), eta};
}

ExpFamilyMember exponential_member(double rate) {
  if (!(rate > 0.0)) {
    throw std::invalid_argument("rate must be positive");
  }
  return {exponential_family(), Eigen::VectorXd::Constant(1, -rate)};
}

double log_partition(const ExpFamilyMember& m) {
  check_member(m);
  return m.family.log_partition(m.eta);
}

double expfam_affinity(const ExpFamilyMember& a, const ExpFamilyMember& b) {
  check_same_family(a, b);
  check_member(a);
  check_member(b);
  const Eigen::VectorXd mid = 0.5 * (a.eta + b.eta);
  if (!a.family.in_domain(mid)) {
    throw std::invalid_argument("midpoint parameter leaves the domain of " + a.family.name);
  }
  return std::exp(a.family.log_partition(mid) - 0.5 * a.family.log_partition(a.eta) -
                  0.5 * b.family.log_partition(b.eta));
}

CrossMoments expfam_cross_moments(const ExpFamilyMember& a, const ExpFamilyMember& b) {
  check_same_family(a, b);
  check_member(a);
  check_member(b);
  const Eigen::VectorXd mid = 0.5 * (a.eta + b.eta);
  if (!a.family.in_domain(mid)) {
    throw std::invalid_argument("midpoint parameter leaves the domain of " + a.family.name);
  }
  CrossMoments out;
  out.affinity = std::exp(a.family.log_partition(mid) - 0.5 * a.family.log_partition(a.eta) -
                          0.5 * b.family.log_partition(b.eta));
  out.first = out.affinity * a.family.mean(mid);
  out.second = out.affinity * a.family.second_moment(mid);
  return out;
}

}  // namespace opinionpool
