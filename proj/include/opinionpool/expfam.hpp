#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>

namespace opinionpool {

/// An exponential family q(z) = h(z) exp(eta . T(z) - A(eta)) described by
/// its log partition function and the moments of z under q_eta. The affinity
/// and cross-moment routines below only touch these three callables, so any
/// family with a tractable A(eta) plugs in.
struct FamilyDescriptor {
  std::string name;
  Eigen::Index natural_dim = 0;
  std::function<double(const Eigen::VectorXd&)> log_partition;
  /// E_{q_eta}[z]
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> mean;
  /// E_{q_eta}[z z^T]
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> second_moment;
  /// True iff eta lies in the natural parameter domain.
  std::function<bool(const Eigen::VectorXd&)> in_domain;
};

/// A member of a family, i.e. a natural parameter vector.
struct ExpFamilyMember {
  FamilyDescriptor family;
  Eigen::VectorXd eta;
};

/// Diagonal Gaussian on R^dim with eta = (mu/sigma^2, -1/(2 sigma^2)).
FamilyDescriptor gaussian_diagonal_family(Eigen::Index dim);

/// Exponential distribution with eta = -rate (rate > 0).
FamilyDescriptor exponential_family();

ExpFamilyMember gaussian_member(const Eigen::VectorXd& mean, const Eigen::VectorXd& variance);
ExpFamilyMember exponential_member(double rate);

/// A(eta) for the member's family; throws std::invalid_argument outside the
/// natural domain.
double log_partition(const ExpFamilyMember& m);

/// Bhattacharyya coefficient between two members of one family:
/// exp(A((eta_i+eta_j)/2) - A(eta_i)/2 - A(eta_j)/2). Requires the midpoint
/// parameter to lie in the family's domain.
double expfam_affinity(const ExpFamilyMember& a, const ExpFamilyMember& b);

/// First and second cross moments of the unnormalized overlap
/// sqrt(q_i q_j): M = S E_{mid}[z], V = S E_{mid}[z z^T], where mid is the
/// member at the midpoint parameter and S the affinity.
struct CrossMoments {
  double affinity = 0.0;
  Eigen::VectorXd first;
  Eigen::MatrixXd second;
};

CrossMoments expfam_cross_moments(const ExpFamilyMember& a, const ExpFamilyMember& b);

}  // namespace opinionpool
