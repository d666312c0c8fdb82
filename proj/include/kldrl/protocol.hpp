#pragma once

#include "kldrl/game.hpp"
#include "kldrl/state.hpp"

#include <functional>
#include <vector>

namespace kldrl {

enum class ProtocolKind { Logit, KldRl };

// Strategy-revision rule per population: logit (softmax of payoffs) or its
// reference-weighted generalization with parameter theta. One weight eta for
// the whole society; theta blocks are ignored for logit populations.
struct RevisionProtocol {
  PopulationLayout layout;
  std::vector<ProtocolKind> kinds;
  double eta = 1.0;
  SocialState theta;

  static RevisionProtocol logit(const PopulationLayout& layout, double eta);
  static RevisionProtocol kldrl(double eta, SocialState theta);
  static RevisionProtocol mixed(double eta, SocialState theta, std::vector<ProtocolKind> kinds);

  bool any_kldrl() const;
  bool pure_kldrl() const;
};

// softmax(r / eta), stabilized by subtracting the max entry.
Eigen::VectorXd logit_choice(const Eigen::VectorXd& r, double eta);

// theta-weighted softmax: theta_i exp(r_i/eta) normalized. Equals the argmax of
// z^T r - eta D(z||theta) over the open simplex.
Eigen::VectorXd kldrl_choice(const Eigen::VectorXd& theta, const Eigen::VectorXd& r, double eta);

// Per-block choice under the protocol; result is a simplex-product element.
SocialState protocol_choice(const RevisionProtocol& proto, const PayoffVector& p);

// x' = choice(p) - x; lies in the tangent space with |x'_i| <= 1.
TangentVector edm_vector_field(const RevisionProtocol& proto, const SocialState& x,
                               const PayoffVector& p);

// Arbitrary revision rule: switch_rates(k, z^k, r^k) returns the row-stochastic
// matrix of switch probabilities T_ij within population k.
struct GenericProtocol {
  PopulationLayout layout;
  std::function<Eigen::MatrixXd(int, const Eigen::VectorXd&, const Eigen::VectorXd&)> switch_rates;
};

// Mean dynamic x'_i = sum_j x_j T_ji - x_i sum_j T_ij; rejects non-stochastic rules.
TangentVector generic_edm_field(const GenericProtocol& gp, const SocialState& x,
                                const PayoffVector& p);

// Gap between the best attainable regularized payoff and its value at z:
//   eta sum_k ln(sum_s theta_s^k e^{r_s^k/eta}) - z^T r + eta D(z||theta).
// Nonnegative; zero exactly at z = kldrl choice.
double storage_function(const SocialState& theta, double eta, const SocialState& z,
                        const PayoffVector& r);

// Two-population stationarity gap when population 1 best-responds and
// population 2 follows the logit rule: block-1 linear improvement gap plus the
// 2-norm distance of block 2 from its logit choice.
double mixed_equilibrium_residual(const AffineGame& game, double eta, const SocialState& x);

}  // namespace kldrl
