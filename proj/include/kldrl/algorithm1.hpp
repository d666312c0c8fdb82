#pragma once

#include "kldrl/game.hpp"
#include "kldrl/protocol.hpp"
#include "kldrl/state.hpp"

#include <optional>
#include <vector>

namespace kldrl {

// Constants the update criteria need. populations is M; split_fraction is the
// gamma in (0,1) splitting the smoothing-case quadrature window.
struct CriterionParams {
  double eta = 1.0;
  double delay_bound = 0.0;     // B_d
  double jacobian_bound = 0.0;  // bound on ||F||_2
  double payoff_bound = 0.0;    // bound on ||F(z)||_2 over the state space
  double rate = 1.0;            // smoothing filter rate
  double split_fraction = 0.1;
  int populations = 1;
};

struct ThetaEvent {
  int index = 0;  // update counter l
  double t = 0.0;
  Eigen::VectorXd theta;
};

// max_{z in X} (z - x)^T (p - eta grad D(x||theta)); nonnegative, zero exactly
// when x is the kldrl choice for payoff p.
double lhs_stationarity(const SocialState& x, const PayoffVector& p, const SocialState& theta,
                        double eta);

// Accumulates per-step trajectory data used by the update criteria: field
// norms over the trailing delay window, the full field-norm record with
// exponentially discounted integrals, and payoff-norm history; all kept per
// population as well for the distributed checks.
class UpdateMonitor {
 public:
  UpdateMonitor(SocialState theta0, double window_span, double rate);

  // Feed one committed sample. Times must be strictly increasing.
  void observe(double t, const SocialState& x, const PayoffVector& p, const TangentVector& xdot);

  const SocialState& theta() const { return theta_; }
  double last_update_time() const { return t0_; }
  int update_count() const { return count_; }
  const std::vector<ThetaEvent>& log() const { return log_; }

  // theta <- clamped x(t1); throws unless t1 exceeds the previous update time.
  void trigger(double t1, const SocialState& x, double clamp_eps = 1e-9);

  bool window_covered(double t1) const;
  double window_max(double t1) const;             // max field norm over [t1 - span, t1]
  double window_max(double t1, int k) const;      // per-population variant
  double payoff_norm_at(double t) const;          // interpolated ||p(t)||
  double payoff_norm_at(double t, int k) const;
  // integral over [a, t1] of e^{-rate (t1 - tau)} ||x'(tau)|| d tau (trapezoid)
  double discounted_integral(double a, double t1) const;
  double discounted_integral(double a, double t1, int k) const;
  double first_time() const;
  double last_time() const;

 private:
  SocialState theta_;
  double t0_ = 0.0;
  int count_ = 0;
  std::vector<ThetaEvent> log_;
  double span_;
  double rate_;
  int populations_ = 0;
  std::vector<double> times_;
  std::vector<double> dx_all_;
  std::vector<std::vector<double>> dx_pop_;
  std::vector<double> p_all_;
  std::vector<std::vector<double>> p_pop_;
  std::vector<double> disc_all_;
  std::vector<std::vector<double>> disc_pop_;
};

// Delay-case trigger test at t1:
//   stationarity gap + sqrt(2M) * B_DF * B_d * max window field norm
//     <= (eta/2) D(x(t1)||theta).
// Throws if the window [t1 - B_d, t1] is not covered by observations.
bool check_delay_criterion(const UpdateMonitor& monitor, const CriterionParams& params, double t1,
                           const SocialState& x, const PayoffVector& p);

// Smoothing-case trigger test at t1, with the filter-decay correction
//   sqrt(2M) ((||p(gamma t1)|| + B_F) e^{-rate (1-gamma) t1}
//             + B_DF * discounted integral of the field norm over [gamma t1, t1]).
bool check_smoothing_criterion(const UpdateMonitor& monitor, const CriterionParams& params,
                               double t1, const SocialState& x, const PayoffVector& p);

// Per-population analogues; the all-k conjunction implies the centralized test.
bool check_distributed_delay(const UpdateMonitor& monitor, const CriterionParams& params, int k,
                             double t1, const SocialState& x, const PayoffVector& p);
bool check_distributed_smoothing(const UpdateMonitor& monitor, const CriterionParams& params,
                                 int k, double t1, const SocialState& x, const PayoffVector& p);

// Rest point of x = choice(theta, F(x)) by damped fixed-point iteration
// (damping 1/2); the returned state is the equilibrium of the payoff
// F - eta grad D(.||theta). Throws if the iteration cap is exceeded.
SocialState perturbed_nash(const AffineGame& game, double eta, const SocialState& theta,
                           double tol = 1e-12);

}  // namespace kldrl
