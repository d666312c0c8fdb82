#pragma once

#include "kldrl/game.hpp"
#include "kldrl/state.hpp"

#include <deque>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace kldrl {

// Payoff mechanisms mapping state trajectories to payoff trajectories.

struct StaticPayoff {};

struct DelayedPayoff {
  double delay = 1.0;        // d
  double delay_bound = 1.0;  // known upper bound B_d >= d
};

struct MultiDelayTerm {
  double delay = 0.0;
  Eigen::MatrixXd F;
  Eigen::VectorXd b;
};

// p(t) = sum_i (F_i x(t - d_i) + b_i); the terms must sum to the base game.
struct MultiDelayPayoff {
  std::vector<MultiDelayTerm> terms;
};

// First-order low-pass filter p' = -rate (p - F(x)); split_fraction is the
// lower quadrature endpoint fraction used by the parameter-update criterion.
struct SmoothingPayoff {
  double rate = 1.0;            // lambda > 0
  double split_fraction = 0.1;  // gamma in (0,1)
};

using PdmKind = std::variant<StaticPayoff, DelayedPayoff, MultiDelayPayoff, SmoothingPayoff>;

// One simulation run owns one PdmState; the delay variants keep a time-indexed
// history of committed states, the smoothing variant keeps the filter output.
class PdmState {
 public:
  static PdmState init(AffineGame game, PdmKind kind, const SocialState& x0,
                       const std::optional<Eigen::VectorXd>& p0 = std::nullopt);

  const AffineGame& game() const { return game_; }
  const PdmKind& kind() const { return kind_; }

  // Payoff at time t given the instantaneous state (used by the zero-delay
  // paths; delay variants read the recorded history instead).
  PayoffVector output(double t, const SocialState& x_now) const;
  Eigen::VectorXd output_values(double t, const Eigen::VectorXd& x_now) const;

  // Commits a state sample; history before t=0 is the constant x(0).
  void record(double t, const Eigen::VectorXd& x);

  // -rate (p - F(x)); smoothing variant only.
  PayoffVector smoothing_derivative(const SocialState& x) const;

  const Eigen::VectorXd& filter_state() const;
  void set_filter_state(const Eigen::VectorXd& p);

  // Longest lookback the history must retain.
  double max_delay() const;

  // Linear interpolation of the recorded history; constant before t=0.
  Eigen::VectorXd history_at(double tau) const;

 private:
  AffineGame game_;
  PdmKind kind_;
  std::deque<std::pair<double, Eigen::VectorXd>> history_;
  Eigen::VectorXd filter_;  // smoothing variant state
};

// Passivity deficit nu*: delay variants give the payoff-matrix norm (summed
// per term for multiple delays), the smoothing variant gives |F - F^T|_2 / 4
// and requires a contractive game, a contractive static mechanism gives zero.
double antipassivity_deficit(const PdmState& state);

// Stored-energy estimate for the delay variants:
// (jacobian_bound / 2) * integral of |x'(tau)|^2 over [t0 - d, t0],
// trapezoid over the supplied samples (x' vanishes before t=0).
double stored_energy_bound(const PdmState& state, double t0, std::span<const double> times,
                           std::span<const double> dxnorm);

// Smoothing variant: sqrt(n) * |p(t0) - F x(t0) - b|_2 with the stored filter value.
double stored_energy_bound(const PdmState& state, const SocialState& x_t0);

}  // namespace kldrl
