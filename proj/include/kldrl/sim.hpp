#pragma once

#include "kldrl/algorithm1.hpp"
#include "kldrl/game.hpp"
#include "kldrl/pdm.hpp"
#include "kldrl/protocol.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace kldrl {

struct UpdateRuleConfig {
  bool enabled = false;
  std::optional<double> split_fraction;  // defaults to the smoothing kind's value
  std::optional<double> delay_bound;     // defaults to the delayed kind's value
  bool distributed = false;
};

struct Scenario {
  AffineGame game;
  PdmKind pdm;
  RevisionProtocol protocol;
  UpdateRuleConfig update_rule;
  SocialState x0;
  std::optional<Eigen::VectorXd> p0;  // smoothing filter initial value override
  double horizon = 100.0;
  double step = 0.01;
  int record_stride = 1;
  std::uint64_t seed = 0;  // recorded for batch provenance; unused by a single run
};

// Throws std::invalid_argument describing the first violated precondition.
void validate(const Scenario& scenario);

struct Trajectory {
  PopulationLayout layout;
  double step = 0.0;       // integrator step h
  double sample_dt = 0.0;  // spacing of recorded samples = h * record_stride
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> payoffs;
  std::vector<double> dxnorm;
  std::vector<ThetaEvent> theta_events;

  const Eigen::VectorXd& terminal_state() const { return states.back(); }
};

// Fixed-step classic Runge-Kutta on the closed loop of revision dynamics and
// payoff mechanism; delay lookups interpolate the committed history, the
// smoothing filter is integrated jointly with the state. When enabled, the
// parameter-update criterion is evaluated once per step after commit.
Trajectory integrate(const Scenario& scenario);

struct RunOutcome {
  std::optional<Trajectory> trajectory;
  std::string error;  // empty on success
};

// Independent deterministic runs, order-preserving; per-run failures are
// collected and the batch continues.
std::vector<RunOutcome> batch_run(const std::vector<Scenario>& scenarios);

}  // namespace kldrl
