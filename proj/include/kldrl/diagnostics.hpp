#pragma once

#include "kldrl/game.hpp"
#include "kldrl/sim.hpp"

#include <optional>
#include <span>
#include <string>

namespace kldrl {

struct MetricSeries {
  std::string name;
  std::vector<double> times;
  std::vector<double> values;
};

// D(x(t)||target), summed over populations, or for one population when
// 0 <= population < M. The target may touch the boundary only where the
// trajectory does.
MetricSeries kl_to_target(const Trajectory& traj, const SocialState& target, int population = -1);

// x(t)^T (F x(t) + b) over the whole society.
MetricSeries average_payoff(const Trajectory& traj, const AffineGame& game);

// max over block-k entries of F(x(t)).
MetricSeries max_gain(const Trajectory& traj, const AffineGame& game, int population);

// Peak-to-peak range of one state coordinate over the trailing fraction of the run.
double oscillation_amplitude(const Trajectory& traj, int coordinate, double tail_fraction);
double peak_to_peak(std::span<const double> values, double tail_fraction);

enum class EnergyForm {
  None,          // alpha = 0
  DelayWindow,   // (B_DF/2) * integral of |x'|^2 over [t0 - d, t0]
  SmoothingGap,  // sqrt(n) * |p(t0) - F x(t0) - b|
};

// Worst slack of alpha(t0) - integral_{t0}^{t} (x'^T p' - nu x'^T x') over a
// grid of (t0, t) pairs; p' (and the x' direction) come from centered finite
// differences of the recorded samples, |x'|^2 from the recorded field norms.
// Nonnegative up to quadrature error certifies the dissipation inequality.
double passivity_check(const Trajectory& traj, const AffineGame& game, double nu, EnergyForm form,
                       double delay = 0.0, int grid = 20);

// First time after which the series stays below the threshold; nullopt if never.
std::optional<double> convergence_time(const MetricSeries& series, double threshold);

}  // namespace kldrl
