#include "kldrl/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kldrl {

namespace {

double support_aware_kl(const PopulationLayout& layout, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& y, int population) {
  double sum = 0.0;
  const int k_lo = population < 0 ? 0 : population;
  const int k_hi = population < 0 ? layout.populations() : population + 1;
  for (int k = k_lo; k < k_hi; ++k) {
    for (int i = layout.offset(k); i < layout.offset(k) + layout.count(k); ++i) {
      if (x[i] > 0.0) {
        if (y[i] <= 0.0) {
          throw std::domain_error("kl_to_target: target lacks support where the state has mass");
        }
        sum += x[i] * std::log(x[i] / y[i]);
      }
    }
  }
  return sum;
}

}  // namespace

MetricSeries kl_to_target(const Trajectory& traj, const SocialState& target, int population) {
  require_same_layout(traj.layout, target.layout);
  if (population >= traj.layout.populations()) {
    throw std::invalid_argument("kl_to_target: population out of range");
  }
  MetricSeries out;
  out.name = population < 0 ? "kl_to_target" : "kl_to_target_pop" + std::to_string(population);
  out.times = traj.times;
  out.values.reserve(traj.states.size());
  for (const auto& x : traj.states) {
    out.values.push_back(support_aware_kl(traj.layout, x, target.values, population));
  }
  return out;
}

MetricSeries average_payoff(const Trajectory& traj, const AffineGame& game) {
  require_same_layout(traj.layout, game.layout);
  MetricSeries out;
  out.name = "average_payoff";
  out.times = traj.times;
  out.values.reserve(traj.states.size());
  for (const auto& x : traj.states) {
    out.values.push_back(x.dot(game.F * x + game.b));
  }
  return out;
}

MetricSeries max_gain(const Trajectory& traj, const AffineGame& game, int population) {
  require_same_layout(traj.layout, game.layout);
  if (population < 0 || population >= traj.layout.populations()) {
    throw std::invalid_argument("max_gain: population out of range");
  }
  MetricSeries out;
  out.name = "max_gain_pop" + std::to_string(population);
  out.times = traj.times;
  out.values.reserve(traj.states.size());
  for (const auto& x : traj.states) {
    Eigen::VectorXd p = game.F * x + game.b;
    out.values.push_back(traj.layout.block(p, population).maxCoeff());
  }
  return out;
}

double peak_to_peak(std::span<const double> values, double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) {
    throw std::invalid_argument("tail fraction must lie in (0,1]");
  }
  if (values.empty()) throw std::invalid_argument("empty series");
  const size_t start =
      values.size() - std::max<size_t>(1, static_cast<size_t>(
                                              std::ceil(tail_fraction * values.size())));
  double lo = values[start];
  double hi = values[start];
  for (size_t i = start; i < values.size(); ++i) {
    lo = std::min(lo, values[i]);
    hi = std::max(hi, values[i]);
  }
  return hi - lo;
}

double oscillation_amplitude(const Trajectory& traj, int coordinate, double tail_fraction) {
  if (coordinate < 0 || coordinate >= traj.layout.total()) {
    throw std::invalid_argument("oscillation_amplitude: coordinate out of range");
  }
  std::vector<double> series;
  series.reserve(traj.states.size());
  for (const auto& x : traj.states) series.push_back(x[coordinate]);
  return peak_to_peak(series, tail_fraction);
}

double passivity_check(const Trajectory& traj, const AffineGame& game, double nu, EnergyForm form,
                       double delay, int grid) {
  require_same_layout(traj.layout, game.layout);
  const size_t m = traj.times.size();
  if (m < 3) throw std::invalid_argument("passivity_check: trajectory too short");
  if (grid < 2) throw std::invalid_argument("passivity_check: grid too small");
  const double dt = traj.sample_dt;

  // Centered finite differences of the recorded state and payoff samples.
  auto fd = [&](const std::vector<Eigen::VectorXd>& v, size_t i) -> Eigen::VectorXd {
    if (i == 0) return (v[1] - v[0]) / dt;
    if (i == m - 1) return (v[m - 1] - v[m - 2]) / dt;
    return (v[i + 1] - v[i - 1]) / (2.0 * dt);
  };

  std::vector<double> integrand(m);
  for (size_t i = 0; i < m; ++i) {
    integrand[i] = fd(traj.states, i).dot(fd(traj.payoffs, i)) -
                   nu * traj.dxnorm[i] * traj.dxnorm[i];
  }
  std::vector<double> cumulative(m, 0.0);
  for (size_t i = 1; i < m; ++i) {
    cumulative[i] = cumulative[i - 1] + 0.5 * dt * (integrand[i - 1] + integrand[i]);
  }
  std::vector<double> dx2_cumulative(m, 0.0);
  for (size_t i = 1; i < m; ++i) {
    dx2_cumulative[i] = dx2_cumulative[i - 1] + 0.5 * dt * (traj.dxnorm[i - 1] * traj.dxnorm[i - 1] +
                                                            traj.dxnorm[i] * traj.dxnorm[i]);
  }
  const double bdf = spectral_norm(game.F);

  auto energy = [&](size_t i0) -> double {
    switch (form) {
      case EnergyForm::None:
        return 0.0;
      case EnergyForm::DelayWindow: {
        const double t0 = traj.times[i0];
        const double lo = t0 - delay;
        double at_lo = 0.0;
        if (lo > traj.times.front()) {
          const double pos = (lo - traj.times.front()) / dt;
          const size_t j = std::min(static_cast<size_t>(pos), m - 2);
          const double w = pos - static_cast<double>(j);
          at_lo = (1.0 - w) * dx2_cumulative[j] + w * dx2_cumulative[j + 1];
        }
        return 0.5 * bdf * (dx2_cumulative[i0] - at_lo);
      }
      case EnergyForm::SmoothingGap: {
        const double n = static_cast<double>(traj.layout.total());
        return std::sqrt(n) *
               (traj.payoffs[i0] - (game.F * traj.states[i0] + game.b)).norm();
      }
    }
    return 0.0;
  };

  double worst = std::numeric_limits<double>::infinity();
  for (int a = 0; a < grid; ++a) {
    const size_t i0 = static_cast<size_t>(std::llround(
        static_cast<double>(a) * static_cast<double>(m - 1) / (grid - 1)));
    const double alpha = energy(i0);
    for (int b = a + 1; b < grid; ++b) {
      const size_t i1 = static_cast<size_t>(std::llround(
          static_cast<double>(b) * static_cast<double>(m - 1) / (grid - 1)));
      if (i1 <= i0) continue;
      worst = std::min(worst, alpha - (cumulative[i1] - cumulative[i0]));
    }
  }
  return worst;
}

std::optional<double> convergence_time(const MetricSeries& series, double threshold) {
  if (!(threshold > 0.0)) throw std::invalid_argument("threshold must be positive");
  if (series.values.empty()) return std::nullopt;
  // First index from which the series never rises to the threshold again.
  std::optional<double> out;
  for (size_t i = series.values.size(); i-- > 0;) {
    if (series.values[i] < threshold) {
      out = series.times[i];
    } else {
      break;
    }
  }
  return out;
}

}  // namespace kldrl
