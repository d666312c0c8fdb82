#include "kldrl/pdm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kldrl {

namespace {

void validate_kind(const PdmKind& kind, const AffineGame& game) {
  if (const auto* d = std::get_if<DelayedPayoff>(&kind)) {
    if (!(d->delay > 0.0)) throw std::invalid_argument("delayed payoff needs delay > 0");
    if (d->delay_bound < d->delay) {
      throw std::invalid_argument("delay bound must be at least the delay");
    }
  } else if (const auto* m = std::get_if<MultiDelayPayoff>(&kind)) {
    if (m->terms.empty()) throw std::invalid_argument("multi-delay payoff needs terms");
    Eigen::MatrixXd fsum = Eigen::MatrixXd::Zero(game.layout.total(), game.layout.total());
    Eigen::VectorXd bsum = Eigen::VectorXd::Zero(game.layout.total());
    for (const auto& term : m->terms) {
      if (term.delay < 0.0) throw std::invalid_argument("negative delay term");
      if (term.F.rows() != game.layout.total() || term.F.cols() != game.layout.total() ||
          term.b.size() != game.layout.total()) {
        throw std::invalid_argument("delay term dimensions do not match the game");
      }
      fsum += term.F;
      bsum += term.b;
    }
    // With all delays set to zero the terms must reproduce the base payoff.
    if ((fsum - game.F).cwiseAbs().maxCoeff() > 1e-12 ||
        (bsum - game.b).cwiseAbs().maxCoeff() > 1e-12) {
      throw std::invalid_argument("delay terms do not sum to the base game");
    }
  } else if (const auto* s = std::get_if<SmoothingPayoff>(&kind)) {
    if (!(s->rate > 0.0)) throw std::invalid_argument("smoothing rate must be positive");
    if (!(s->split_fraction > 0.0 && s->split_fraction < 1.0)) {
      throw std::invalid_argument("smoothing split fraction must lie in (0,1)");
    }
  }
}

}  // namespace

PdmState PdmState::init(AffineGame game, PdmKind kind, const SocialState& x0,
                        const std::optional<Eigen::VectorXd>& p0) {
  require_same_layout(game.layout, x0.layout);
  require_state(x0.layout, x0.values);
  validate_kind(kind, game);
  PdmState state;
  state.game_ = std::move(game);
  state.kind_ = std::move(kind);
  if (std::holds_alternative<SmoothingPayoff>(state.kind_)) {
    state.filter_ = p0.value_or(state.game_.F * x0.values + state.game_.b);
    if (state.filter_.size() != state.game_.layout.total()) {
      throw std::invalid_argument("filter initial value has wrong length");
    }
  } else if (p0.has_value()) {
    throw std::invalid_argument("payoff initial value only applies to the smoothing mechanism");
  }
  state.history_.emplace_back(0.0, x0.values);
  return state;
}

double PdmState::max_delay() const {
  if (const auto* d = std::get_if<DelayedPayoff>(&kind_)) return d->delay;
  if (const auto* m = std::get_if<MultiDelayPayoff>(&kind_)) {
    double out = 0.0;
    for (const auto& term : m->terms) out = std::max(out, term.delay);
    return out;
  }
  return 0.0;
}

void PdmState::record(double t, const Eigen::VectorXd& x) {
  if (!history_.empty() && t <= history_.back().first) {
    throw std::invalid_argument("history samples must advance in time");
  }
  history_.emplace_back(t, x);
  double span = max_delay();
  if (const auto* d = std::get_if<DelayedPayoff>(&kind_)) {
    span = std::max(span, d->delay_bound);
  }
  const double keep_from = t - span;
  while (history_.size() >= 2 && history_[1].first <= keep_from) {
    history_.pop_front();
  }
}

Eigen::VectorXd PdmState::history_at(double tau) const {
  if (history_.empty()) throw std::runtime_error("payoff history is empty");
  if (tau <= history_.front().first) {
    // Pre-run history is frozen at the initial state.
    if (tau < history_.front().first - 1e-9 && history_.front().first > 0.0) {
      throw std::runtime_error("payoff history underrun");
    }
    return history_.front().second;
  }
  if (tau >= history_.back().first) {
    if (tau > history_.back().first + 1e-9) {
      throw std::runtime_error("payoff history lookup beyond the last sample");
    }
    return history_.back().second;
  }
  // Binary search for the bracketing pair, then interpolate linearly.
  size_t lo = 0;
  size_t hi = history_.size() - 1;
  while (hi - lo > 1) {
    const size_t mid = (lo + hi) / 2;
    if (history_[mid].first <= tau) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double t0 = history_[lo].first;
  const double t1 = history_[hi].first;
  const double w = (tau - t0) / (t1 - t0);
  return (1.0 - w) * history_[lo].second + w * history_[hi].second;
}

Eigen::VectorXd PdmState::output_values(double t, const Eigen::VectorXd& x_now) const {
  if (std::holds_alternative<StaticPayoff>(kind_)) {
    return game_.F * x_now + game_.b;
  }
  if (const auto* d = std::get_if<DelayedPayoff>(&kind_)) {
    return game_.F * history_at(t - d->delay) + game_.b;
  }
  if (const auto* m = std::get_if<MultiDelayPayoff>(&kind_)) {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(game_.layout.total());
    for (const auto& term : m->terms) {
      if (term.delay == 0.0) {
        p += term.F * x_now + term.b;
      } else {
        p += term.F * history_at(t - term.delay) + term.b;
      }
    }
    return p;
  }
  return filter_;
}

PayoffVector PdmState::output(double t, const SocialState& x_now) const {
  require_same_layout(game_.layout, x_now.layout);
  return {game_.layout, output_values(t, x_now.values)};
}

PayoffVector PdmState::smoothing_derivative(const SocialState& x) const {
  const auto* s = std::get_if<SmoothingPayoff>(&kind_);
  if (s == nullptr) {
    throw std::invalid_argument("smoothing_derivative: mechanism is not smoothing");
  }
  require_same_layout(game_.layout, x.layout);
  Eigen::VectorXd rate = -s->rate * (filter_ - (game_.F * x.values + game_.b));
  return {game_.layout, std::move(rate)};
}

const Eigen::VectorXd& PdmState::filter_state() const {
  if (!std::holds_alternative<SmoothingPayoff>(kind_)) {
    throw std::invalid_argument("filter state only exists for the smoothing mechanism");
  }
  return filter_;
}

void PdmState::set_filter_state(const Eigen::VectorXd& p) {
  if (!std::holds_alternative<SmoothingPayoff>(kind_)) {
    throw std::invalid_argument("filter state only exists for the smoothing mechanism");
  }
  if (p.size() != game_.layout.total()) {
    throw std::invalid_argument("filter state has wrong length");
  }
  filter_ = p;
}

double antipassivity_deficit(const PdmState& state) {
  const auto& kind = state.kind();
  if (std::holds_alternative<StaticPayoff>(kind)) {
    if (!is_contractive(state.game())) {
      throw std::invalid_argument("deficit of a static mechanism needs a contractive game");
    }
    return 0.0;
  }
  if (std::holds_alternative<DelayedPayoff>(kind)) {
    return spectral_norm(state.game().F);
  }
  if (const auto* m = std::get_if<MultiDelayPayoff>(&kind)) {
    double sum = 0.0;  // conservative: one slope bound per delayed term
    for (const auto& term : m->terms) sum += spectral_norm(term.F);
    return sum;
  }
  if (!is_contractive(state.game())) {
    throw std::invalid_argument("smoothing deficit requires a contractive affine game");
  }
  return 0.25 * spectral_norm(state.game().F - state.game().F.transpose());
}

double stored_energy_bound(const PdmState& state, double t0, std::span<const double> times,
                           std::span<const double> dxnorm) {
  const auto& kind = state.kind();
  if (!std::holds_alternative<DelayedPayoff>(kind) &&
      !std::holds_alternative<MultiDelayPayoff>(kind)) {
    throw std::invalid_argument("window energy bound applies to delayed mechanisms");
  }
  if (times.size() != dxnorm.size() || times.size() < 2) {
    throw std::invalid_argument("window energy bound needs matched samples");
  }
  const double d = state.max_delay();
  const double lo = t0 - d;
  if (t0 > times.back() + 1e-12 || (lo < times.front() - 1e-12 && lo > 0.0) ||
      t0 < times.front()) {
    throw std::runtime_error("window energy bound: samples do not cover the window");
  }
  const double slope = std::holds_alternative<DelayedPayoff>(kind)
                           ? spectral_norm(state.game().F)
                           : antipassivity_deficit(state);
  // Trapezoid of |x'|^2 over [max(lo, first sample), t0]; x' vanishes before the run.
  double integral = 0.0;
  for (size_t i = 0; i + 1 < times.size(); ++i) {
    const double a = std::max(times[i], lo);
    const double b = std::min(times[i + 1], t0);
    if (b <= a) continue;
    const double span = times[i + 1] - times[i];
    const double fa = dxnorm[i] + (dxnorm[i + 1] - dxnorm[i]) * (a - times[i]) / span;
    const double fb = dxnorm[i] + (dxnorm[i + 1] - dxnorm[i]) * (b - times[i]) / span;
    integral += 0.5 * (b - a) * (fa * fa + fb * fb);
  }
  return 0.5 * slope * integral;
}

double stored_energy_bound(const PdmState& state, const SocialState& x_t0) {
  if (!std::holds_alternative<SmoothingPayoff>(state.kind())) {
    throw std::invalid_argument("gap energy bound applies to the smoothing mechanism");
  }
  require_same_layout(state.game().layout, x_t0.layout);
  const double n = static_cast<double>(state.game().layout.total());
  return std::sqrt(n) *
         (state.filter_state() - (state.game().F * x_t0.values + state.game().b)).norm();
}

}  // namespace kldrl
