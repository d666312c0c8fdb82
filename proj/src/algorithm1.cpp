#include "kldrl/algorithm1.hpp"

#include "kldrl/simplex.hpp"

#include <cmath>
#include <stdexcept>

namespace kldrl {

double lhs_stationarity(const SocialState& x, const PayoffVector& p, const SocialState& theta,
                        double eta) {
  require_same_layout(x.layout, p.layout);
  require_same_layout(x.layout, theta.layout);
  if (!is_interior(x) || !is_interior(theta)) {
    throw std::domain_error("lhs_stationarity: state and theta must be interior");
  }
  Eigen::VectorXd v =
      p.values - eta * (x.values.array() / theta.values.array()).log().matrix();
  PayoffVector shifted{x.layout, v};
  return linear_argmax(shifted).value - x.values.dot(v);
}

namespace {

double block_stationarity(const PopulationLayout& layout, int k, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& p, const Eigen::VectorXd& theta, double eta) {
  auto xk = layout.block(x, k);
  auto tk = layout.block(theta, k);
  Eigen::VectorXd v =
      layout.block(p, k).array() - eta * (xk.array() / tk.array()).log();
  return v.maxCoeff() - xk.dot(v);
}

double block_kl(const PopulationLayout& layout, int k, const Eigen::VectorXd& x,
                const Eigen::VectorXd& theta) {
  auto xk = layout.block(x, k);
  auto tk = layout.block(theta, k);
  double sum = 0.0;
  for (int i = 0; i < xk.size(); ++i) {
    if (xk[i] > 0.0) sum += xk[i] * std::log(xk[i] / tk[i]);
  }
  return sum;
}

double interp(const std::vector<double>& times, const std::vector<double>& values, double t) {
  if (t <= times.front()) return values.front();
  if (t >= times.back()) return values.back();
  size_t lo = 0;
  size_t hi = times.size() - 1;
  while (hi - lo > 1) {
    const size_t mid = (lo + hi) / 2;
    if (times[mid] <= t) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double w = (t - times[lo]) / (times[hi] - times[lo]);
  return (1.0 - w) * values[lo] + w * values[hi];
}

}  // namespace

UpdateMonitor::UpdateMonitor(SocialState theta0, double window_span, double rate)
    : theta_(std::move(theta0)), span_(window_span), rate_(rate) {
  if (span_ < 0.0) throw std::invalid_argument("window span must be nonnegative");
  if (rate_ < 0.0) throw std::invalid_argument("discount rate must be nonnegative");
  if (!is_interior(theta_)) throw std::invalid_argument("theta must start interior");
  populations_ = theta_.layout.populations();
  dx_pop_.resize(static_cast<size_t>(populations_));
  p_pop_.resize(static_cast<size_t>(populations_));
  disc_pop_.resize(static_cast<size_t>(populations_));
}

void UpdateMonitor::observe(double t, const SocialState& x, const PayoffVector& p,
                            const TangentVector& xdot) {
  require_same_layout(theta_.layout, x.layout);
  if (!times_.empty() && t <= times_.back()) {
    throw std::invalid_argument("monitor samples must advance in time");
  }
  times_.push_back(t);
  dx_all_.push_back(xdot.values.norm());
  p_all_.push_back(p.values.norm());
  for (int k = 0; k < populations_; ++k) {
    dx_pop_[static_cast<size_t>(k)].push_back(x.layout.block(xdot.values, k).norm());
    p_pop_[static_cast<size_t>(k)].push_back(x.layout.block(p.values, k).norm());
  }
  // Exponentially discounted trapezoid integral of the field norm:
  //   I(t) = e^{-rate h} I(t-h) + (h/2)(e^{-rate h} f(t-h) + f(t)).
  const size_t m = times_.size();
  if (m == 1) {
    disc_all_.push_back(0.0);
    for (int k = 0; k < populations_; ++k) disc_pop_[static_cast<size_t>(k)].push_back(0.0);
  } else {
    const double h = times_[m - 1] - times_[m - 2];
    const double decay = std::exp(-rate_ * h);
    disc_all_.push_back(decay * disc_all_.back() +
                        0.5 * h * (decay * dx_all_[m - 2] + dx_all_[m - 1]));
    for (int k = 0; k < populations_; ++k) {
      auto& col = dx_pop_[static_cast<size_t>(k)];
      auto& acc = disc_pop_[static_cast<size_t>(k)];
      acc.push_back(decay * acc.back() + 0.5 * h * (decay * col[m - 2] + col[m - 1]));
    }
  }
}

void UpdateMonitor::trigger(double t1, const SocialState& x, double clamp_eps) {
  if (t1 <= t0_) throw std::invalid_argument("update time must advance past the previous one");
  theta_ = interior_clamp(make_state(x.layout, x.values, 1e-9), clamp_eps);
  t0_ = t1;
  ++count_;
  log_.push_back(ThetaEvent{count_, t1, theta_.values});
}

double UpdateMonitor::first_time() const {
  if (times_.empty()) throw std::runtime_error("monitor holds no samples");
  return times_.front();
}

double UpdateMonitor::last_time() const {
  if (times_.empty()) throw std::runtime_error("monitor holds no samples");
  return times_.back();
}

bool UpdateMonitor::window_covered(double t1) const {
  if (times_.empty()) return false;
  return t1 - span_ >= times_.front() - 1e-12 && t1 <= times_.back() + 1e-12;
}

double UpdateMonitor::window_max(double t1) const {
  if (!window_covered(t1)) throw std::runtime_error("field-norm window not covered");
  const double lo = t1 - span_;
  double best = 0.0;
  for (size_t i = times_.size(); i-- > 0;) {
    if (times_[i] > t1 + 1e-12) continue;
    if (times_[i] < lo - 1e-12) break;
    best = std::max(best, dx_all_[i]);
  }
  return best;
}

double UpdateMonitor::window_max(double t1, int k) const {
  if (!window_covered(t1)) throw std::runtime_error("field-norm window not covered");
  const double lo = t1 - span_;
  const auto& col = dx_pop_.at(static_cast<size_t>(k));
  double best = 0.0;
  for (size_t i = times_.size(); i-- > 0;) {
    if (times_[i] > t1 + 1e-12) continue;
    if (times_[i] < lo - 1e-12) break;
    best = std::max(best, col[i]);
  }
  return best;
}

double UpdateMonitor::payoff_norm_at(double t) const {
  if (times_.empty()) throw std::runtime_error("monitor holds no samples");
  return interp(times_, p_all_, t);
}

double UpdateMonitor::payoff_norm_at(double t, int k) const {
  if (times_.empty()) throw std::runtime_error("monitor holds no samples");
  return interp(times_, p_pop_.at(static_cast<size_t>(k)), t);
}

double UpdateMonitor::discounted_integral(double a, double t1) const {
  if (times_.empty() || t1 > times_.back() + 1e-12 || a < times_.front() - 1e-12) {
    throw std::runtime_error("discounted integral: samples do not cover the range");
  }
  const double at_t1 = interp(times_, disc_all_, t1);
  const double at_a = interp(times_, disc_all_, a);
  return at_t1 - std::exp(-rate_ * (t1 - a)) * at_a;
}

double UpdateMonitor::discounted_integral(double a, double t1, int k) const {
  if (times_.empty() || t1 > times_.back() + 1e-12 || a < times_.front() - 1e-12) {
    throw std::runtime_error("discounted integral: samples do not cover the range");
  }
  const auto& col = disc_pop_.at(static_cast<size_t>(k));
  const double at_t1 = interp(times_, col, t1);
  const double at_a = interp(times_, col, a);
  return at_t1 - std::exp(-rate_ * (t1 - a)) * at_a;
}

bool check_delay_criterion(const UpdateMonitor& monitor, const CriterionParams& params, double t1,
                           const SocialState& x, const PayoffVector& p) {
  const double gap = lhs_stationarity(x, p, monitor.theta(), params.eta);
  const double correction = std::sqrt(2.0 * params.populations) * params.jacobian_bound *
                            params.delay_bound * monitor.window_max(t1);
  const double margin = 0.5 * params.eta * kl_divergence(x, monitor.theta());
  return gap + correction <= margin;
}

bool check_smoothing_criterion(const UpdateMonitor& monitor, const CriterionParams& params,
                               double t1, const SocialState& x, const PayoffVector& p) {
  const double gamma = params.split_fraction;
  const double gap = lhs_stationarity(x, p, monitor.theta(), params.eta);
  const double decay = std::exp(-params.rate * (1.0 - gamma) * t1);
  const double tail = (monitor.payoff_norm_at(gamma * t1) + params.payoff_bound) * decay;
  const double drift =
      params.jacobian_bound * monitor.discounted_integral(gamma * t1, t1);
  const double correction = std::sqrt(2.0 * params.populations) * (tail + drift);
  const double margin = 0.5 * params.eta * kl_divergence(x, monitor.theta());
  return gap + correction <= margin;
}

bool check_distributed_delay(const UpdateMonitor& monitor, const CriterionParams& params, int k,
                             double t1, const SocialState& x, const PayoffVector& p) {
  const auto& layout = x.layout;
  const double gap =
      block_stationarity(layout, k, x.values, p.values, monitor.theta().values, params.eta);
  const double correction = std::sqrt(2.0 * params.populations) * params.jacobian_bound *
                            params.delay_bound * monitor.window_max(t1, k);
  const double margin = 0.5 * params.eta * block_kl(layout, k, x.values, monitor.theta().values);
  return gap + correction <= margin;
}

bool check_distributed_smoothing(const UpdateMonitor& monitor, const CriterionParams& params,
                                 int k, double t1, const SocialState& x, const PayoffVector& p) {
  const auto& layout = x.layout;
  const double gamma = params.split_fraction;
  const double gap =
      block_stationarity(layout, k, x.values, p.values, monitor.theta().values, params.eta);
  const double decay = std::exp(-params.rate * (1.0 - gamma) * t1);
  const double tail =
      (monitor.payoff_norm_at(gamma * t1, k) + params.payoff_bound / params.populations) * decay;
  const double drift =
      params.jacobian_bound * monitor.discounted_integral(gamma * t1, t1, k);
  const double correction = std::sqrt(2.0 * params.populations) * (tail + drift);
  const double margin = 0.5 * params.eta * block_kl(layout, k, x.values, monitor.theta().values);
  return gap + correction <= margin;
}

SocialState perturbed_nash(const AffineGame& game, double eta, const SocialState& theta,
                           double tol) {
  require_same_layout(game.layout, theta.layout);
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
  if (!is_interior(theta)) throw std::invalid_argument("theta must be interior");
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  constexpr double kDamping = 0.5;
  constexpr long kMaxIters = 1000000;
  SocialState x = uniform_state(game.layout);
  for (long it = 0; it < kMaxIters; ++it) {
    Eigen::VectorXd r = game.F * x.values + game.b;
    Eigen::VectorXd next(x.values.size());
    for (int k = 0; k < game.layout.populations(); ++k) {
      auto nk = game.layout.block(next, k);
      nk = kldrl_choice(game.layout.block(theta.values, k), game.layout.block(r, k), eta);
    }
    next = (1.0 - kDamping) * x.values + kDamping * next;
    const double shift = (next - x.values).norm();
    x.values = std::move(next);
    if (shift < tol &&
        lhs_stationarity(x, PayoffVector{game.layout, game.F * x.values + game.b}, theta, eta) <=
            10.0 * tol) {
      return x;
    }
  }
  throw std::runtime_error("perturbed_nash: iteration cap exceeded");
}

}  // namespace kldrl
