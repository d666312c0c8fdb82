#include "kldrl/sim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>

namespace kldrl {

namespace {

double positive_max_delay(const PdmKind& kind) {
  if (const auto* d = std::get_if<DelayedPayoff>(&kind)) return d->delay;
  if (const auto* m = std::get_if<MultiDelayPayoff>(&kind)) {
    double out = 0.0;
    for (const auto& term : m->terms) out = std::max(out, term.delay);
    return out;
  }
  return 0.0;
}

bool delay_style(const PdmKind& kind) {
  return !std::holds_alternative<SmoothingPayoff>(kind);
}

}  // namespace

void validate(const Scenario& sc) {
  require_same_layout(sc.game.layout, sc.protocol.layout);
  require_same_layout(sc.game.layout, sc.x0.layout);
  require_state(sc.x0.layout, sc.x0.values);
  if (!(sc.step > 0.0)) throw std::invalid_argument("step must be positive");
  if (sc.horizon < sc.step) throw std::invalid_argument("horizon must cover at least one step");
  const long steps = std::lround(sc.horizon / sc.step);
  if (steps < 1 || std::abs(steps * sc.step - sc.horizon) > 1e-9 * std::max(1.0, sc.horizon)) {
    throw std::invalid_argument("horizon must be an integer number of steps");
  }
  if (sc.record_stride < 1 || steps % sc.record_stride != 0) {
    throw std::invalid_argument("record stride must divide the step count");
  }
  const double d = positive_max_delay(sc.pdm);
  if (d > 0.0 && sc.step > d / 20.0 + 1e-15) {
    throw std::invalid_argument("delay runs need step <= delay/20");
  }
  if (sc.update_rule.enabled) {
    if (!sc.protocol.any_kldrl()) {
      throw std::invalid_argument("parameter updates need at least one kldrl population");
    }
    if (!sc.protocol.pure_kldrl() && !sc.update_rule.distributed) {
      throw std::invalid_argument(
          "mixed societies update through the distributed criterion; set distributed");
    }
    if (const auto* dk = std::get_if<DelayedPayoff>(&sc.pdm)) {
      const double bd = sc.update_rule.delay_bound.value_or(dk->delay_bound);
      if (bd < dk->delay) throw std::invalid_argument("delay bound must be at least the delay");
    }
    if (sc.update_rule.split_fraction.has_value()) {
      const double g = *sc.update_rule.split_fraction;
      if (!(g > 0.0 && g < 1.0)) {
        throw std::invalid_argument("split fraction must lie in (0,1)");
      }
    }
  }
}

Trajectory integrate(const Scenario& sc) {
  validate(sc);
  const auto& layout = sc.game.layout;
  const int n = layout.total();
  const double h = sc.step;
  const long steps = std::lround(sc.horizon / h);
  const bool is_delay_style = delay_style(sc.pdm);

  PdmState pdm = PdmState::init(sc.game, sc.pdm, sc.x0, sc.p0);
  RevisionProtocol proto = sc.protocol;

  CriterionParams params;
  params.eta = proto.eta;
  params.populations = layout.populations();
  if (const auto* dk = std::get_if<DelayedPayoff>(&sc.pdm)) {
    params.delay_bound = sc.update_rule.delay_bound.value_or(dk->delay_bound);
    params.jacobian_bound = spectral_norm(sc.game.F);
  } else if (std::holds_alternative<MultiDelayPayoff>(sc.pdm)) {
    params.delay_bound = sc.update_rule.delay_bound.value_or(positive_max_delay(sc.pdm));
    params.jacobian_bound = antipassivity_deficit(pdm);  // sum of per-term slope bounds
  } else if (const auto* sk = std::get_if<SmoothingPayoff>(&sc.pdm)) {
    params.rate = sk->rate;
    params.split_fraction = sc.update_rule.split_fraction.value_or(sk->split_fraction);
    params.jacobian_bound = spectral_norm(sc.game.F);
    params.payoff_bound = bounds(sc.game).payoff_bound;
  } else {
    params.delay_bound = sc.update_rule.delay_bound.value_or(0.0);
    params.jacobian_bound = spectral_norm(sc.game.F);
  }

  UpdateMonitor monitor(proto.theta, is_delay_style ? params.delay_bound : 0.0,
                        is_delay_style ? 0.0 : params.rate);

  Eigen::VectorXd x = sc.x0.values;
  Eigen::VectorXd pf;
  const bool smoothing = std::holds_alternative<SmoothingPayoff>(sc.pdm);
  double rate = 0.0;
  if (smoothing) {
    pf = pdm.filter_state();
    rate = std::get<SmoothingPayoff>(sc.pdm).rate;
  }

  auto choice_into = [&](const Eigen::VectorXd& r, Eigen::VectorXd& out) {
    for (int k = 0; k < layout.populations(); ++k) {
      auto ok = layout.block(out, k);
      if (proto.kinds[static_cast<size_t>(k)] == ProtocolKind::KldRl) {
        ok = kldrl_choice(layout.block(proto.theta.values, k), layout.block(r, k), proto.eta);
      } else {
        ok = logit_choice(layout.block(r, k), proto.eta);
      }
    }
  };

  Trajectory traj;
  traj.layout = layout;
  traj.step = h;
  traj.sample_dt = h * sc.record_stride;
  const long samples = steps / sc.record_stride + 1;
  traj.times.reserve(static_cast<size_t>(samples));
  traj.states.reserve(static_cast<size_t>(samples));
  traj.payoffs.reserve(static_cast<size_t>(samples));
  traj.dxnorm.reserve(static_cast<size_t>(samples));

  Eigen::VectorXd p_now(n), field(n), work(n);
  Eigen::VectorXd kx1(n), kx2(n), kx3(n), kx4(n), kp1(n), kp2(n), kp3(n), kp4(n), xs(n), ps(n);

  auto current_payoff = [&](double t) -> Eigen::VectorXd {
    return smoothing ? pf : pdm.output_values(t, x);
  };

  auto observe_and_update = [&](double t1) {
    p_now = current_payoff(t1);
    choice_into(p_now, work);
    field = work - x;
    SocialState xs_state{layout, x};
    monitor.observe(t1, xs_state, PayoffVector{layout, p_now}, TangentVector{layout, field});
    if (sc.update_rule.enabled && t1 > monitor.last_update_time()) {
      bool fire = false;
      const PayoffVector pv{layout, p_now};
      if (is_delay_style) {
        if (monitor.window_covered(t1)) {
          if (sc.update_rule.distributed) {
            fire = true;
            for (int k = 0; fire && k < layout.populations(); ++k) {
              if (proto.kinds[static_cast<size_t>(k)] != ProtocolKind::KldRl) continue;
              fire = check_distributed_delay(monitor, params, k, t1, xs_state, pv);
            }
          } else {
            fire = check_delay_criterion(monitor, params, t1, xs_state, pv);
          }
        }
      } else {
        if (sc.update_rule.distributed) {
          fire = true;
          for (int k = 0; fire && k < layout.populations(); ++k) {
            if (proto.kinds[static_cast<size_t>(k)] != ProtocolKind::KldRl) continue;
            fire = check_distributed_smoothing(monitor, params, k, t1, xs_state, pv);
          }
        } else {
          fire = check_smoothing_criterion(monitor, params, t1, xs_state, pv);
        }
      }
      if (fire) {
        monitor.trigger(t1, xs_state);
        proto.theta = monitor.theta();
      }
    }
  };

  auto record_sample = [&](double t) {
    traj.times.push_back(t);
    traj.states.push_back(x);
    traj.payoffs.push_back(p_now);
    traj.dxnorm.push_back(field.norm());
  };

  observe_and_update(0.0);
  record_sample(0.0);

  for (long s = 0; s < steps; ++s) {
    const double t = static_cast<double>(s) * h;
    if (smoothing) {
      choice_into(pf, work);
      kx1 = work - x;
      kp1 = -rate * (pf - (sc.game.F * x + sc.game.b));
      xs = x + 0.5 * h * kx1;
      ps = pf + 0.5 * h * kp1;
      choice_into(ps, work);
      kx2 = work - xs;
      kp2 = -rate * (ps - (sc.game.F * xs + sc.game.b));
      xs = x + 0.5 * h * kx2;
      ps = pf + 0.5 * h * kp2;
      choice_into(ps, work);
      kx3 = work - xs;
      kp3 = -rate * (ps - (sc.game.F * xs + sc.game.b));
      xs = x + h * kx3;
      ps = pf + h * kp3;
      choice_into(ps, work);
      kx4 = work - xs;
      kp4 = -rate * (ps - (sc.game.F * xs + sc.game.b));
      x += (h / 6.0) * (kx1 + 2.0 * kx2 + 2.0 * kx3 + kx4);
      pf += (h / 6.0) * (kp1 + 2.0 * kp2 + 2.0 * kp3 + kp4);
    } else {
      choice_into(pdm.output_values(t, x), work);
      kx1 = work - x;
      xs = x + 0.5 * h * kx1;
      choice_into(pdm.output_values(t + 0.5 * h, xs), work);
      kx2 = work - xs;
      xs = x + 0.5 * h * kx2;
      choice_into(pdm.output_values(t + 0.5 * h, xs), work);
      kx3 = work - xs;
      xs = x + h * kx3;
      choice_into(pdm.output_values(t + h, xs), work);
      kx4 = work - xs;
      x += (h / 6.0) * (kx1 + 2.0 * kx2 + 2.0 * kx3 + kx4);
    }

    const double t1 = static_cast<double>(s + 1) * h;
    for (int k = 0; k < layout.populations(); ++k) {
      auto blk = layout.block(x, k);
      const double mass = blk.sum();
      if (std::abs(mass - 1.0) > 1e-6 || blk.minCoeff() < -1e-6) {
        throw std::runtime_error("simplex invariant breached at t=" + std::to_string(t1) +
                                 " population " + std::to_string(k));
      }
      if (std::abs(mass - 1.0) > 1e-12) blk /= mass;
    }
    if (is_delay_style) pdm.record(t1, x);

    observe_and_update(t1);
    if ((s + 1) % sc.record_stride == 0) record_sample(t1);
  }

  traj.theta_events = monitor.log();
  return traj;
}

std::vector<RunOutcome> batch_run(const std::vector<Scenario>& scenarios) {
  std::vector<RunOutcome> out;
  out.reserve(scenarios.size());
  for (const auto& sc : scenarios) {
    RunOutcome r;
    try {
      r.trajectory = integrate(sc);
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace kldrl
