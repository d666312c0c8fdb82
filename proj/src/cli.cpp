#include "kldrl/cli.hpp"

#include "kldrl/config.hpp"
#include "kldrl/diagnostics.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace kldrl {

namespace {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ordered_json to_json(const Eigen::VectorXd& v) {
  ordered_json arr = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

void write_trajectory_csv(const fs::path& path, const Trajectory& traj) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const int n = traj.layout.total();
  out << "t";
  for (int i = 1; i <= n; ++i) out << ",x_" << i;
  for (int i = 1; i <= n; ++i) out << ",p_" << i;
  out << ",dxnorm\n";
  for (size_t s = 0; s < traj.times.size(); ++s) {
    out << fmt17(traj.times[s]);
    for (int i = 0; i < n; ++i) out << ',' << fmt17(traj.states[s][i]);
    for (int i = 0; i < n; ++i) out << ',' << fmt17(traj.payoffs[s][i]);
    out << ',' << fmt17(traj.dxnorm[s]) << '\n';
  }
}

void write_events_csv(const fs::path& path, const Trajectory& traj) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const int n = traj.layout.total();
  out << "l,t_l";
  for (int i = 1; i <= n; ++i) out << ",theta_" << i;
  out << '\n';
  for (const auto& ev : traj.theta_events) {
    out << ev.index << ',' << fmt17(ev.t);
    for (int i = 0; i < n; ++i) out << ',' << fmt17(ev.theta[i]);
    out << '\n';
  }
}

ordered_json config_echo(const ScenarioConfig& cfg) {
  ordered_json sections = ordered_json::array();
  for (const auto& [name, entries] : cfg.raw) {
    ordered_json sec;
    sec["section"] = name;
    ordered_json kv = ordered_json::array();
    for (const auto& [k, v] : entries) kv.push_back(ordered_json::array({k, v}));
    sec["entries"] = kv;
    sections.push_back(sec);
  }
  return sections;
}

ordered_json run_summary(const ScenarioConfig& cfg, const Trajectory& traj,
                         const std::optional<SocialState>& nash) {
  ordered_json j;
  j["terminal_time"] = traj.times.back();
  j["terminal_state"] = to_json(traj.terminal_state());
  j["theta_updates"] = traj.theta_events.size();
  SocialState terminal = make_state(traj.layout, traj.terminal_state(), 1e-6);
  j["nash_residual"] = nash_residual(cfg.game, terminal);
  if (nash.has_value()) {
    MetricSeries kl = kl_to_target(traj, *nash);
    j["kl_to_nash"] = kl.values.back();
  }
  ordered_json metrics;
  metrics["average_payoff"] = average_payoff(traj, cfg.game).values.back();
  ordered_json gains = ordered_json::array();
  for (int k = 0; k < traj.layout.populations(); ++k) {
    gains.push_back(max_gain(traj, cfg.game, k).values.back());
  }
  metrics["max_gain"] = gains;
  metrics["oscillation_x1_tail20"] = oscillation_amplitude(traj, 0, 0.2);
  metrics["terminal_dxnorm"] = traj.dxnorm.back();
  j["metrics"] = metrics;
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

int run_into(const ScenarioConfig& cfg, const fs::path& out_dir, std::ostream& diag,
             std::vector<RunOutcome>* keep = nullptr) {
  fs::create_directories(out_dir);
  std::vector<Scenario> scenarios = make_scenarios(cfg);
  std::vector<RunOutcome> outcomes = batch_run(scenarios);
  std::optional<SocialState> nash;
  if (is_contractive(cfg.game)) {
    try {
      nash = nash_oracle(cfg.game, 1e-8);
    } catch (const std::exception&) {
      nash.reset();
    }
  }
  ordered_json summary;
  summary["config"] = config_echo(cfg);
  summary["game"] = cfg.game_source;
  ordered_json runs = ordered_json::array();
  bool any_error = false;
  for (size_t i = 0; i < outcomes.size(); ++i) {
    const fs::path dir = outcomes.size() == 1 ? out_dir : out_dir / ("run_" + std::to_string(i));
    fs::create_directories(dir);
    ordered_json entry;
    entry["index"] = i;
    if (outcomes[i].trajectory.has_value()) {
      const Trajectory& traj = *outcomes[i].trajectory;
      write_trajectory_csv(dir / "trajectory.csv", traj);
      write_events_csv(dir / "events.csv", traj);
      entry["result"] = run_summary(cfg, traj, nash);
    } else {
      entry["error"] = outcomes[i].error;
      any_error = true;
      diag << "run " << i << " failed: " << outcomes[i].error << "\n";
    }
    runs.push_back(entry);
  }
  summary["runs"] = runs;
  write_text(out_dir / "summary.json", summary.dump(2) + "\n");
  if (keep != nullptr) *keep = std::move(outcomes);
  return any_error ? 1 : 0;
}

}  // namespace

int cmd_run(const std::string& config_path, const std::string& out_dir,
            std::optional<int> stride_override, std::ostream& diag) {
  ScenarioConfig cfg;
  try {
    cfg = load_config(config_path);
    if (stride_override.has_value()) {
      cfg.record_stride = *stride_override;
      validate(make_scenarios(cfg).front());
    }
  } catch (const std::exception& e) {
    diag << "config error: " << e.what() << "\n";
    return 2;
  }
  const fs::path out = out_dir.empty() ? fs::path(cfg.out_dir) : fs::path(out_dir);
  try {
    return run_into(cfg, out, diag);
  } catch (const std::exception& e) {
    diag << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir,
              const std::string& parameter, const std::vector<double>& values,
              std::optional<int> stride_override, std::ostream& diag) {
  if (values.empty()) {
    diag << "sweep needs a non-empty value list\n";
    return 2;
  }
  if (parameter != "protocol.eta" && parameter != "pdm.d" && parameter != "pdm.lambda") {
    diag << "sweep parameter must be one of protocol.eta, pdm.d, pdm.lambda\n";
    return 2;
  }
  ScenarioConfig base;
  try {
    base = load_config(config_path);
    if (stride_override.has_value()) base.record_stride = *stride_override;
  } catch (const std::exception& e) {
    diag << "config error: " << e.what() << "\n";
    return 2;
  }
  const fs::path out = out_dir.empty() ? fs::path(base.out_dir) : fs::path(out_dir);

  std::optional<SocialState> nash;
  if (is_contractive(base.game)) {
    try {
      nash = nash_oracle(base.game, 1e-8);
    } catch (const std::exception&) {
      nash.reset();
    }
  }

  ordered_json comparison;
  comparison["parameter"] = parameter;
  ordered_json entries = ordered_json::array();
  constexpr double kThreshold = 1e-3;
  for (double v : values) {
    ScenarioConfig cfg = base;
    try {
      if (parameter == "protocol.eta") {
        if (!(v > 0.0)) throw ConfigError("protocol.eta must be positive");
        cfg.protocol.eta = v;
      } else if (parameter == "pdm.d") {
        auto* d = std::get_if<DelayedPayoff>(&cfg.pdm);
        if (d == nullptr) throw ConfigError("pdm.d sweep needs a delayed payoff mechanism");
        d->delay = v;
        d->delay_bound = std::max(d->delay_bound, v);
      } else {
        auto* s = std::get_if<SmoothingPayoff>(&cfg.pdm);
        if (s == nullptr) throw ConfigError("pdm.lambda sweep needs a smoothing mechanism");
        s->rate = v;
      }
      validate(make_scenarios(cfg).front());
    } catch (const std::exception& e) {
      diag << "config error: " << e.what() << "\n";
      return 2;
    }
    char label[64];
    std::snprintf(label, sizeof label, "%s=%g", parameter.c_str(), v);
    const fs::path dir = out / label;
    int code = 0;
    std::vector<RunOutcome> outcomes;
    try {
      code = run_into(cfg, dir, diag, &outcomes);
    } catch (const std::exception& e) {
      diag << "error: " << e.what() << "\n";
      return 1;
    }
    if (code != 0) return code;
    ordered_json entry;
    entry["value"] = v;
    entry["dir"] = std::string(label);
    if (nash.has_value() && !outcomes.empty() && outcomes.front().trajectory.has_value()) {
      MetricSeries kl = kl_to_target(*outcomes.front().trajectory, *nash);
      auto ct = convergence_time(kl, kThreshold);
      if (ct.has_value()) {
        entry["convergence_time"] = *ct;
      } else {
        entry["convergence_time"] = nullptr;
      }
      entry["terminal_kl"] = kl.values.back();
    }
    entries.push_back(entry);
  }
  comparison["threshold"] = kThreshold;
  comparison["runs"] = entries;
  fs::create_directories(out);
  write_text(out / "sweep_summary.json", comparison.dump(2) + "\n");
  return 0;
}

int cmd_nash(const std::string& config_path, std::ostream& out, std::ostream& diag) {
  ScenarioConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const std::exception& e) {
    diag << "config error: " << e.what() << "\n";
    return 2;
  }
  try {
    SocialState nash = nash_oracle(cfg.game, 1e-8);
    SocialState perturbed =
        perturbed_nash(cfg.game, cfg.protocol.eta, cfg.protocol.theta, 1e-12);
    PayoffVector p = payoff(cfg.game, perturbed);
    ordered_json j;
    j["nash"] = to_json(nash.values);
    j["nash_residual"] = nash_residual(cfg.game, nash);
    j["eta"] = cfg.protocol.eta;
    j["theta"] = to_json(cfg.protocol.theta.values);
    j["perturbed_nash"] = to_json(perturbed.values);
    j["perturbed_nash_residual"] =
        lhs_stationarity(perturbed, p, cfg.protocol.theta, cfg.protocol.eta);
    out << j.dump(2) << "\n";
    return 0;
  } catch (const std::exception& e) {
    diag << "error: " << e.what() << "\n";
    return 1;
  }
}

namespace {

struct Check {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  std::string requirement;
};

void report(std::ostream& out, std::vector<Check>& all, std::string name, bool pass,
            double measured, std::string requirement) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-4s %-36s measured=%- .6g  (need %s)\n",
                pass ? "PASS" : "FAIL", name.c_str(), measured, requirement.c_str());
  out << buf;
  all.push_back({std::move(name), pass, measured, std::move(requirement)});
}

PopulationLayout random_layout(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pops(1, 3);
  std::uniform_int_distribution<int> counts(2, 4);
  std::vector<int> c(static_cast<size_t>(pops(rng)));
  for (auto& v : c) v = counts(rng);
  return PopulationLayout(c);
}

}  // namespace

int cmd_verify(std::ostream& out) {
  std::vector<Check> checks;
  std::mt19937_64 rng(20240817);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  {  // divergence nonnegativity, zero exactly at equal arguments
    double min_div = std::numeric_limits<double>::infinity();
    double at_equal = 0.0;
    for (int i = 0; i < 200; ++i) {
      PopulationLayout layout = random_layout(rng);
      SocialState x = random_interior_state(layout, rng);
      SocialState y = random_interior_state(layout, rng);
      min_div = std::min(min_div, kl_divergence(x, y));
      at_equal = std::max(at_equal, std::abs(kl_divergence(x, x)));
    }
    report(out, checks, "divergence-nonnegative", min_div >= 0.0 && at_equal == 0.0,
           std::min(min_div, -at_equal), ">= 0 and 0 at equality");
  }
  {  // cross identity x^T grad D(a||b) = D(x||b) - D(x||a)
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
      PopulationLayout layout = random_layout(rng);
      SocialState x = random_interior_state(layout, rng);
      SocialState a = random_interior_state(layout, rng);
      SocialState b = random_interior_state(layout, rng);
      const double lhs = x.values.dot(kl_gradient(a, b).values);
      const double rhs = kl_divergence(x, b) - kl_divergence(x, a);
      worst = std::max(worst, std::abs(lhs - rhs));
    }
    report(out, checks, "divergence-cross-identity", worst <= 1e-10, worst, "<= 1e-10");
  }
  {  // gradient vs centered finite differences along tangents
    double worst = 0.0;
    const double h = 1e-6;
    for (int i = 0; i < 100; ++i) {
      PopulationLayout layout = random_layout(rng);
      SocialState x = interior_clamp(random_interior_state(layout, rng), 1e-3);
      SocialState y = interior_clamp(random_interior_state(layout, rng), 1e-3);
      Eigen::VectorXd dir(layout.total());
      for (int j = 0; j < dir.size(); ++j) dir[j] = unit(rng);
      for (int k = 0; k < layout.populations(); ++k) {
        auto blk = layout.block(dir, k);
        blk.array() -= blk.mean();
      }
      dir.normalize();
      SocialState xp{layout, x.values + h * dir};
      SocialState xm{layout, x.values - h * dir};
      const double numeric = (kl_divergence(xp, y) - kl_divergence(xm, y)) / (2.0 * h);
      const double analytic = dir.dot(kl_gradient(x, y).values);
      worst = std::max(worst, std::abs(numeric - analytic));
    }
    report(out, checks, "gradient-finite-difference", worst <= 1e-6, worst, "<= 1e-6");
  }
  {  // linear maximization vs exhaustive vertex enumeration
    double worst = 0.0;
    bool vertices_match = true;
    for (int i = 0; i < 1000; ++i) {
      PopulationLayout layout = random_layout(rng);
      Eigen::VectorXd r(layout.total());
      for (int j = 0; j < r.size(); ++j) r[j] = unit(rng);
      ArgmaxResult got = linear_argmax(PayoffVector{layout, r});
      double best = -std::numeric_limits<double>::infinity();
      Eigen::VectorXd best_vertex;
      std::vector<int> picks(static_cast<size_t>(layout.populations()), 0);
      while (true) {
        Eigen::VectorXd z = Eigen::VectorXd::Zero(layout.total());
        for (int k = 0; k < layout.populations(); ++k) {
          z[layout.offset(k) + picks[static_cast<size_t>(k)]] = 1.0;
        }
        const double value = z.dot(r);
        if (value > best) {
          best = value;
          best_vertex = z;
        }
        int k = 0;
        for (; k < layout.populations(); ++k) {
          if (++picks[static_cast<size_t>(k)] < layout.count(k)) break;
          picks[static_cast<size_t>(k)] = 0;
        }
        if (k == layout.populations()) break;
      }
      worst = std::max(worst, std::abs(got.value - best));
      if ((got.vertex.values - best_vertex).cwiseAbs().maxCoeff() > 0.0) vertices_match = false;
    }
    report(out, checks, "argmax-vertex-enumeration", worst <= 1e-12 && vertices_match, worst,
           "<= 1e-12, vertices equal");
  }
  {  // equal payoffs reproduce the reference distribution
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      PopulationLayout layout = random_layout(rng);
      SocialState theta = random_interior_state(layout, rng);
      const double c = unit(rng);
      for (int k = 0; k < layout.populations(); ++k) {
        Eigen::VectorXd r = Eigen::VectorXd::Constant(layout.count(k), c);
        Eigen::VectorXd choice =
            kldrl_choice(layout.block(theta.values, k), r, 0.5 + std::abs(unit(rng)));
        worst =
            std::max(worst, (choice - layout.block(theta.values, k)).cwiseAbs().maxCoeff());
      }
    }
    report(out, checks, "choice-equal-payoffs", worst <= 1e-14, worst, "<= 1e-14");
  }
  {  // uniform reference reduces to the logit rule
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
      const int c = 2 + static_cast<int>(i % 3);
      Eigen::VectorXd r(c);
      for (int j = 0; j < c; ++j) r[j] = 5.0 * unit(rng);
      const double eta = 0.1 + std::abs(unit(rng));
      Eigen::VectorXd uniform = Eigen::VectorXd::Constant(c, 1.0 / c);
      worst = std::max(
          worst, (kldrl_choice(uniform, r, eta) - logit_choice(r, eta)).cwiseAbs().maxCoeff());
    }
    report(out, checks, "choice-uniform-reference", worst <= 1e-14, worst, "<= 1e-14");
  }
  {  // storage function vanishes exactly at the choice
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
      PopulationLayout layout = random_layout(rng);
      SocialState theta = random_interior_state(layout, rng);
      Eigen::VectorXd r(layout.total());
      for (int j = 0; j < r.size(); ++j) r[j] = 3.0 * unit(rng);
      const double eta = 0.2 + std::abs(unit(rng));
      RevisionProtocol proto = RevisionProtocol::kldrl(eta, theta);
      SocialState choice = protocol_choice(proto, PayoffVector{layout, r});
      worst = std::max(worst,
                       std::abs(storage_function(theta, eta, choice, PayoffVector{layout, r})));
    }
    report(out, checks, "storage-zero-at-choice", worst <= 1e-12, worst, "<= 1e-12");
  }
  {  // revision field stays tangent and bounded
    double worst_sum = 0.0;
    double worst_entry = 0.0;
    double worst_norm = 0.0;
    for (int i = 0; i < 10000; ++i) {
      PopulationLayout layout = random_layout(rng);
      SocialState x = random_interior_state(layout, rng);
      SocialState theta = random_interior_state(layout, rng);
      Eigen::VectorXd r(layout.total());
      for (int j = 0; j < r.size(); ++j) r[j] = 4.0 * unit(rng);
      RevisionProtocol proto = RevisionProtocol::kldrl(0.3 + std::abs(unit(rng)), theta);
      TangentVector f = edm_vector_field(proto, x, PayoffVector{layout, r});
      for (int k = 0; k < layout.populations(); ++k) {
        worst_sum = std::max(worst_sum, std::abs(layout.block(f.values, k).sum()));
      }
      worst_entry = std::max(worst_entry, f.values.cwiseAbs().maxCoeff());
      worst_norm = std::max(worst_norm, f.values.norm() / std::sqrt(layout.total()));
    }
    const bool pass = worst_sum <= 1e-12 && worst_entry <= 1.0 && worst_norm <= 1.0;
    report(out, checks, "field-tangent-and-bounded", pass, worst_sum,
           "sums <= 1e-12, |entries| <= 1, norm <= sqrt(n)");
  }
  {  // equilibrium solver residuals on the two bundled games
    double worst = 0.0;
    for (const AffineGame& game : {congestion_game(), rps_zero_sum_game()}) {
      worst = std::max(worst, nash_residual(game, nash_oracle(game, 1e-8)));
    }
    report(out, checks, "equilibrium-residual", worst <= 1e-6, worst, "<= 1e-6");
  }
  {  // vertex payoff bound dominates sampled payoffs
    const AffineGame game = congestion_game();
    const GameBounds gb = bounds(game);
    double worst = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < 10000; ++i) {
      SocialState x = random_interior_state(game.layout, rng);
      worst = std::max(worst, payoff(game, x).values.norm() - gb.payoff_bound);
    }
    report(out, checks, "payoff-bound-containment", worst <= 1e-12, worst, "<= 1e-12");
  }
  {  // delayed mechanism replays the initial payoff before the delay elapses
    const AffineGame game = congestion_game();
    std::mt19937_64 local(7);
    SocialState x0 = random_interior_state(game.layout, local);
    PdmState pdm = PdmState::init(game, DelayedPayoff{1.0, 1.0}, x0);
    Eigen::VectorXd expect = game.F * x0.values + game.b;
    double worst = 0.0;
    for (double t : {0.0, 0.25, 0.5, 0.99}) {
      SocialState probe = uniform_state(game.layout);
      worst = std::max(worst, (pdm.output(t, probe).values - expect).cwiseAbs().maxCoeff());
    }
    report(out, checks, "delayed-initial-payoff", worst <= 1e-12, worst, "<= 1e-12");
  }
  {  // smoothing filter decays exponentially toward the payoff
    Scenario sc;
    sc.game = {PopulationLayout{3, 3}, Eigen::MatrixXd::Zero(6, 6), Eigen::VectorXd::Zero(6)};
    sc.pdm = SmoothingPayoff{1.0, 0.1};
    sc.protocol = RevisionProtocol::logit(sc.game.layout, 1.0);
    sc.x0 = uniform_state(sc.game.layout);
    sc.p0 = Eigen::VectorXd::Ones(6);
    sc.horizon = 2.0;
    sc.step = 0.01;
    Trajectory traj = integrate(sc);
    double worst = 0.0;
    for (double t : {1.0, 2.0}) {
      const size_t i = static_cast<size_t>(std::llround(t / sc.step));
      worst = std::max(worst,
                       std::abs(traj.payoffs[i].norm() - std::exp(-t) * std::sqrt(6.0)));
    }
    report(out, checks, "smoothing-exponential-decay", worst <= 1e-6, worst, "<= 1e-6");
  }
  {  // dissipation certificate, delayed mechanism on a short run
    const AffineGame game = congestion_game();
    Scenario sc;
    sc.game = game;
    sc.pdm = DelayedPayoff{1.0, 1.0};
    sc.protocol = RevisionProtocol::logit(game.layout, 4.5);
    sc.x0 = make_state(game.layout, [] {
      Eigen::VectorXd v(6);
      v << 0.7, 0.2, 0.1, 0.2, 0.3, 0.5;
      return v;
    }());
    sc.horizon = 20.0;
    sc.step = 0.01;
    Trajectory traj = integrate(sc);
    const double nu = spectral_norm(game.F) + 0.05;
    const double slack = passivity_check(traj, game, nu, EnergyForm::DelayWindow, 1.0);
    report(out, checks, "dissipation-delayed", slack >= -1e-5, slack, ">= -1e-5");
  }
  {  // dissipation certificate, smoothing mechanism on a short run
    const AffineGame game = rps_zero_sum_game();
    Scenario sc;
    sc.game = game;
    sc.pdm = SmoothingPayoff{1.0, 0.1};
    sc.protocol = RevisionProtocol::kldrl(0.6, uniform_state(game.layout));
    sc.x0 = make_state(game.layout, [] {
      Eigen::VectorXd v(6);
      v << 0.6, 0.3, 0.1, 0.1, 0.4, 0.5;
      return v;
    }());
    sc.horizon = 30.0;
    sc.step = 0.01;
    Trajectory traj = integrate(sc);
    const double nu = 0.25 * spectral_norm(game.F - game.F.transpose()) + 0.05;
    const double slack = passivity_check(traj, game, nu, EnergyForm::SmoothingGap);
    report(out, checks, "dissipation-smoothing", slack >= -1e-5, slack, ">= -1e-5");
  }
  {  // each parameter update contracts the divergence from the equilibrium
    const AffineGame game = congestion_game();
    Scenario sc;
    sc.game = game;
    sc.pdm = DelayedPayoff{1.0, 1.0};
    sc.protocol = RevisionProtocol::kldrl(4.5, uniform_state(game.layout));
    sc.update_rule.enabled = true;
    sc.x0 = uniform_state(game.layout);
    sc.horizon = 30.0;
    sc.step = 0.01;
    sc.record_stride = 10;
    Trajectory traj = integrate(sc);
    Eigen::VectorXd ne(6);
    ne << 4.0 / 9, 1.0 / 9, 4.0 / 9, 4.0 / 9, 1.0 / 9, 4.0 / 9;
    SocialState nash = make_state(game.layout, ne);
    double worst = -std::numeric_limits<double>::infinity();
    SocialState prev = uniform_state(game.layout);
    for (const auto& ev : traj.theta_events) {
      SocialState cur = make_state(game.layout, ev.theta, 1e-9);
      const double drop = kl_divergence(nash, prev) - 0.5 * kl_divergence(cur, prev) -
                          kl_divergence(nash, cur);
      worst = std::max(worst, -drop);
      prev = cur;
    }
    const bool enough = traj.theta_events.size() >= 2;
    report(out, checks, "update-divergence-contraction", enough && worst <= 1e-6, worst,
           "<= 1e-6 with >= 2 updates");
  }
  {  // per-population tests passing everywhere implies the centralized test
    std::mt19937_64 local(99);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    int counterexamples = 0;
    int positives = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      PopulationLayout layout({3, 3});
      const bool quiet = trial % 2 == 0;
      SocialState theta = random_interior_state(layout, local);
      SocialState x = random_interior_state(layout, local);
      CriterionParams params;
      params.eta = 0.5 + 4.0 * u01(local);
      params.delay_bound = 0.5 + u01(local);
      params.jacobian_bound = 0.5 + 4.0 * u01(local);
      params.payoff_bound = 0.5 + 4.0 * u01(local);
      params.rate = 0.5 + u01(local);
      params.split_fraction = 0.1 + 0.8 * u01(local);
      params.populations = 2;
      const bool delay_case = trial % 4 < 2;
      UpdateMonitor monitor(theta, delay_case ? params.delay_bound : 0.0,
                            delay_case ? 0.0 : params.rate);
      const double scale = quiet ? 1e-4 : 0.5;
      // Smoothing positives need the filter-decay term to have died down.
      const double t1 = delay_case ? params.delay_bound + 2.0 + u01(local)
                                   : 80.0 / params.rate + u01(local);
      Eigen::VectorXd p(6);
      for (int s = 0; s <= 40; ++s) {
        const double t = t1 * s / 40.0;
        Eigen::VectorXd f(6);
        for (int j = 0; j < 6; ++j) {
          f[j] = scale * (u01(local) - 0.5);
          p[j] = quiet ? 0.2 * u01(local) : 4.0 * (u01(local) - 0.5);
        }
        for (int k = 0; k < 2; ++k) {
          auto blk = layout.block(f, k);
          blk.array() -= blk.mean();
        }
        monitor.observe(t, x, PayoffVector{layout, p}, TangentVector{layout, f});
      }
      if (quiet) {
        // Stationary data: payoffs that make x the exact choice for theta give a
        // zero gap, so the per-population tests pass once the state sits away
        // from theta while the field stays small.
        p = params.eta * (x.values.array() / theta.values.array()).log();
      }
      const PayoffVector pv{layout, p};
      bool all_pop = true;
      for (int k = 0; k < 2; ++k) {
        all_pop = all_pop && (delay_case
                                  ? check_distributed_delay(monitor, params, k, t1, x, pv)
                                  : check_distributed_smoothing(monitor, params, k, t1, x, pv));
      }
      if (!all_pop) continue;
      ++positives;
      const bool central = delay_case ? check_delay_criterion(monitor, params, t1, x, pv)
                                      : check_smoothing_criterion(monitor, params, t1, x, pv);
      if (!central) ++counterexamples;
    }
    report(out, checks, "distributed-implies-centralized",
           counterexamples == 0 && positives > 0, static_cast<double>(counterexamples),
           "0 counterexamples, some positives");
  }

  int failures = 0;
  for (const auto& c : checks) {
    if (!c.pass) ++failures;
  }
  out << checks.size() << " checks, " << (checks.size() - static_cast<size_t>(failures))
      << " passed, " << failures << " failed\n";
  return failures == 0 ? 0 : 1;
}

}  // namespace kldrl
