#include "kldrl/config.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace kldrl {

namespace {

const std::map<std::string, std::set<std::string>> kSchema = {
    {"game", {"builtin", "file"}},
    {"pdm", {"kind", "d", "B_d", "lambda", "gamma", "delays"}},
    {"protocol", {"kind", "eta", "theta0", "kinds"}},
    {"algorithm1", {"enabled", "gamma", "B_d", "distributed"}},
    {"sim", {"T", "h", "record_stride", "x0", "runs", "seed"}},
    {"output", {"dir", "stride"}},
};

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& section, const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw ConfigError(section + "." + key + ": expected a number, got '" + v + "'");
  }
}

long parse_int(const std::string& section, const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const long x = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw ConfigError(section + "." + key + ": expected an integer, got '" + v + "'");
  }
}

bool parse_bool(const std::string& section, const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(section + "." + key + ": expected a boolean, got '" + v + "'");
}

Eigen::VectorXd parse_vector(const std::string& section, const std::string& key,
                             const std::string& v) {
  const auto items = split_list(v);
  Eigen::VectorXd out(static_cast<Eigen::Index>(items.size()));
  for (size_t i = 0; i < items.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = parse_double(section, key, items[i]);
  }
  return out;
}

class SectionView {
 public:
  SectionView(const ScenarioConfig& cfg, std::string name) : name_(std::move(name)) {
    for (const auto& [sec, entries] : cfg.raw) {
      if (sec != name_) continue;
      for (const auto& [k, v] : entries) map_[k] = v;
    }
  }
  bool has(const std::string& key) const { return map_.count(key) > 0; }
  std::string str(const std::string& key, const std::string& fallback = "") const {
    auto it = map_.find(key);
    return it == map_.end() ? fallback : it->second;
  }
  double num(const std::string& key, double fallback) const {
    return has(key) ? parse_double(name_, key, map_.at(key)) : fallback;
  }
  std::optional<double> num_opt(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return parse_double(name_, key, map_.at(key));
  }
  long integer(const std::string& key, long fallback) const {
    return has(key) ? parse_int(name_, key, map_.at(key)) : fallback;
  }
  bool boolean(const std::string& key, bool fallback) const {
    return has(key) ? parse_bool(name_, key, map_.at(key)) : fallback;
  }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  std::map<std::string, std::string> map_;
};

SocialState state_from_spec(const PopulationLayout& layout, const std::string& section,
                            const std::string& key, const std::string& spec) {
  if (spec == "uniform") return uniform_state(layout);
  Eigen::VectorXd v = parse_vector(section, key, spec);
  if (v.size() != layout.total()) {
    throw ConfigError(section + "." + key + ": expected " + std::to_string(layout.total()) +
                      " entries");
  }
  try {
    return make_state(layout, std::move(v), 1e-9);
  } catch (const std::exception& e) {
    throw ConfigError(section + "." + key + ": " + e.what());
  }
}

}  // namespace

AffineGame load_game_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open game file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("game file '" + path + "': " + e.what());
  }
  if (!j.contains("layout") || !j["layout"].is_array()) {
    throw ConfigError("game file needs a layout array");
  }
  std::vector<int> counts;
  for (const auto& c : j["layout"]) counts.push_back(c.get<int>());
  PopulationLayout layout;
  try {
    layout = PopulationLayout(counts);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("game file layout: ") + e.what());
  }
  const int n = layout.total();
  if (!j.contains("F")) throw ConfigError("game file needs a payoff matrix F");
  Eigen::MatrixXd f(n, n);
  const auto& jf = j["F"];
  if (jf.is_array() && jf.size() == static_cast<size_t>(n) && jf[0].is_array()) {
    for (int r = 0; r < n; ++r) {
      if (jf[static_cast<size_t>(r)].size() != static_cast<size_t>(n)) {
        throw ConfigError("game file matrix row has wrong length");
      }
      for (int c = 0; c < n; ++c) f(r, c) = jf[static_cast<size_t>(r)][static_cast<size_t>(c)];
    }
  } else if (jf.is_array() && jf.size() == static_cast<size_t>(n * n)) {
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) f(r, c) = jf[static_cast<size_t>(r * n + c)];
    }
  } else {
    throw ConfigError("game file matrix must be n x n (nested or row-major flat)");
  }
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  if (j.contains("b")) {
    if (!j["b"].is_array() || j["b"].size() != static_cast<size_t>(n)) {
      throw ConfigError("game file offset b must have n entries");
    }
    for (int i = 0; i < n; ++i) b[i] = j["b"][static_cast<size_t>(i)];
  }
  return {layout, std::move(f), std::move(b)};
}

ScenarioConfig parse_config_text(const std::string& text, const std::string& base_dir) {
  ScenarioConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": bad section");
      section = trim(t.substr(1, t.size() - 2));
      if (kSchema.count(section) == 0) {
        throw ConfigError("unknown section [" + section + "]");
      }
      cfg.raw.emplace_back(section, std::vector<std::pair<std::string, std::string>>{});
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    if (section.empty()) {
      throw ConfigError("line " + std::to_string(lineno) + ": key outside any section");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (kSchema.at(section).count(key) == 0) {
      throw ConfigError("unknown key '" + key + "' in section [" + section + "]");
    }
    cfg.raw.back().second.emplace_back(key, value);
  }

  // [game]
  SectionView game(cfg, "game");
  const std::string builtin = game.str("builtin");
  const std::string file = game.str("file");
  if (builtin.empty() == file.empty()) {
    throw ConfigError("[game] needs exactly one of builtin or file");
  }
  if (!builtin.empty()) {
    if (builtin == "congestion2pop") {
      cfg.game = congestion_game();
    } else if (builtin == "rps2pop") {
      cfg.game = rps_zero_sum_game();
    } else {
      throw ConfigError("unknown builtin game '" + builtin + "'");
    }
    cfg.game_source = builtin;
  } else {
    const std::filesystem::path p = std::filesystem::path(file).is_absolute()
                                        ? std::filesystem::path(file)
                                        : std::filesystem::path(base_dir) / file;
    cfg.game = load_game_file(p.string());
    cfg.game_source = file;
  }
  const auto& layout = cfg.game.layout;

  // [pdm]
  SectionView pdm(cfg, "pdm");
  const std::string kind = pdm.str("kind", "static");
  if (kind == "static") {
    cfg.pdm = StaticPayoff{};
  } else if (kind == "delayed") {
    DelayedPayoff d;
    d.delay = pdm.num("d", 1.0);
    d.delay_bound = pdm.num("B_d", d.delay);
    if (!(d.delay > 0.0)) throw ConfigError("pdm.d must be positive");
    if (d.delay_bound < d.delay) throw ConfigError("pdm.B_d must be at least pdm.d");
    cfg.pdm = d;
  } else if (kind == "multidelay") {
    if (!pdm.has("delays")) throw ConfigError("pdm.delays required for multidelay");
    const Eigen::VectorXd delays = parse_vector("pdm", "delays", pdm.str("delays"));
    if (delays.size() == 0) throw ConfigError("pdm.delays must be non-empty");
    MultiDelayPayoff m;
    const double share = 1.0 / static_cast<double>(delays.size());
    for (Eigen::Index i = 0; i < delays.size(); ++i) {
      if (delays[i] < 0.0) throw ConfigError("pdm.delays entries must be nonnegative");
      m.terms.push_back({delays[i], share * cfg.game.F, share * cfg.game.b});
    }
    cfg.pdm = std::move(m);
  } else if (kind == "smoothing") {
    SmoothingPayoff s;
    s.rate = pdm.num("lambda", 1.0);
    s.split_fraction = pdm.num("gamma", 0.1);
    if (!(s.rate > 0.0)) throw ConfigError("pdm.lambda must be positive");
    if (!(s.split_fraction > 0.0 && s.split_fraction < 1.0)) {
      throw ConfigError("pdm.gamma must lie in (0,1)");
    }
    cfg.pdm = s;
  } else {
    throw ConfigError("unknown pdm.kind '" + kind + "'");
  }

  // [protocol]
  SectionView proto(cfg, "protocol");
  const std::string pkind = proto.str("kind", "logit");
  const double eta = proto.num("eta", 1.0);
  if (!(eta > 0.0)) throw ConfigError("protocol.eta must be positive");
  SocialState theta0 = state_from_spec(layout, "protocol", "theta0", proto.str("theta0", "uniform"));
  if (!is_interior(theta0)) throw ConfigError("protocol.theta0 must be interior");
  try {
    if (pkind == "logit") {
      cfg.protocol = RevisionProtocol::logit(layout, eta);
    } else if (pkind == "kldrl") {
      cfg.protocol = RevisionProtocol::kldrl(eta, theta0);
    } else if (pkind == "mixed") {
      const auto items = split_list(proto.str("kinds"));
      if (static_cast<int>(items.size()) != layout.populations()) {
        throw ConfigError("protocol.kinds needs one entry per population");
      }
      std::vector<ProtocolKind> kinds;
      for (const auto& item : items) {
        if (item == "kldrl") {
          kinds.push_back(ProtocolKind::KldRl);
        } else if (item == "logit") {
          kinds.push_back(ProtocolKind::Logit);
        } else {
          throw ConfigError("protocol.kinds entries must be kldrl or logit");
        }
      }
      cfg.protocol = RevisionProtocol::mixed(eta, theta0, std::move(kinds));
    } else {
      throw ConfigError("unknown protocol.kind '" + pkind + "'");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("protocol: ") + e.what());
  }

  // [algorithm1]
  SectionView alg(cfg, "algorithm1");
  cfg.update_rule.enabled = alg.boolean("enabled", false);
  cfg.update_rule.split_fraction = alg.num_opt("gamma");
  cfg.update_rule.delay_bound = alg.num_opt("B_d");
  cfg.update_rule.distributed = alg.boolean("distributed", false);

  // [sim]
  SectionView sim(cfg, "sim");
  const bool smoothing = std::holds_alternative<SmoothingPayoff>(cfg.pdm);
  cfg.horizon = sim.num("T", smoothing ? 200.0 : 100.0);
  cfg.step = sim.num("h", 0.01);
  cfg.record_stride = static_cast<int>(sim.integer("record_stride", 1));
  cfg.runs = static_cast<int>(sim.integer("runs", 1));
  cfg.seed = static_cast<std::uint64_t>(sim.integer("seed", 1));
  const std::string x0 = sim.str("x0", "uniform");
  if (x0 == "uniform" || x0 == "random") {
    cfg.x0_mode = x0;
  } else {
    cfg.x0_mode = "explicit";
    cfg.x0_values = state_from_spec(layout, "sim", "x0", x0).values;
  }
  if (cfg.runs < 1) throw ConfigError("sim.runs must be at least one");
  if (cfg.runs > 1 && cfg.x0_mode != "random") {
    throw ConfigError("multi-run batches require sim.x0 = random");
  }

  // [output]
  SectionView out(cfg, "output");
  cfg.out_dir = out.str("dir", "out");
  if (out.has("stride")) cfg.record_stride = static_cast<int>(out.integer("stride", 1));
  if (cfg.record_stride < 1) throw ConfigError("record stride must be positive");

  // Validate the single-run scenario eagerly so bad configs fail before output.
  try {
    std::vector<Scenario> probe = make_scenarios(cfg);
    validate(probe.front());
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(),
                           std::filesystem::path(path).parent_path().string().empty()
                               ? "."
                               : std::filesystem::path(path).parent_path().string());
}

std::vector<Scenario> make_scenarios(const ScenarioConfig& cfg) {
  std::vector<Scenario> out;
  std::mt19937_64 rng(cfg.seed);
  for (int run = 0; run < cfg.runs; ++run) {
    Scenario sc;
    sc.game = cfg.game;
    sc.pdm = cfg.pdm;
    sc.protocol = cfg.protocol;
    sc.update_rule = cfg.update_rule;
    if (cfg.x0_mode == "uniform") {
      sc.x0 = uniform_state(cfg.game.layout);
    } else if (cfg.x0_mode == "random") {
      sc.x0 = random_interior_state(cfg.game.layout, rng);
    } else {
      sc.x0 = make_state(cfg.game.layout, *cfg.x0_values, 1e-9);
    }
    sc.horizon = cfg.horizon;
    sc.step = cfg.step;
    sc.record_stride = cfg.record_stride;
    sc.seed = cfg.seed;
    out.push_back(std::move(sc));
  }
  return out;
}

bool equivalent(const ScenarioConfig& a, const ScenarioConfig& b) {
  if (a.game_source != b.game_source || a.game.layout != b.game.layout) return false;
  if ((a.game.F - b.game.F).cwiseAbs().maxCoeff() > 0.0) return false;
  if ((a.game.b - b.game.b).cwiseAbs().maxCoeff() > 0.0) return false;
  if (a.pdm.index() != b.pdm.index()) return false;
  if (const auto* da = std::get_if<DelayedPayoff>(&a.pdm)) {
    const auto& db = std::get<DelayedPayoff>(b.pdm);
    if (da->delay != db.delay || da->delay_bound != db.delay_bound) return false;
  } else if (const auto* sa = std::get_if<SmoothingPayoff>(&a.pdm)) {
    const auto& sb = std::get<SmoothingPayoff>(b.pdm);
    if (sa->rate != sb.rate || sa->split_fraction != sb.split_fraction) return false;
  } else if (const auto* ma = std::get_if<MultiDelayPayoff>(&a.pdm)) {
    const auto& mb = std::get<MultiDelayPayoff>(b.pdm);
    if (ma->terms.size() != mb.terms.size()) return false;
    for (size_t i = 0; i < ma->terms.size(); ++i) {
      if (ma->terms[i].delay != mb.terms[i].delay) return false;
    }
  }
  if (a.protocol.kinds != b.protocol.kinds || a.protocol.eta != b.protocol.eta) return false;
  if ((a.protocol.theta.values - b.protocol.theta.values).cwiseAbs().maxCoeff() > 0.0) {
    return false;
  }
  if (a.update_rule.enabled != b.update_rule.enabled ||
      a.update_rule.distributed != b.update_rule.distributed ||
      a.update_rule.split_fraction != b.update_rule.split_fraction ||
      a.update_rule.delay_bound != b.update_rule.delay_bound) {
    return false;
  }
  return a.horizon == b.horizon && a.step == b.step && a.record_stride == b.record_stride &&
         a.runs == b.runs && a.seed == b.seed && a.x0_mode == b.x0_mode;
}

}  // namespace kldrl
