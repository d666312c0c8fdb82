#pragma once

#include "kldrl/sim.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace kldrl {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Parsed scenario description from an INI-style key=value document with
// sections [game], [pdm], [protocol], [algorithm1], [sim], [output].
// Unknown sections or keys are rejected at load time.
struct ScenarioConfig {
  // Raw sections in file order, echoed verbatim into run summaries.
  std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> raw;

  AffineGame game;
  std::string game_source;  // builtin name or file path
  PdmKind pdm;
  RevisionProtocol protocol;
  UpdateRuleConfig update_rule;
  double horizon = 100.0;
  double step = 0.01;
  int record_stride = 1;
  int runs = 1;
  std::uint64_t seed = 1;
  std::string x0_mode = "uniform";  // uniform | random | explicit
  std::optional<Eigen::VectorXd> x0_values;
  std::string out_dir = "out";
};

ScenarioConfig load_config(const std::string& path);
ScenarioConfig parse_config_text(const std::string& text, const std::string& base_dir = ".");

// Expands the config into `runs` scenarios; random initial states are drawn
// sequentially from a generator seeded with the configured seed.
std::vector<Scenario> make_scenarios(const ScenarioConfig& cfg);

// Affine game from a JSON document {"layout":[...],"F":[[...]],"b":[...]};
// F is row-major, b optional (defaults to zero).
AffineGame load_game_file(const std::string& path);

bool equivalent(const ScenarioConfig& a, const ScenarioConfig& b);

}  // namespace kldrl
