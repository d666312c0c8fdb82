#include "kldrl/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

std::optional<std::vector<double>> parse_values(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto begin = item.find_first_not_of(" \t");
    if (begin == std::string::npos) continue;
    const auto end = item.find_last_not_of(" \t");
    try {
      size_t used = 0;
      out.push_back(std::stod(item.substr(begin, end - begin + 1), &used));
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Population-game learning dynamics with delayed payoffs"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir;
  int stride = 0;
  std::string param;
  std::string values_csv;

  auto* run = app.add_subcommand("run", "Integrate one configured scenario");
  run->add_option("--config", config, "Scenario config file")->required();
  run->add_option("--out", out_dir, "Output directory (default from config)");
  run->add_option("--stride", stride, "Record every N-th step");

  auto* sweep = app.add_subcommand("sweep", "Run one scenario across parameter values");
  sweep->add_option("--config", config, "Scenario config file")->required();
  sweep->add_option("--param", param, "protocol.eta, pdm.d, or pdm.lambda")->required();
  sweep->add_option("--values", values_csv, "Comma-separated values")->required();
  sweep->add_option("--out", out_dir, "Output directory (default from config)");
  sweep->add_option("--stride", stride, "Record every N-th step");

  auto* verify = app.add_subcommand("verify", "Run the built-in invariant suite");

  auto* nash = app.add_subcommand("nash", "Print equilibrium and regularized equilibrium");
  nash->add_option("--config", config, "Scenario config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const std::optional<int> stride_opt =
      stride > 0 ? std::optional<int>(stride) : std::nullopt;

  if (run->parsed()) {
    return kldrl::cmd_run(config, out_dir, stride_opt, std::cerr);
  }
  if (sweep->parsed()) {
    auto values = parse_values(values_csv);
    if (!values.has_value()) {
      std::cerr << "could not parse --values\n";
      return 2;
    }
    return kldrl::cmd_sweep(config, out_dir, param, *values, stride_opt, std::cerr);
  }
  if (verify->parsed()) {
    return kldrl::cmd_verify(std::cout);
  }
  return kldrl::cmd_nash(config, std::cout, std::cerr);
}
