#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace kldrl {

// Exit codes: 0 success, 1 runtime/verification failure, 2 configuration or
// usage error. All output files are byte-deterministic for a fixed config.
int cmd_run(const std::string& config_path, const std::string& out_dir,
            std::optional<int> stride_override, std::ostream& diag);

int cmd_sweep(const std::string& config_path, const std::string& out_dir,
              const std::string& parameter, const std::vector<double>& values,
              std::optional<int> stride_override, std::ostream& diag);

// Built-in invariant suite; prints one line per named check with its measured
// slack and returns 0 iff every check passes.
int cmd_verify(std::ostream& out);

// Prints the equilibrium, the regularized equilibrium for the configured
// (eta, theta), and both residuals as JSON.
int cmd_nash(const std::string& config_path, std::ostream& out, std::ostream& diag);

}  // namespace kldrl
