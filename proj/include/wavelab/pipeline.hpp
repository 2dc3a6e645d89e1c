#pragma once

#include "wavelab/config.hpp"

namespace wavelab {

/// Executes one pipeline command (check-weight, solve-forward, verify-carleman,
/// verify-ibp, verify-energy, stability-sweep, reconstruct, all). Writes
/// <out_dir>/<command>.json plus the CSV tables the plots consume; every
/// report carries the config hash. Returns 0 iff all asserted invariants
/// passed.
int run_command(const std::string& command, const RunConfig& cfg, const std::string& out_dir);

/// argv-level entry point shared by the binary and the tests.
/// Usage: wavelab_cli <command> --config <path> [--out <dir>] [--seed <u64>].
/// Exit codes: 0 pass, 1 invariant failure, 2 config/parse error,
/// 3 infeasible parameters, 4 internal error.
int cli_main(const std::vector<std::string>& args);

}  // namespace wavelab
