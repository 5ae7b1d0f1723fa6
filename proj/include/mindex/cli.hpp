#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mindex/config.hpp"

namespace mindex {

inline constexpr int kSchemaVersion = 1;

/// Subcommands accepted by dispatch, in usage order.
const std::vector<std::string>& subcommands();

/// {schema_version, effective_config, seed, config_hash, results}.
Json report_envelope(const RunConfig& cfg, Json results);

/// Runs one subcommand and writes its artifacts under cfg "output_dir".
/// Returns 0 on success; errors are reported on `err` with a nonzero status.
int dispatch(const std::string& subcommand, const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Full command line: parses flags, builds the RunConfig and dispatches.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mindex
