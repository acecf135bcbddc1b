#pragma once

#include "grushin/config.hpp"
#include "grushin/io.hpp"

#include <optional>
#include <string>
#include <vector>

namespace grushin {

/// Command-line overrides; each one is folded into the config before hashing.
struct Overrides {
    std::optional<std::string> field; // replaces [field] by this kind with default parameters
    std::vector<double> t;
    std::optional<int> tau;
    std::optional<double> clusterTol;
};

void apply_overrides(ConfigTree& tree, const Overrides& o);

/// Report body for one command; the caller adds the header fields.
struct CommandOutput {
    std::string identity;
    Json body;
    std::vector<std::string> warnings;
    Json metadata = Json::object(); // non-deterministic extras (timings)
    bool failed = false; // suite: some criterion failed
};

/// Runs a command other than `suite` and writes its data files into cfg.outDir.
CommandOutput run_command(const std::string& command, const RunConfig& cfg);

CommandOutput run_suite(bool quiet);

/// Entry point of the grushin executable. Exit codes: 0 ok, 1 runtime
/// error or failed suite, 2 config error.
int cli_main(int argc, char** argv);

} // namespace grushin
