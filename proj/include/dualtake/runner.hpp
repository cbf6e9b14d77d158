#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "dualtake/config.hpp"

namespace dualtake::runner {

enum ExitCode {
    kOk = 0,
    kConfigError = 2,
    kMissingArtifact = 3,
    kRuntimeFailure = 4,
};

struct MissingArtifact : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunOptions {
    std::filesystem::path out_dir;
    bool overwrite = false;
    std::optional<std::uint64_t> seed_override;  // replaces cohort.master_seed
};

// Individual stages; each throws on failure and removes partial outputs.
void cmd_generate(const config::RunConfig& cfg, const RunOptions& opt);
void cmd_extract(const config::RunConfig& cfg, const RunOptions& opt);
void cmd_train(const config::RunConfig& cfg, const RunOptions& opt);
void cmd_evaluate(const config::RunConfig& cfg, const RunOptions& opt);
void cmd_report(const config::RunConfig& cfg, const RunOptions& opt);
void cmd_manifest(const config::RunConfig& cfg, const RunOptions& opt);

// Parses the config file, takes the output-dir lock, dispatches, and maps
// failures onto exit codes.
int run_command(const std::string& command, const std::string& config_path,
                const RunOptions& opt);

}  // namespace dualtake::runner
