#pragma once
// Pipeline orchestration: wires generate -> stats -> centrality ->
// simulate -> evaluate -> gbt, with CSV intermediates and a manifest of
// artifact checksums.
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlepi/config.hpp"

namespace mlepi {

struct MissingArtifactError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// exit codes of the CLI contract
enum ExitCode : int {
    exit_ok = 0,
    exit_config_error = 2,
    exit_missing_artifact = 3,
    exit_numerical_failure = 4,
};

struct RunOptions {
    std::string config_path;
    std::vector<std::string> overrides; // "section.key=value"
    uint64_t seed = 0;
    bool seed_set = false;
    uint32_t threads = 0;
    bool threads_set = false;
    std::string output_dir;
    bool output_set = false;
};

// Executes one subcommand (generate | stats | centrality | simulate |
// evaluate | gbt | all); returns the exit code and logs progress to `log`.
int run_pipeline(const std::string& subcommand, const RunOptions& opts,
                 std::ostream& log);

// FNV-1a over file bytes, used for the manifest
uint64_t file_checksum(const std::string& path);

} // namespace mlepi
