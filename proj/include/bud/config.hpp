#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "bud/montecarlo.hpp"

namespace bud {

// Raised for schema violations; message carries the offending field path.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    DesignConfig design;
    int replications = 1;
    std::vector<std::int64_t> checkpoints;
    TestSpec test;
    std::vector<std::int64_t> power_t_grid;
    int power_simulate = 0;  // replicate count for MC power columns; 0 = asymptotic only
    std::size_t diagnose_draws = 1000000;
    double diagnose_fd_step = 1e-5;
    std::int64_t diagnose_path_n = 10000;
    int threads = 0;  // 0 = hardware concurrency
    std::string out_dir = "out";
};

RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& json_text);

// Single-replicate summaries and reports, serialized for the CLI.
std::string asymptotics_json(const RunConfig& cfg);
std::string summary_json(const RunConfig& cfg, const ReplicationSummary& rs);

// Atomic write: temp file in the target directory, then rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace bud
