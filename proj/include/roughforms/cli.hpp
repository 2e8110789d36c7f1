#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace roughforms::cli {

enum ExitCode { kOk = 0, kInternal = 1, kValidation = 2, kNumerical = 3, kAssertFailed = 4 };

struct RunOptions {
    std::optional<std::uint64_t> seed;  // replaces every "seed" field of the config
    int threads = 1;
    bool assert_mode = false;
    /// Artifacts go here when set; relative file references resolve against base_dir.
    std::optional<std::string> out_dir;
    std::string base_dir = ".";
};

struct RunResult {
    int exit_code = kOk;
    std::string result_json;                              // empty on error
    std::vector<std::pair<std::string, std::string>> csv;  // file name, contents
    std::string error_json;                               // empty on success
    std::optional<bool> pass;
    double seconds = 0;
};

const std::vector<std::string>& commands();
std::string version();

/// Validates the config, runs the command and, with an output directory, writes result.json,
/// the CSV tables and meta.json there.
RunResult run(const std::string& command, const std::string& config_text, const RunOptions& opts = {});

/// Numeric log level from ROUGHFORMS_LOG (error, warn, info, debug); warn by default.
int log_level();
void log(int level, const std::string& message);

}  // namespace roughforms::cli
