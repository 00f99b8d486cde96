#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "quenchlab/config.hpp"

namespace quenchlab {

/// `git hash-object` of the bytes: SHA-1 over "blob <size>\0" + content.
std::string git_blob_hash(std::string_view content);

std::string config_hash(const RunConfig& config);

struct RunOptions {
    std::filesystem::path out_dir;
    unsigned workers = 1;
};

/// Subcommands: solve, linear-solve, certify, mc-fk, mc-plateau, mc-kernel,
/// sweep. Writes outputs plus manifest.txt into the out dir. Returns 0 on
/// success, 2 when a sweep point is undecided, 1 on error (message on stderr).
int run(const RunConfig& config, const std::string& subcommand, const RunOptions& options);

struct VerifyResult {
    bool ok = false;
    std::vector<std::string> problems;  ///< missing or altered files
};

VerifyResult verify_outputs(const std::filesystem::path& manifest);

}  // namespace quenchlab
