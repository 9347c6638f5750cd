#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace crlm::cli {

enum ExitCode : int { ok = 0, verify_mismatch = 1, input_error = 2, non_convergence = 3 };

// Parses argv and runs the selected subcommand. Never throws.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

// FNV-1a over the compact JSON dump (keys sorted), as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

}  // namespace crlm::cli
