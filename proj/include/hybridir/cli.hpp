#pragma once

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace hybridir {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kDefaultsVersion = "hybridir-defaults-1";

/// Exit statuses of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitEmpty = 1;
inline constexpr int kExitUsage = 2;

/// Every tunable with its default value, keyed as in config files.
nlohmann::json defaults_table();

/// Runs the tool with `args` (args[0] is the program name). A config file
/// named by --config or, failing that, the HYBRIDIR_CONFIG environment
/// variable overrides the defaults; flags override both.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hybridir
