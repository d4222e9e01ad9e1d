#ifndef RCBO_CLI_HPP
#define RCBO_CLI_HPP

#include "rcbo/types.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rcbo::cli {

// Usage errors; all map to exit status 1.
struct UsageError : ConfigError {
    using ConfigError::ConfigError;
};
struct UnknownFlag : UsageError {
    using UsageError::UsageError;
};
struct MissingRequired : UsageError {
    using UsageError::UsageError;
};
struct ConflictingOptions : UsageError {
    using UsageError::UsageError;
};

inline constexpr int exit_ok = 0;
inline constexpr int exit_config = 1;
inline constexpr int exit_numerical = 2;

struct RunSpec {
    std::string subcommand; // optimize, bench, chaos, decay, langevin, invert
    std::optional<std::string> config_path;
    // Resolved settings under dotted keys (e.g. "domain.kind"); config-file
    // values first, command-line flags override.
    std::map<std::string, std::string> settings;
    std::string out_dir = ".";
    unsigned workers = 1;
    int verbosity = 0;
    bool help = false; // help was printed; nothing to execute
};

// Reads `key = value` lines; `#` starts a comment, surrounding quotes are
// stripped. Keys must be known dotted keys.
std::map<std::string, std::string> parse_config(std::istream& is, const std::string& origin = "config");

// argv[0] is the program name. Throws a UsageError subclass on bad input.
RunSpec parse_args(const std::vector<std::string>& argv, std::ostream* help_out = nullptr);

// Dispatches and writes reports into spec.out_dir. Results go to `out`,
// resolved configuration and progress to `log`.
int execute(const RunSpec& spec, std::ostream& out, std::ostream& log);

// parse_args + execute with error reporting; returns the exit status.
int main(int argc, char** argv);

} // namespace rcbo::cli

#endif // RCBO_CLI_HPP
