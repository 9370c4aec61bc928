#pragma once

// Command-line front end: generate, train, eval, ablate, inspect.
//
// Every command resolves its settings from built-in defaults, then an
// optional key=value config file (--config), then explicit flags. The
// resolved settings are embedded in every artifact the command writes.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "ltc/error.hpp"

namespace ltc {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitInternal = 3 };

class UsageError : public Error {
 public:
  using Error::Error;
};

// Flat key=value settings; `#` starts a comment.
using RunConfig = std::map<std::string, std::string>;

RunConfig parse_run_config(std::istream& in);
RunConfig load_run_config(const std::filesystem::path& path);
std::string format_run_config(const RunConfig& config);

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

// Writes `bytes` to `path` through a temporary file and a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace ltc
