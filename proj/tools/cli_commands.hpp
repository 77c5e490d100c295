#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gcf_cli {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kVersion = "0.1.0";

// Parses and executes one command line (without the program name).
// Exit codes: 0 success, 2 validation/usage error, 3 solver failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace gcf_cli
