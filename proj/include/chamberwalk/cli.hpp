#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace chamberwalk::cli {

inline constexpr const char* kSchema = "chamberwalk/1";

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitSchema = 2;
inline constexpr int kExitSizeGuard = 3;

/// Runs one batch command. `args` excludes the program name. Reports go to
/// `out` unless an output directory is configured; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

}  // namespace chamberwalk::cli
