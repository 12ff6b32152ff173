#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace funcdet::cli {

enum ExitCode : int {
  kOk = 0,
  kValidationError = 1,
  kComputationError = 2,
  kVerifyFail = 3,
};

/// 64-bit FNV-1a of the raw bytes.
std::uint64_t fnv1a(std::string_view bytes);

/// Runs one command. `args` excludes the program name. The report goes to
/// `out`; warnings and timing go to `err`. Returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace funcdet::cli
