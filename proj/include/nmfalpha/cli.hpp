#ifndef NMFALPHA_CLI_HPP_
#define NMFALPHA_CLI_HPP_

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace nmfa::cli {

enum ExitCode : int { kSuccess = 0, kDataError = 1, kUsageError = 2 };

/// Subcommands: factorize, semi, embed, svm-train, predict, eval, sweep,
/// verify. Errors go to `err`; exit codes per ExitCode. NMFALPHA_THREADS
/// caps the worker count.
int cli_main(int argc, char** argv);
/// Same, arguments without the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct CheckResult {
  std::string name;
  std::size_t instances = 0;
  bool passed = true;
  /// First failure, empty on success.
  std::string detail;
};

/// Seeded random instances through the semi-supervised update checks:
/// loss monotonicity, the lambda = 0 reduction, the closed-form V step and
/// the auxiliary bound sandwich.
std::vector<CheckResult> self_checks(std::uint64_t seed, std::size_t instances);

}  // namespace nmfa::cli

#endif  // NMFALPHA_CLI_HPP_
