#ifndef TRAPKIT_CLI_HPP
#define TRAPKIT_CLI_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace trapkit::cli {

inline constexpr std::string_view kToolkitVersion = "0.1.0";

/// Exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // input, schema, I/O or numerical errors
inline constexpr int kExitUsage = 2;    // bad command line

/// Runs one command. `args` excludes the program name. Reports go to `out`
/// unless --out names a file; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Independent noise stream for `stream` derived from a run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

}  // namespace trapkit::cli

#endif  // TRAPKIT_CLI_HPP
