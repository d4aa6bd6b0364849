#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace spi::cli {

/// Exit codes of run().
inline constexpr int kOk = 0;
inline constexpr int kValidationError = 1;
inline constexpr int kNumericError = 2;

/// Parses "0.25", "1e-3" or "2^-5".
double parse_real(const std::string& text);
/// Comma-separated reals, or a dyadic range "2^-a..2^-b" (every power in between, inclusive).
std::vector<double> parse_real_list(const std::string& text);

/// Entry point of the spi executable; argv[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spi::cli
