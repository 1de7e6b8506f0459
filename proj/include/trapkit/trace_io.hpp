#ifndef TRAPKIT_TRACE_IO_HPP
#define TRAPKIT_TRACE_IO_HPP

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "trapkit/estimation.hpp"
#include "trapkit/trace.hpp"

namespace trapkit {

/// Malformed input; `line` is 1-based, 0 when not tied to a line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& message);
  std::size_t line;
};

/// Shortest-exact formatting with at most 17 significant digits, so that
/// parsing the text gives back the identical double.
std::string format_number(double value);

/// Trace CSV:
///
///   # kind=atom_number
///   # seed=42
///   time_s,value[,sigma]
///   0,0
///   0.05,1296.4
///
/// LF line endings, '.' decimal point, metadata as "# key=value" comments.
void write_trace_csv(std::ostream& os, const DataTrace& trace);
std::string trace_to_csv(const DataTrace& trace);
DataTrace read_trace_csv(std::istream& is, std::string_view source = "<stream>");
DataTrace read_trace_csv(const std::filesystem::path& path);

/// Photoionization grid CSV. Intensities in mW/cm^2, rates in 1/s:
///
///   rb_intensity_mW_cm2,ionizing_intensity_mW_cm2,gamma_tot_per_s[,gamma_tot_sigma_per_s]
std::vector<SigmaPRun> read_sigma_p_runs(std::istream& is, std::string_view source = "<stream>");
std::vector<SigmaPRun> read_sigma_p_runs(const std::filesystem::path& path);
std::string sigma_p_runs_to_csv(const std::vector<SigmaPRun>& runs);

/// Writes to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

}  // namespace trapkit

#endif  // TRAPKIT_TRACE_IO_HPP
