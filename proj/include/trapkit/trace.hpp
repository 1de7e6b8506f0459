#ifndef TRAPKIT_TRACE_HPP
#define TRAPKIT_TRACE_HPP

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace trapkit {

enum class ValueKind { atom_number, temperature };

std::string_view value_kind_name(ValueKind kind);
ValueKind parse_value_kind(std::string_view name);

/// Time series of an observed or synthesized scalar. Atom numbers are in
/// atoms, temperatures in kelvin.
struct DataTrace {
  std::vector<double> times;   // s, strictly increasing
  std::vector<double> values;
  ValueKind kind = ValueKind::atom_number;
  std::vector<double> sigma;   // per-point 1 sigma; empty when unknown
  std::map<std::string, std::string> metadata;

  std::size_t size() const { return times.size(); }
  bool has_sigma() const { return !sigma.empty(); }

  /// Throws std::invalid_argument when an invariant does not hold.
  void validate() const;
};

}  // namespace trapkit

#endif  // TRAPKIT_TRACE_HPP
