#include "trapkit/trace.hpp"

#include <cmath>
#include <stdexcept>

namespace trapkit {

std::string_view value_kind_name(ValueKind kind) {
  switch (kind) {
    case ValueKind::atom_number: return "atom_number";
    case ValueKind::temperature: return "temperature";
  }
  return "atom_number";
}

ValueKind parse_value_kind(std::string_view name) {
  if (name == "atom_number") return ValueKind::atom_number;
  if (name == "temperature") return ValueKind::temperature;
  throw std::invalid_argument("unknown value kind '" + std::string(name) + "'");
}

void DataTrace::validate() const {
  if (values.size() != times.size()) {
    throw std::invalid_argument("trace times and values differ in length");
  }
  if (!sigma.empty() && sigma.size() != times.size()) {
    throw std::invalid_argument("trace sigma length does not match times");
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times[i]) || !std::isfinite(values[i])) {
      throw std::invalid_argument("trace contains a non-finite entry at index " +
                                  std::to_string(i));
    }
    if (i > 0 && !(times[i] > times[i - 1])) {
      throw std::invalid_argument("trace times must be strictly increasing (index " +
                                  std::to_string(i) + ")");
    }
    if (!sigma.empty() && !(sigma[i] > 0.0)) {
      throw std::invalid_argument("trace sigma must be > 0 (index " + std::to_string(i) + ")");
    }
  }
}

}  // namespace trapkit
