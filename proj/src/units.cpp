#include "trapkit/units.hpp"

#include <charconv>
#include <cmath>

namespace trapkit {

namespace {

const std::vector<UnitInfo> kUnits = {
    {"1", Dimension::dimensionless, 1.0},
    {"atoms", Dimension::count, 1.0},
    {"s", Dimension::time, 1.0},
    {"ms", Dimension::time, 1e-3},
    {"1/s", Dimension::rate, 1.0},
    {"atoms/s", Dimension::rate, 1.0},
    {"rad/s", Dimension::angular_frequency, 1.0},
    {"Hz", Dimension::frequency, 1.0},
    {"kHz", Dimension::frequency, 1e3},
    {"MHz", Dimension::frequency, 1e6},
    {"m", Dimension::length, 1.0},
    {"cm", Dimension::length, 1e-2},
    {"mm", Dimension::length, 1e-3},
    {"um", Dimension::length, 1e-6},
    {"nm", Dimension::length, 1e-9},
    {"m^2", Dimension::area, 1.0},
    {"cm^2", Dimension::area, 1e-4},
    {"m^3", Dimension::volume, 1.0},
    {"cm^3", Dimension::volume, 1e-6},
    {"1/m^3", Dimension::inverse_volume, 1.0},
    {"1/cm^3", Dimension::inverse_volume, 1e6},
    {"m^3/s", Dimension::loss_coefficient, 1.0},
    {"cm^3/s", Dimension::loss_coefficient, 1e-6},
    {"W/m^2", Dimension::intensity, 1.0},
    {"mW/cm^2", Dimension::intensity, 10.0},
    {"T", Dimension::field, 1.0},
    {"G", Dimension::field, 1e-4},
    {"T/m", Dimension::field_gradient, 1.0},
    {"G/cm", Dimension::field_gradient, 1e-2},
    {"K", Dimension::temperature, 1.0},
    {"mK", Dimension::temperature, 1e-3},
    {"uK", Dimension::temperature, 1e-6},
    {"J", Dimension::energy, 1.0},
    {"eV", Dimension::energy, constants::electron_volt},
    {"kg", Dimension::mass, 1.0},
    {"u", Dimension::mass, constants::atomic_mass_unit},
    {"m/s", Dimension::velocity, 1.0},
    {"J/T", Dimension::magnetic_moment, 1.0},
    {"mu_B", Dimension::magnetic_moment, constants::bohr_magneton},
};

// Aliases accepted on input; never produced on output.
struct Alias {
  std::string_view alias;
  std::string_view canonical;
};

const Alias kAliases[] = {
    {"\xC2\xB5K", "uK"},   // µK
    {"\xC2\xB5m", "um"},   // µm
    {"s^-1", "1/s"},
    {"m^-3", "1/m^3"},
    {"count", "atoms"},
};

}  // namespace

std::string_view dimension_name(Dimension d) {
  switch (d) {
    case Dimension::dimensionless: return "dimensionless";
    case Dimension::count: return "count";
    case Dimension::time: return "time";
    case Dimension::rate: return "rate";
    case Dimension::angular_frequency: return "angular frequency";
    case Dimension::frequency: return "frequency";
    case Dimension::length: return "length";
    case Dimension::area: return "area";
    case Dimension::volume: return "volume";
    case Dimension::inverse_volume: return "inverse volume";
    case Dimension::loss_coefficient: return "loss coefficient";
    case Dimension::intensity: return "intensity";
    case Dimension::field: return "magnetic field";
    case Dimension::field_gradient: return "field gradient";
    case Dimension::temperature: return "temperature";
    case Dimension::energy: return "energy";
    case Dimension::mass: return "mass";
    case Dimension::velocity: return "velocity";
    case Dimension::magnetic_moment: return "magnetic moment";
  }
  return "unknown";
}

const std::vector<UnitInfo>& unit_registry() { return kUnits; }

const UnitInfo& lookup_unit(std::string_view symbol) {
  for (const auto& a : kAliases) {
    if (a.alias == symbol) {
      symbol = a.canonical;
      break;
    }
  }
  for (const auto& u : kUnits) {
    if (u.symbol == symbol) return u;
  }
  throw UnitError("unknown unit '" + std::string(symbol) + "'");
}

Quantity Quantity::from(double magnitude, std::string_view unit) {
  if (!std::isfinite(magnitude)) throw UnitError("non-finite magnitude");
  const UnitInfo& u = lookup_unit(unit);
  return {magnitude * u.scale, u.dimension};
}

double Quantity::in(std::string_view unit) const {
  const UnitInfo& u = lookup_unit(unit);
  if (u.dimension != dim_) {
    throw UnitError("cannot express " + std::string(dimension_name(dim_)) + " in '" +
                    std::string(unit) + "'");
  }
  return si_ / u.scale;
}

Quantity Quantity::operator+(const Quantity& other) const {
  if (other.dim_ != dim_) {
    throw UnitError("cannot add " + std::string(dimension_name(other.dim_)) + " to " +
                    std::string(dimension_name(dim_)));
  }
  return {si_ + other.si_, dim_};
}

Quantity Quantity::operator-(const Quantity& other) const {
  if (other.dim_ != dim_) {
    throw UnitError("cannot subtract " + std::string(dimension_name(other.dim_)) + " from " +
                    std::string(dimension_name(dim_)));
  }
  return {si_ - other.si_, dim_};
}

Quantity parse_quantity(std::string_view text) {
  auto trim = [](std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
  };
  text = trim(text);
  double magnitude = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), magnitude);
  if (ec != std::errc()) {
    throw UnitError("expected '<number> <unit>', got '" + std::string(text) + "'");
  }
  std::string_view unit = trim(text.substr(static_cast<std::size_t>(ptr - text.data())));
  if (unit.empty()) {
    throw UnitError("missing unit in '" + std::string(text) + "'");
  }
  return Quantity::from(magnitude, unit);
}

double intensity_to_si(double milliwatt_per_cm2) {
  if (!(milliwatt_per_cm2 >= 0.0)) throw std::domain_error("intensity must be >= 0");
  return milliwatt_per_cm2 * 10.0;
}

double gradient_to_si(double gauss_per_cm) {
  if (!std::isfinite(gauss_per_cm)) throw std::domain_error("gradient must be finite");
  return gauss_per_cm * 1e-2;
}

double photon_energy(double wavelength_m) {
  if (!(wavelength_m > 0.0) || !std::isfinite(wavelength_m)) {
    throw std::domain_error("wavelength must be positive");
  }
  return constants::planck_h * constants::speed_of_light / wavelength_m;
}

}  // namespace trapkit
