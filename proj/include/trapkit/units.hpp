#ifndef TRAPKIT_UNITS_HPP
#define TRAPKIT_UNITS_HPP

#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace trapkit {

/// Physical constants in SI (CODATA 2018).
namespace constants {

inline constexpr double pi = std::numbers::pi;

inline constexpr double boltzmann_k = 1.380649e-23;           // J/K
inline constexpr double planck_h = 6.62607015e-34;            // J s
inline constexpr double hbar = planck_h / (2.0 * pi);         // J s
inline constexpr double bohr_magneton = 9.2740100783e-24;     // J/T
inline constexpr double electron_mass = 9.1093837015e-31;     // kg
inline constexpr double atomic_mass_unit = 1.66053906660e-27; // kg
inline constexpr double speed_of_light = 299792458.0;         // m/s
inline constexpr double electron_volt = 1.602176634e-19;      // J

// Isotope masses.
inline constexpr double mass_rb87 = 86.909180527 * atomic_mass_unit;
inline constexpr double mass_cr52 = 51.9405075 * atomic_mass_unit;

}  // namespace constants

class UnitError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The physical dimensions the toolkit handles. Not a general
/// dimensional-analysis engine.
enum class Dimension {
  dimensionless,
  count,
  time,
  rate,             // 1/s, also atoms/s
  angular_frequency,
  frequency,
  length,
  area,
  volume,
  inverse_volume,
  loss_coefficient, // m^3/s
  intensity,
  field,
  field_gradient,
  temperature,
  energy,
  mass,
  velocity,
  magnetic_moment,
};

std::string_view dimension_name(Dimension d);

/// A registered unit: SI value = magnitude * scale.
struct UnitInfo {
  std::string_view symbol;
  Dimension dimension;
  double scale;
};

/// Looks up a unit symbol ("mW/cm^2", "uK", "G/cm", ...). Throws UnitError
/// for unknown symbols.
const UnitInfo& lookup_unit(std::string_view symbol);

/// All registered units, in registration order.
const std::vector<UnitInfo>& unit_registry();

/// A value held in SI together with its dimension tag.
class Quantity {
 public:
  Quantity(double si_value, Dimension dim) : si_(si_value), dim_(dim) {}

  static Quantity from(double magnitude, std::string_view unit);

  double si() const { return si_; }
  Dimension dimension() const { return dim_; }

  /// Magnitude expressed in `unit`; the unit must share this dimension.
  double in(std::string_view unit) const;

  Quantity operator+(const Quantity& other) const;
  Quantity operator-(const Quantity& other) const;
  Quantity operator*(double k) const { return {si_ * k, dim_}; }
  Quantity operator/(double k) const { return {si_ / k, dim_}; }

 private:
  double si_;
  Dimension dim_;
};

/// Parses "<number> <unit>" such as "1 mm" or "0.11 1/s". A bare number
/// is rejected; every physical input carries its unit.
Quantity parse_quantity(std::string_view text);

/// Converts mW/cm^2 to W/m^2.
double intensity_to_si(double milliwatt_per_cm2);

/// Converts G/cm to T/m.
double gradient_to_si(double gauss_per_cm);

/// h c / lambda.
double photon_energy(double wavelength_m);

}  // namespace trapkit

#endif  // TRAPKIT_UNITS_HPP
