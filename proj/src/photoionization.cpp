#include "trapkit/photoionization.hpp"

#include <cmath>
#include <stdexcept>

namespace trapkit {

TransitionSpec TransitionSpec::rb87_d2() {
  return TransitionSpec{
      .natural_linewidth = 2.0 * constants::pi * 6.07e6,
      .saturation_intensity = intensity_to_si(1.6),
      .clebsch_gordan_sq = 7.0 / 15.0,
      .transition_wavelength = 780.241e-9,
      .excited_ionization_energy = 2.6 * constants::electron_volt,
  };
}

void TransitionSpec::validate() const {
  if (!(natural_linewidth > 0.0)) throw std::invalid_argument("linewidth must be > 0");
  if (!(saturation_intensity > 0.0)) {
    throw std::invalid_argument("saturation intensity must be > 0");
  }
  if (!(clebsch_gordan_sq > 0.0 && clebsch_gordan_sq <= 1.0)) {
    throw std::invalid_argument("Clebsch-Gordan weight must lie in (0, 1]");
  }
  if (!(transition_wavelength > 0.0)) {
    throw std::invalid_argument("transition wavelength must be > 0");
  }
  if (!(excited_ionization_energy > 0.0)) {
    throw std::invalid_argument("ionization energy must be > 0");
  }
}

void LightField::validate() const {
  if (!(intensity >= 0.0) || !std::isfinite(intensity)) {
    throw std::invalid_argument("intensity must be >= 0");
  }
  if (!std::isfinite(detuning)) throw std::invalid_argument("detuning must be finite");
  if (!(wavelength > 0.0)) throw std::invalid_argument("wavelength must be > 0");
}

double saturation_parameter(const LightField& field, const TransitionSpec& spec) {
  field.validate();
  spec.validate();
  const double d = 2.0 * field.detuning / spec.natural_linewidth;
  return spec.clebsch_gordan_sq * (field.intensity / spec.saturation_intensity) / (1.0 + d * d);
}

double excited_fraction(double s) {
  if (!(s >= 0.0) || std::isinf(s)) {
    throw std::domain_error("saturation parameter must be finite and >= 0");
  }
  return s / (2.0 * (s + 1.0));
}

double photon_flux(double intensity, double wavelength) {
  if (!(intensity >= 0.0)) throw std::domain_error("intensity must be >= 0");
  return intensity / photon_energy(wavelength);
}

IonizationRate ionization_rate(const IonizationChannel& channel, double flux,
                               const TransitionSpec& spec) {
  if (!(channel.cross_section >= 0.0)) throw std::domain_error("cross section must be >= 0");
  if (!(flux >= 0.0)) throw std::domain_error("photon flux must be >= 0");
  if (photon_energy(channel.ionizing_wavelength) <= spec.excited_ionization_energy) {
    return {0.0, true};
  }
  return {channel.cross_section * flux, false};
}

double ionization_loss_rate(double ionization_rate, double excited_fraction) {
  if (!(ionization_rate >= 0.0)) throw std::domain_error("ionization rate must be >= 0");
  if (!(excited_fraction >= 0.0 && excited_fraction < 0.5)) {
    throw std::domain_error("excited fraction must lie in [0, 1/2)");
  }
  return ionization_rate * excited_fraction;
}

double photoionization_loss_rate(const LightField& mot_light, const TransitionSpec& spec,
                                 const IonizationChannel& channel, double ionizing_intensity) {
  const double rho = excited_fraction(saturation_parameter(mot_light, spec));
  const double flux = photon_flux(ionizing_intensity, channel.ionizing_wavelength);
  return ionization_loss_rate(ionization_rate(channel, flux, spec).rate, rho);
}

namespace {

double excess_energy(double ionizing_wavelength, double ionization_energy, double ion_mass) {
  if (!(ion_mass > 0.0)) throw std::domain_error("ion mass must be > 0");
  if (!(ionization_energy > 0.0)) throw std::domain_error("ionization energy must be > 0");
  const double excess = photon_energy(ionizing_wavelength) - ionization_energy;
  if (!(excess > 0.0)) {
    throw std::domain_error("photon energy does not exceed the ionization energy");
  }
  return excess;
}

}  // namespace

double photoelectron_velocity(double ionizing_wavelength, double ionization_energy,
                              double ion_mass) {
  const double excess = excess_energy(ionizing_wavelength, ionization_energy, ion_mass);
  const double me = constants::electron_mass;
  const double fraction = std::isinf(ion_mass) ? 1.0 : ion_mass / (ion_mass + me);
  return std::sqrt(2.0 * excess * fraction / me);
}

double photoion_kinetic_energy(double ionizing_wavelength, double ionization_energy,
                               double ion_mass) {
  const double excess = excess_energy(ionizing_wavelength, ionization_energy, ion_mass);
  if (std::isinf(ion_mass)) return 0.0;
  const double me = constants::electron_mass;
  return excess * me / (ion_mass + me);
}

double mot_suppression_factor(double gamma_background, double gamma_p) {
  if (!(gamma_background > 0.0)) throw std::domain_error("background rate must be > 0");
  if (!(gamma_p >= 0.0)) throw std::domain_error("ionization loss rate must be >= 0");
  return (gamma_background + gamma_p) / gamma_background;
}

}  // namespace trapkit
