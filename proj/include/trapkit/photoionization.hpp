#ifndef TRAPKIT_PHOTOIONIZATION_HPP
#define TRAPKIT_PHOTOIONIZATION_HPP

#include "trapkit/units.hpp"

namespace trapkit {

/// Constants of the cooling transition whose upper state gets ionized.
struct TransitionSpec {
  double natural_linewidth;          // Gamma, rad/s
  double saturation_intensity;       // W/m^2
  double clebsch_gordan_sq;          // <C>^2, in (0, 1]
  double transition_wavelength;      // m
  double excited_ionization_energy;  // J, from the excited state to the continuum

  /// Rb D2 line: Gamma/2pi = 6.07 MHz, I_s = 1.6 mW/cm^2, <C>^2 = 7/15,
  /// 5P ionization energy 2.6 eV.
  static TransitionSpec rb87_d2();

  void validate() const;
};

/// Total (all-beam) intensity and detuning of the light driving a
/// transition. The detuning enters squared; store the red-detuning
/// magnitude.
struct LightField {
  double intensity;   // W/m^2
  double detuning;    // rad/s
  double wavelength;  // m

  void validate() const;
};

struct IonizationChannel {
  double cross_section;        // sigma_p, m^2
  double ionizing_wavelength;  // m
};

struct IonizationRate {
  double rate = 0.0;  // 1/s
  bool below_threshold = false;
};

double saturation_parameter(const LightField& field, const TransitionSpec& spec);

/// Steady-state excited population s / (2 (s + 1)).
double excited_fraction(double s);

/// Photon flux I / (hbar omega) in photons / (m^2 s).
double photon_flux(double intensity, double wavelength);

/// sigma_p * flux, or zero with `below_threshold` set when the photon cannot
/// reach the continuum from the excited state.
IonizationRate ionization_rate(const IonizationChannel& channel, double flux,
                               const TransitionSpec& spec);

/// Loss rate of trapped atoms: ionization rate weighted by the time spent
/// in the excited state.
double ionization_loss_rate(double ionization_rate, double excited_fraction);

/// Full chain: MOT light + ionizing light -> gamma_p.
double photoionization_loss_rate(const LightField& mot_light, const TransitionSpec& spec,
                                 const IonizationChannel& channel, double ionizing_intensity);

/// Photoelectron speed after ionization of an atom at rest. Momentum
/// conservation leaves the electron a fraction m_ion / (m_ion + m_e) of the
/// excess energy.
double photoelectron_velocity(double ionizing_wavelength, double ionization_energy,
                              double ion_mass);

/// Kinetic energy carried by the ion for the same event.
double photoion_kinetic_energy(double ionizing_wavelength, double ionization_energy,
                               double ion_mass);

/// Steady-state atom-number suppression (gamma_bg + gamma_p) / gamma_bg.
double mot_suppression_factor(double gamma_background, double gamma_p);

}  // namespace trapkit

#endif  // TRAPKIT_PHOTOIONIZATION_HPP
