#ifndef TRAPKIT_OVERLAP_GEOMETRY_HPP
#define TRAPKIT_OVERLAP_GEOMETRY_HPP

namespace trapkit {

/// exp(y^2) * erfc(y), evaluated without forming either factor separately
/// for large y.
double erfcx(double y);

/// Magnetically trapped cloud in a linear quadrupole.
struct MtCloud {
  double one_over_e_length;  // z, m
  double atom_number;
  double temperature;        // K
  double magnetic_moment;    // J/T
  double axial_gradient;     // T/m

  void validate() const;
};

/// MOT cloud, isotropic Gaussian with 1/sqrt(e) radius sigma_bar.
struct MotCloud {
  double mean_size;  // sigma_bar, m
  double atom_number;
  double temperature;  // K

  void validate() const;
};

/// Ratio sigma_bar / z above which the asymptotic expansion replaces the
/// closed form.
inline constexpr double kVarsigmaAsymptoticThreshold = 25.0;

struct VarsigmaEvaluation {
  double value;
  bool asymptotic;
};

/// Overlap reduction factor between a Gaussian MOT cloud of 1/sqrt(e) size
/// sigma_bar and an exponential MT cloud of 1/e length z:
///
///   e^{x^2/2} (x^2 + 1) erfc(x / sqrt 2) - sqrt(2/pi) x,   x = sigma_bar / z
///
/// For x > 25 a 12-term asymptotic series in 1/x is used instead.
VarsigmaEvaluation evaluate_varsigma(double sigma_bar, double z);

double varsigma(double sigma_bar, double z);

/// Leading asymptotic term 2 sqrt(2/pi) x^-3 of varsigma.
double varsigma_leading_term(double ratio);

/// The asymptotic series on its own, for any ratio > 0.
double varsigma_asymptotic(double ratio);

/// 8 pi z^3.
double mt_volume(double z);

/// V_MT / varsigma.
double effective_volume(double sigma_bar, double z);
double effective_volume(const MotCloud& mot, const MtCloud& mt);

/// N_Cr N_Rb / V_bar, the density-overlap integral.
double overlap_density_factor(double n_cr, double n_rb, double effective_volume);

/// mu B' r along the coil axis.
double magnetic_potential(double moment, double gradient, double r);

}  // namespace trapkit

#endif  // TRAPKIT_OVERLAP_GEOMETRY_HPP
