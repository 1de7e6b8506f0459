#ifndef TRAPKIT_ESTIMATION_HPP
#define TRAPKIT_ESTIMATION_HPP

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "trapkit/photoionization.hpp"
#include "trapkit/trace.hpp"

namespace trapkit {

/// Relative systematic errors quoted with the measured values. Carried as
/// metadata, never folded into the statistical covariance.
inline constexpr double kSigmaPRelativeSystematic = 0.2;
inline constexpr double kBetaRelativeSystematic = 0.8;

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FitParameter {
  std::string name;
  double value = 0.0;
  double sigma = 0.0;  // 1 sigma, statistical
  std::string unit;
};

struct FitResult {
  std::vector<FitParameter> parameters;
  double residual_rms = 0.0;
  int dof = 0;
  bool converged = false;
  int iterations = 0;
  std::vector<std::string> flags;
  std::map<std::string, double> metadata;

  const FitParameter& at(std::string_view name) const;
  double value(std::string_view name) const { return at(name).value; }
  double sigma(std::string_view name) const { return at(name).sigma; }
  bool has_flag(std::string_view flag) const;
  /// Values of a non-converged fit are not to be trusted.
  bool authoritative() const { return converged; }
};

/// A scalar with the reason it looks suspicious, if any.
struct FlaggedValue {
  double value = 0.0;
  std::vector<std::string> flags;

  bool flagged() const { return !flags.empty(); }
};

struct LoadingFitOptions {
  /// Atom number at the first sample. Held fixed unless
  /// `fit_initial_number` is set.
  double initial_number = 0.0;
  bool fit_initial_number = false;
  int max_iterations = 200;
};

/// Fits N(t) = (L/gamma)(1 - e^{-gamma t}) + N0 e^{-gamma t} (t measured
/// from the first sample). Parameters: loading_rate, gamma, steady_state
/// (= L / gamma, propagated), lifetime, and initial_number when fitted.
FitResult fit_loading(const DataTrace& trace, const LoadingFitOptions& options = {});

/// Fits N(t) = N0 e^{-gamma t}. Parameters: gamma, initial_number, lifetime.
FitResult fit_decay(const DataTrace& trace, int max_iterations = 200);

/// Weighted straight line T(t) = T0 + rate t. Parameters: rate (K/s),
/// initial_temperature (K).
FitResult fit_heating_rate(const DataTrace& trace);

/// Difference of two fitted heating rates with uncertainties added in
/// quadrature.
FitParameter heating_rate_excess(const FitResult& with_partner, const FitResult& without);

/// gamma_tot - gamma_bg; negative results are kept and flagged.
FlaggedValue extract_gamma_p(double gamma_total, double gamma_background);

/// One loading-rate measurement of the photoionization grid.
struct SigmaPRun {
  double rb_intensity = 0.0;        // W/m^2, total MOT intensity
  double ionizing_intensity = 0.0;  // W/m^2
  double gamma_total = 0.0;         // 1/s
  double gamma_total_sigma = 0.0;   // 1/s, 0 when unknown

  void validate() const;
};

/// Light and transition parameters shared by all runs.
struct SigmaPSetup {
  TransitionSpec transition = TransitionSpec::rb87_d2();
  double detuning = 2.25 * TransitionSpec::rb87_d2().natural_linewidth;  // rad/s
  double ionizing_wavelength = 426e-9;                                    // m
};

/// Background loss rate without ionizing light, either one pooled value or
/// one value per MOT intensity.
struct BackgroundRates {
  std::map<double, double> per_group;  // rb_intensity -> gamma_bg
  double pooled = 0.0;
  bool use_pooled = true;

  double for_group(double rb_intensity) const;

  static BackgroundRates constant(double gamma_bg);
  /// From the runs without ionizing light. The pooled value is their mean.
  static BackgroundRates from_runs(const std::vector<SigmaPRun>& runs, bool pooled);
};

struct SigmaPGroup {
  double rb_intensity = 0.0;
  double excited_fraction = 0.0;
  std::size_t points = 0;
  double cross_section = 0.0;  // m^2, slope through the origin
  double cross_section_sigma = 0.0;
  int dof = 0;
  /// Diagnostic fit with a free intercept (rate = intercept + slope * flux).
  double free_slope = 0.0;
  double free_intercept = 0.0;       // 1/s
  double free_intercept_sigma = 0.0;
  bool has_free_fit = false;
};

struct SigmaPResult {
  FitResult pooled;  // parameter "cross_section"
  std::vector<SigmaPGroup> groups;
  std::vector<std::string> warnings;
};

struct SigmaPOptions {
  bool free_intercept_diagnostic = false;
};

/// Per MOT intensity: ionization rate gamma_p / rho_ee against photon flux,
/// fitted through the origin by weighted least squares. The pooled value is
/// the mean over groups, with the spread between groups as uncertainty.
SigmaPResult extract_sigma_p(const std::vector<SigmaPRun>& runs,
                             const BackgroundRates& background, const SigmaPSetup& setup,
                             const SigmaPOptions& options = {});

struct DetuningSweep {
  double detuning_low;
  double detuning_high;
  double cross_section_low;
  double cross_section_center;
  double cross_section_high;
};

/// Re-extracts sigma_p with the detuning moved by +-half_width, the
/// dominant systematic of the excited-fraction model.
DetuningSweep sigma_p_detuning_sweep(const std::vector<SigmaPRun>& runs,
                                     const BackgroundRates& background,
                                     const SigmaPSetup& setup, double half_width);

/// sqrt(8 k_B / pi (T1/m1 + T2/m2)).
double mean_relative_speed(double t_cr, double m_cr, double t_rb, double m_rb);

/// beta / v_bar.
double inelastic_cross_section(double beta, double mean_speed);

/// (L - alpha) / F from alpha = L - beta F. alpha > L gives a negative
/// value flagged "unphysical".
FlaggedValue extract_beta_rbcr(double alpha, double loading_rate, double factor);

struct BetaBounds {
  double lower = 0.0;  // m^3/s
  double upper = 0.0;
  std::vector<std::string> flags;
};

/// Bounds from an excess loss rate and the range of the overlap factor:
/// [rate / F_max, rate / F_min].
BetaBounds beta_crrb_bounds(double excess_rate, double factor_min, double factor_max);

/// Extra loss rate caused by the partner species, from traces with and
/// without it: the mean atom-number difference over [t_begin, t_end]
/// divided by the mean elapsed time of those samples. The trace without the
/// partner is linearly interpolated onto the sample times of the other.
FlaggedValue excess_loss_rate(const DataTrace& without_partner, const DataTrace& with_partner,
                              double t_begin, double t_end);

/// Share of the released kinetic energy taken by `m_receiver` in a two-body
/// breakup from rest.
double energy_partition(double m_receiver, double m_partner);

enum class ZeemanChannel { ground, excited };

/// Energy released by a depolarizing collision near the trap centre:
/// 3/2 mu_B B (ground) or 4/3 mu_B B (excited Rb).
double zeeman_release_energy(double field, ZeemanChannel channel);

}  // namespace trapkit

#endif  // TRAPKIT_ESTIMATION_HPP
