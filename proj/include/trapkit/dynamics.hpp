#ifndef TRAPKIT_DYNAMICS_HPP
#define TRAPKIT_DYNAMICS_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <variant>
#include <vector>

#include "trapkit/ode.hpp"
#include "trapkit/trace.hpp"

namespace trapkit {

/// Overlap volume given directly.
struct FixedVolume {
  double effective_volume;  // m^3
};

/// Overlap volume from cloud sizes via varsigma.
struct CloudGeometry {
  double mot_size;   // sigma_bar, m
  double mt_length;  // z, m
};

using Overlap = std::variant<FixedVolume, CloudGeometry>;

double effective_volume(const Overlap& overlap);

/// Parameters of the coupled Cr (magnetic trap) / Rb (MOT) rate equations
///
///   dN_Cr/dt = -gamma_Cr N_Cr - beta_CrRb F
///   dN_Rb/dt = L_Rb - gamma_Rb N_Rb - beta_RbCr F,    F = N_Cr N_Rb / V_bar.
///
/// When `constant_factor` is set, F is held at that value instead of being
/// recomputed from the atom numbers.
struct TwoSpeciesModel {
  double loading_rate_rb = 0.0;  // atoms/s
  double gamma_rb = 0.0;         // 1/s
  double gamma_cr = 0.0;         // 1/s
  double beta_rbcr = 0.0;        // m^3/s, Rb loss per Cr partner
  double beta_crrb = 0.0;        // m^3/s, Cr loss per Rb partner
  Overlap overlap = FixedVolume{1.0};
  std::optional<double> constant_factor;  // 1/m^3

  void validate() const;

  /// Density-overlap factor for the given atom numbers.
  double factor(double n_cr, double n_rb) const;
};

enum class Species { cr, rb };

std::string_view species_name(Species s);

struct Trajectory {
  std::vector<double> times;  // s
  std::vector<double> n_cr;
  std::vector<double> n_rb;
  double rel_tol = 0.0;
  double abs_tol = 0.0;
  ode::Stats stats;
  /// True when a population reached zero and integration stopped early.
  bool terminated = false;

  std::size_t size() const { return times.size(); }
  std::span<const double> of(Species s) const { return s == Species::cr ? n_cr : n_rb; }
};

struct NoiseSpec {
  double relative_sigma = 0.0;
  double additive_sigma = 0.0;  // atoms (or K for temperature traces)
  std::uint64_t seed = 0;

  void validate() const;
};

/// Raised when the integrator cannot continue; holds the last valid state.
class IntegrationFailure : public std::runtime_error {
 public:
  IntegrationFailure(const std::string& what, double t, double n_cr, double n_rb)
      : std::runtime_error(what), time(t), last_n_cr(n_cr), last_n_rb(n_rb) {}
  double time;
  double last_n_cr;
  double last_n_rb;
};

/// (L/gamma)(1 - e^{-gamma t}) + N0 e^{-gamma t}; gamma = 0 gives L t + N0.
double one_body_loading(double loading_rate, double gamma, double n0, double t);

/// N0 e^{-gamma t}.
double one_body_decay(double gamma, double n0, double t);

/// Uniform sample grid 0, 1/rate, ... up to and including `duration`.
std::vector<double> uniform_times(double duration, double sample_rate);

/// Integrates the coupled system, reporting the state at each of `times`
/// (the first entry is the initial time). Both tolerances must lie in
/// (0, 1e-3].
Trajectory integrate_coupled(const TwoSpeciesModel& model, double n_cr0, double n_rb0,
                             std::span<const double> times, double rel_tol = 1e-9,
                             double abs_tol = 1e-3);

/// Same, over [0, t_end] sampled at `sample_rate`.
Trajectory integrate_coupled(const TwoSpeciesModel& model, double n_cr0, double n_rb0,
                             double t_end, double sample_rate, double rel_tol = 1e-9,
                             double abs_tol = 1e-3);

/// Time derivative of one species at t = 0 from the samples inside
/// [t0, t0 + window].
///
/// The window is fitted by linear least squares with the basis
/// {e^{-gamma t}, (1 - e^{-gamma t}) / gamma}, i.e. the one-body solution
/// with a constant source term; the returned slope is the derivative of that
/// fit at the window start. `one_body_rate` = 0 reduces the fit to a
/// straight line. Needs at least 4 samples in the window.
double initial_slope(std::span<const double> times, std::span<const double> values,
                     double window, double one_body_rate = 0.0,
                     std::span<const double> sigma = {});

double initial_slope(const Trajectory& traj, Species species, double window,
                     double one_body_rate = 0.0);

double initial_slope(const DataTrace& trace, double window, double one_body_rate = 0.0);

/// Resamples a trajectory at `sample_rate` and applies multiplicative then
/// additive Gaussian noise. The per-point sigma of the noise model is stored
/// in the trace whenever any noise is applied.
DataTrace synthesize_trace(const Trajectory& traj, Species species, const NoiseSpec& noise,
                           double sample_rate);

/// Noise applied to an arbitrary noiseless series (e.g. a temperature ramp).
DataTrace synthesize_trace(std::span<const double> times, std::span<const double> values,
                           ValueKind kind, const NoiseSpec& noise);

}  // namespace trapkit

#endif  // TRAPKIT_DYNAMICS_HPP
