#ifndef TRAPKIT_TESTS_SYNTHETIC_HPP
#define TRAPKIT_TESTS_SYNTHETIC_HPP

#include <cstdint>
#include <vector>

#include "trapkit/dynamics.hpp"
#include "trapkit/estimation.hpp"
#include "trapkit/photoionization.hpp"

namespace trapkit::testing {

inline const std::vector<double> kRbIntensities{20.0, 60.0, 100.0, 160.0};  // mW/cm^2
inline const std::vector<double> kIonizingIntensities{0.0, 100.0, 200.0, 400.0, 600.0};

inline double true_gamma_p(double sigma_p, double rb_si, double ip_si, const SigmaPSetup& setup) {
  const LightField mot{rb_si, setup.detuning, setup.transition.transition_wavelength};
  return photoionization_loss_rate(mot, setup.transition,
                                   {sigma_p, setup.ionizing_wavelength}, ip_si);
}

/// Noiseless photoionization grid: gamma_tot = gamma_bg + gamma_p.
inline std::vector<SigmaPRun> sigma_p_grid(double sigma_p, double gamma_bg,
                                           const SigmaPSetup& setup = {}) {
  std::vector<SigmaPRun> runs;
  for (double rb : kRbIntensities) {
    for (double ip : kIonizingIntensities) {
      SigmaPRun r;
      r.rb_intensity = intensity_to_si(rb);
      r.ionizing_intensity = intensity_to_si(ip);
      r.gamma_total = gamma_bg + true_gamma_p(sigma_p, r.rb_intensity, r.ionizing_intensity, setup);
      runs.push_back(r);
    }
  }
  return runs;
}

/// Loading curve of the Rb MOT with total loss rate `gamma`, sampled at
/// 5 Hz for 40 s (200 intervals) with relative noise.
inline DataTrace noisy_loading_trace(double loading_rate, double gamma, double relative_noise,
                                     std::uint64_t seed) {
  const auto t = uniform_times(40.0, 5.0);
  std::vector<double> n;
  n.reserve(t.size());
  for (double ti : t) n.push_back(one_body_loading(loading_rate, gamma, 0.0, ti));
  return synthesize_trace(t, n, ValueKind::atom_number, {relative_noise, 0.0, seed});
}

/// The same grid, but each gamma_tot is measured by fitting a noisy loading
/// curve, so gamma_tot carries the fit's 1 sigma.
inline std::vector<SigmaPRun> noisy_sigma_p_grid(double sigma_p, double gamma_bg,
                                                 double relative_noise, std::uint64_t seed,
                                                 const SigmaPSetup& setup = {}) {
  auto runs = sigma_p_grid(sigma_p, gamma_bg, setup);
  std::uint64_t k = 0;
  for (auto& r : runs) {
    const DataTrace tr = noisy_loading_trace(2.6e4, r.gamma_total, relative_noise,
                                             seed * 1000003ULL + k++);
    const FitResult fit = fit_loading(tr);
    r.gamma_total = fit.value("gamma");
    r.gamma_total_sigma = fit.sigma("gamma");
  }
  return runs;
}

}  // namespace trapkit::testing

#endif  // TRAPKIT_TESTS_SYNTHETIC_HPP
