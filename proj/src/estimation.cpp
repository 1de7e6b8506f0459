#include "trapkit/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>

#include "least_squares.hpp"

namespace trapkit {

const FitParameter& FitResult::at(std::string_view name) const {
  for (const auto& p : parameters) {
    if (p.name == name) return p;
  }
  throw std::out_of_range("no fit parameter named '" + std::string(name) + "'");
}

bool FitResult::has_flag(std::string_view flag) const {
  return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Prepared {
  std::vector<double> tau;  // time since first sample
  std::vector<double> weights;
  bool absolute_sigma = false;
};

Prepared prepare(const DataTrace& trace, ValueKind expected, std::size_t min_points,
                 const char* what) {
  trace.validate();
  if (trace.kind != expected) {
    throw FitError(std::string(what) + " needs a " +
                   std::string(value_kind_name(expected)) + " trace, got " +
                   std::string(value_kind_name(trace.kind)));
  }
  if (trace.size() < min_points) {
    throw FitError(std::string(what) + " needs at least " + std::to_string(min_points) +
                   " points, got " + std::to_string(trace.size()));
  }
  Prepared p;
  p.tau.resize(trace.size());
  p.weights.assign(trace.size(), 1.0);
  for (std::size_t i = 0; i < trace.size(); ++i) p.tau[i] = trace.times[i] - trace.times[0];
  if (trace.has_sigma()) {
    p.absolute_sigma = true;
    for (std::size_t i = 0; i < trace.size(); ++i) {
      p.weights[i] = 1.0 / (trace.sigma[i] * trace.sigma[i]);
    }
  }
  return p;
}

bool is_flat(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double scale = std::max(std::fabs(*lo), std::fabs(*hi));
  return *hi - *lo <= 1e-12 * scale;
}

// Straight-line slope through the first `n` points, unweighted.
double head_slope(const std::vector<double>& t, const std::vector<double>& v, std::size_t n) {
  double st = 0, sv = 0, stt = 0, stv = 0;
  for (std::size_t i = 0; i < n; ++i) {
    st += t[i];
    sv += v[i];
    stt += t[i] * t[i];
    stv += t[i] * v[i];
  }
  const double dn = static_cast<double>(n);
  const double den = dn * stt - st * st;
  return den > 0.0 ? (dn * stv - st * sv) / den : 0.0;
}

template <int P>
void finish(FitResult& out, const detail::LmResult<P>& lm, const Prepared& prep) {
  out.dof = static_cast<int>(prep.tau.size()) - P;
  out.converged = lm.converged && !lm.singular;
  out.iterations = lm.iterations;
  double wsum = std::accumulate(prep.weights.begin(), prep.weights.end(), 0.0);
  out.residual_rms = std::sqrt(lm.chi2 / wsum);
  if (prep.absolute_sigma) out.metadata["chi2_reduced"] = out.dof > 0 ? lm.chi2 / out.dof : kNaN;
  if (!lm.converged) out.flags.emplace_back("not_converged");
  if (lm.singular) out.flags.emplace_back("singular_covariance");
}

template <int P>
Eigen::Matrix<double, P, P> covariance(const detail::LmResult<P>& lm, const Prepared& prep,
                                       int dof) {
  if (prep.absolute_sigma) return lm.normal_inverse;
  const double s2 = dof > 0 ? lm.chi2 / dof : kNaN;
  return lm.normal_inverse * s2;
}

}  // namespace

FitResult fit_loading(const DataTrace& trace, const LoadingFitOptions& options) {
  const Prepared prep = prepare(trace, ValueKind::atom_number, 6, "loading fit");
  const auto& v = trace.values;
  if (is_flat(v)) throw FitError("loss rate unidentifiable: flat trace");

  const std::size_t n = v.size();
  const std::size_t tail = std::max<std::size_t>(1, n / 10);
  const std::size_t head = std::max<std::size_t>(3, n / 10);
  const double n_ss_guess =
      std::accumulate(v.end() - static_cast<std::ptrdiff_t>(tail), v.end(), 0.0) / tail;
  const double n0 = options.fit_initial_number ? v.front() : options.initial_number;
  double slope_guess = head_slope(prep.tau, v, head);
  const double span = prep.tau.back();
  if (!(n_ss_guess > 0.0)) throw FitError("loading fit: trace does not rise above zero");
  if (!(slope_guess > 0.0)) slope_guess = std::max((v.back() - v.front()) / span, 1e-9);
  double gamma_guess = slope_guess / std::max(n_ss_guess - n0, 1e-300);
  if (!(gamma_guess > 0.0) || !std::isfinite(gamma_guess)) gamma_guess = 1.0 / span;
  const double l_guess = gamma_guess * n_ss_guess;

  FitResult out;
  auto emit = [&](double l, double g, double l_var, double g_var, double lg_cov) {
    const double nss = l / g;
    const double nss_var =
        l_var / (g * g) + g_var * (l * l) / (g * g * g * g) - 2.0 * lg_cov * l / (g * g * g);
    out.parameters.push_back({"loading_rate", l, std::sqrt(l_var), "atoms/s"});
    out.parameters.push_back({"gamma", g, std::sqrt(g_var), "1/s"});
    out.parameters.push_back({"steady_state", nss, std::sqrt(std::max(nss_var, 0.0)), "atoms"});
    out.parameters.push_back({"lifetime", 1.0 / g, std::sqrt(g_var) / (g * g), "s"});
  };

  if (options.fit_initial_number) {
    auto model = [](double t, const Eigen::Vector3d& p, Eigen::Vector3d& grad) {
      const double l = p(0), g = p(1), a = p(2);
      const double e = std::exp(-g * t);
      const double rise = -std::expm1(-g * t) / g;
      grad(0) = rise;
      grad(1) = -l * rise / g + (l / g) * t * e - a * t * e;
      grad(2) = e;
      return l * rise + a * e;
    };
    auto feasible = [](const Eigen::Vector3d& p) { return p(1) > 0.0; };
    const auto lm = detail::levenberg_marquardt<3>(model, feasible,
                                                   Eigen::Vector3d(l_guess, gamma_guess, n0),
                                                   prep.tau, v, prep.weights,
                                                   options.max_iterations);
    finish(out, lm, prep);
    const auto cov = covariance(lm, prep, out.dof);
    emit(lm.params(0), lm.params(1), cov(0, 0), cov(1, 1), cov(0, 1));
    out.parameters.push_back({"initial_number", lm.params(2), std::sqrt(cov(2, 2)), "atoms"});
  } else {
    auto model = [n0](double t, const Eigen::Vector2d& p, Eigen::Vector2d& grad) {
      const double l = p(0), g = p(1);
      const double e = std::exp(-g * t);
      const double rise = -std::expm1(-g * t) / g;
      grad(0) = rise;
      grad(1) = -l * rise / g + (l / g) * t * e - n0 * t * e;
      return l * rise + n0 * e;
    };
    auto feasible = [](const Eigen::Vector2d& p) { return p(1) > 0.0; };
    const auto lm = detail::levenberg_marquardt<2>(model, feasible,
                                                   Eigen::Vector2d(l_guess, gamma_guess),
                                                   prep.tau, v, prep.weights,
                                                   options.max_iterations);
    finish(out, lm, prep);
    const auto cov = covariance(lm, prep, out.dof);
    emit(lm.params(0), lm.params(1), cov(0, 0), cov(1, 1), cov(0, 1));
  }
  if (span * out.value("gamma") < 1.0) out.flags.emplace_back("span_shorter_than_lifetime");
  return out;
}

FitResult fit_decay(const DataTrace& trace, int max_iterations) {
  const Prepared prep = prepare(trace, ValueKind::atom_number, 6, "decay fit");
  const auto& v = trace.values;
  if (is_flat(v)) throw FitError("loss rate unidentifiable: flat trace");

  // Log-linear start on the positive samples.
  std::vector<double> tp, lv;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] > 0.0) {
      tp.push_back(prep.tau[i]);
      lv.push_back(std::log(v[i]));
    }
  }
  if (tp.size() < 2) throw FitError("decay fit: fewer than two positive samples");
  const double slope = head_slope(tp, lv, tp.size());
  const double span = prep.tau.back();
  double gamma_guess = slope < 0.0 ? -slope : 1e-3 / span;
  double mean_t = std::accumulate(tp.begin(), tp.end(), 0.0) / tp.size();
  double mean_l = std::accumulate(lv.begin(), lv.end(), 0.0) / lv.size();
  const double n0_guess = std::exp(mean_l + gamma_guess * mean_t);

  auto model = [](double t, const Eigen::Vector2d& p, Eigen::Vector2d& grad) {
    const double e = std::exp(-p(0) * t);
    grad(0) = -p(1) * t * e;
    grad(1) = e;
    return p(1) * e;
  };
  auto feasible = [](const Eigen::Vector2d& p) { return p(0) >= 0.0; };
  const auto lm = detail::levenberg_marquardt<2>(model, feasible,
                                                 Eigen::Vector2d(gamma_guess, n0_guess), prep.tau,
                                                 v, prep.weights, max_iterations);
  FitResult out;
  finish(out, lm, prep);
  const auto cov = covariance(lm, prep, out.dof);
  const double g = lm.params(0);
  out.parameters.push_back({"gamma", g, std::sqrt(cov(0, 0)), "1/s"});
  out.parameters.push_back({"initial_number", lm.params(1), std::sqrt(cov(1, 1)), "atoms"});
  out.parameters.push_back(
      {"lifetime", g > 0.0 ? 1.0 / g : std::numeric_limits<double>::infinity(),
       g > 0.0 ? std::sqrt(cov(0, 0)) / (g * g) : kNaN, "s"});
  if (span * g < 1.0) out.flags.emplace_back("span_shorter_than_lifetime");
  return out;
}

FitResult fit_heating_rate(const DataTrace& trace) {
  const Prepared prep = prepare(trace, ValueKind::temperature, 4, "heating-rate fit");
  const auto& w = prep.weights;
  const auto& v = trace.values;
  // Absolute times: T(t) = T0 + rate t.
  const auto& t = trace.times;
  double sw = 0, st = 0, sv = 0, stt = 0, stv = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    sw += w[i];
    st += w[i] * t[i];
    sv += w[i] * v[i];
    stt += w[i] * t[i] * t[i];
    stv += w[i] * t[i] * v[i];
  }
  const double den = sw * stt - st * st;
  if (!(den > 0.0)) throw FitError("heating-rate fit: degenerate time axis");
  const double rate = (sw * stv - st * sv) / den;
  const double t0 = (stt * sv - st * stv) / den;

  double chi2 = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r = v[i] - (t0 + rate * t[i]);
    chi2 += w[i] * r * r;
  }
  FitResult out;
  out.dof = static_cast<int>(t.size()) - 2;
  out.converged = true;
  out.iterations = 1;
  out.residual_rms = std::sqrt(chi2 / sw);
  const double scale = prep.absolute_sigma ? 1.0 : chi2 / out.dof;
  out.parameters.push_back({"rate", rate, std::sqrt(scale * sw / den), "K/s"});
  out.parameters.push_back({"initial_temperature", t0, std::sqrt(scale * stt / den), "K"});
  return out;
}

FitParameter heating_rate_excess(const FitResult& with_partner, const FitResult& without) {
  const auto& a = with_partner.at("rate");
  const auto& b = without.at("rate");
  return {"rate_excess", a.value - b.value, std::hypot(a.sigma, b.sigma), "K/s"};
}

FlaggedValue extract_gamma_p(double gamma_total, double gamma_background) {
  if (!(gamma_total >= 0.0) || !(gamma_background >= 0.0)) {
    throw std::domain_error("loss rates must be >= 0");
  }
  FlaggedValue out{gamma_total - gamma_background, {}};
  if (out.value < 0.0) out.flags.emplace_back("below_background");
  return out;
}

void SigmaPRun::validate() const {
  if (!(rb_intensity >= 0.0) || !(ionizing_intensity >= 0.0) || !(gamma_total >= 0.0) ||
      !(gamma_total_sigma >= 0.0)) {
    throw std::invalid_argument("photoionization run fields must be >= 0");
  }
}

double BackgroundRates::for_group(double rb_intensity) const {
  if (use_pooled) return pooled;
  const auto it = per_group.find(rb_intensity);
  if (it == per_group.end()) {
    throw std::invalid_argument("no background rate for MOT intensity " +
                                std::to_string(rb_intensity) + " W/m^2");
  }
  return it->second;
}

BackgroundRates BackgroundRates::constant(double gamma_bg) {
  if (!(gamma_bg >= 0.0)) throw std::invalid_argument("background rate must be >= 0");
  BackgroundRates b;
  b.pooled = gamma_bg;
  b.use_pooled = true;
  return b;
}

BackgroundRates BackgroundRates::from_runs(const std::vector<SigmaPRun>& runs, bool pooled) {
  std::map<double, std::pair<double, int>> acc;
  double total = 0.0;
  int count = 0;
  for (const auto& r : runs) {
    if (r.ionizing_intensity != 0.0) continue;
    auto& a = acc[r.rb_intensity];
    a.first += r.gamma_total;
    a.second += 1;
    total += r.gamma_total;
    ++count;
  }
  if (count == 0) throw std::invalid_argument("no runs without ionizing light");
  BackgroundRates b;
  b.use_pooled = pooled;
  b.pooled = total / count;
  for (const auto& [intensity, a] : acc) b.per_group[intensity] = a.first / a.second;
  return b;
}

SigmaPResult extract_sigma_p(const std::vector<SigmaPRun>& runs,
                             const BackgroundRates& background, const SigmaPSetup& setup,
                             const SigmaPOptions& options) {
  setup.transition.validate();
  if (runs.empty()) throw FitError("no photoionization runs");
  if (photon_energy(setup.ionizing_wavelength) <= setup.transition.excited_ionization_energy) {
    throw FitError("ionizing photons are below the excited-state threshold");
  }
  std::map<double, std::vector<const SigmaPRun*>> groups;
  for (const auto& r : runs) {
    r.validate();
    groups[r.rb_intensity].push_back(&r);
  }

  SigmaPResult result;
  for (const auto& [intensity, members] : groups) {
    const LightField mot{intensity, setup.detuning, setup.transition.transition_wavelength};
    const double rho = excited_fraction(saturation_parameter(mot, setup.transition));
    char label_buf[48];
    std::snprintf(label_buf, sizeof label_buf, "%g mW/cm^2", intensity / 10.0);
    const std::string label = label_buf;
    if (!(rho > 0.0)) {
      result.warnings.push_back("group " + label + " skipped: no excited population");
      continue;
    }
    std::set<double> distinct;
    bool any_flux = false;
    for (const auto* r : members) {
      const double phi = photon_flux(r->ionizing_intensity, setup.ionizing_wavelength);
      distinct.insert(phi);
      any_flux = any_flux || phi > 0.0;
    }
    if (distinct.size() < 2 || !any_flux) {
      result.warnings.push_back("group " + label +
                                " skipped: fewer than 2 distinct ionizing intensities");
      continue;
    }
    const bool absolute = std::all_of(members.begin(), members.end(),
                                      [](const SigmaPRun* r) { return r->gamma_total_sigma > 0.0; });
    const double gamma_bg = background.for_group(intensity);

    std::vector<double> phi, rate, w;
    for (const auto* r : members) {
      phi.push_back(photon_flux(r->ionizing_intensity, setup.ionizing_wavelength));
      rate.push_back(extract_gamma_p(r->gamma_total, gamma_bg).value / rho);
      const double s = r->gamma_total_sigma / rho;
      w.push_back(absolute ? 1.0 / (s * s) : 1.0);
    }
    double spp = 0, spr = 0;
    for (std::size_t i = 0; i < phi.size(); ++i) {
      spp += w[i] * phi[i] * phi[i];
      spr += w[i] * phi[i] * rate[i];
    }
    SigmaPGroup g;
    g.rb_intensity = intensity;
    g.excited_fraction = rho;
    g.points = members.size();
    g.cross_section = spr / spp;
    g.dof = static_cast<int>(members.size()) - 1;
    double chi2 = 0.0;
    for (std::size_t i = 0; i < phi.size(); ++i) {
      const double r = rate[i] - g.cross_section * phi[i];
      chi2 += w[i] * r * r;
    }
    const double scale = absolute ? 1.0 : chi2 / g.dof;
    g.cross_section_sigma = std::sqrt(scale / spp);

    if (options.free_intercept_diagnostic && members.size() >= 3) {
      double sw = 0, sp = 0, sr = 0, sprr = 0;
      for (std::size_t i = 0; i < phi.size(); ++i) {
        sw += w[i];
        sp += w[i] * phi[i];
        sr += w[i] * rate[i];
        sprr += w[i] * phi[i] * rate[i];
      }
      const double den = sw * spp - sp * sp;
      g.free_slope = (sw * sprr - sp * sr) / den;
      g.free_intercept = (spp * sr - sp * sprr) / den;
      double chi2_free = 0.0;
      for (std::size_t i = 0; i < phi.size(); ++i) {
        const double r = rate[i] - g.free_intercept - g.free_slope * phi[i];
        chi2_free += w[i] * r * r;
      }
      const double s2 = absolute ? 1.0 : chi2_free / (static_cast<double>(phi.size()) - 2.0);
      g.free_intercept_sigma = std::sqrt(s2 * spp / den);
      g.has_free_fit = true;
    }
    if (g.cross_section < 0.0) {
      result.warnings.push_back("group " + label + " has a negative cross section");
    }
    result.groups.push_back(g);
  }

  if (result.groups.empty()) throw FitError("no group has an identifiable slope");

  const double n = static_cast<double>(result.groups.size());
  double mean = 0.0;
  for (const auto& g : result.groups) mean += g.cross_section;
  mean /= n;
  double ss = 0.0;
  for (const auto& g : result.groups) ss += (g.cross_section - mean) * (g.cross_section - mean);

  FitResult& pooled = result.pooled;
  const double dispersion =
      result.groups.size() > 1 ? std::sqrt(ss / (n - 1.0)) : result.groups.front().cross_section_sigma;
  pooled.parameters.push_back({"cross_section", mean, dispersion, "m^2"});
  pooled.dof = static_cast<int>(result.groups.size()) - 1;
  pooled.residual_rms = std::sqrt(ss / n);
  pooled.converged = true;
  pooled.iterations = 1;
  pooled.metadata["groups"] = n;
  pooled.metadata["relative_systematic"] = kSigmaPRelativeSystematic;
  if (mean < 0.0) pooled.flags.emplace_back("unphysical");
  if (result.groups.size() < groups.size()) pooled.flags.emplace_back("groups_skipped");
  return result;
}

DetuningSweep sigma_p_detuning_sweep(const std::vector<SigmaPRun>& runs,
                                     const BackgroundRates& background,
                                     const SigmaPSetup& setup, double half_width) {
  if (!(half_width >= 0.0)) throw std::invalid_argument("sweep half width must be >= 0");
  DetuningSweep sweep{};
  SigmaPSetup s = setup;
  sweep.detuning_low = std::max(setup.detuning - half_width, 0.0);
  sweep.detuning_high = setup.detuning + half_width;
  s.detuning = sweep.detuning_low;
  sweep.cross_section_low = extract_sigma_p(runs, background, s).pooled.value("cross_section");
  sweep.cross_section_center =
      extract_sigma_p(runs, background, setup).pooled.value("cross_section");
  s.detuning = sweep.detuning_high;
  sweep.cross_section_high = extract_sigma_p(runs, background, s).pooled.value("cross_section");
  return sweep;
}

double mean_relative_speed(double t_cr, double m_cr, double t_rb, double m_rb) {
  if (!(t_cr >= 0.0) || !(t_rb >= 0.0)) throw std::domain_error("temperatures must be >= 0");
  if (!(m_cr > 0.0) || !(m_rb > 0.0)) throw std::domain_error("masses must be > 0");
  return std::sqrt(8.0 * constants::boltzmann_k / constants::pi * (t_cr / m_cr + t_rb / m_rb));
}

double inelastic_cross_section(double beta, double mean_speed) {
  if (!(mean_speed > 0.0)) throw std::domain_error("mean speed must be > 0");
  return beta / mean_speed;
}

FlaggedValue extract_beta_rbcr(double alpha, double loading_rate, double factor) {
  if (!(factor > 0.0)) throw std::domain_error("overlap factor must be > 0");
  FlaggedValue out{(loading_rate - alpha) / factor, {}};
  if (out.value < 0.0) out.flags.emplace_back("unphysical");
  return out;
}

BetaBounds beta_crrb_bounds(double excess_rate, double factor_min, double factor_max) {
  if (!(factor_min > 0.0)) throw std::domain_error("F_min must be > 0");
  if (!(factor_max >= factor_min)) throw std::domain_error("F_min must not exceed F_max");
  BetaBounds b;
  b.lower = excess_rate / factor_max;
  b.upper = excess_rate / factor_min;
  if (excess_rate < 0.0) b.flags.emplace_back("unphysical");
  return b;
}

FlaggedValue excess_loss_rate(const DataTrace& without_partner, const DataTrace& with_partner,
                              double t_begin, double t_end) {
  without_partner.validate();
  with_partner.validate();
  if (!(t_end > t_begin)) throw std::invalid_argument("analysis window is empty");
  if (with_partner.size() == 0 || without_partner.size() < 2) {
    throw std::invalid_argument("traces too short for an excess loss rate");
  }
  const auto& tw = without_partner.times;
  const double origin = with_partner.times.front();
  double sum_diff = 0.0, sum_t = 0.0;
  std::size_t used = 0;
  std::size_t j = 0;
  for (std::size_t i = 0; i < with_partner.size(); ++i) {
    const double t = with_partner.times[i];
    if (t < t_begin || t > t_end) continue;
    if (t < tw.front() || t > tw.back()) {
      throw std::invalid_argument("trace without partner does not cover t = " + std::to_string(t));
    }
    while (j + 2 < tw.size() && tw[j + 1] < t) ++j;
    const double u = (t - tw[j]) / (tw[j + 1] - tw[j]);
    const double reference =
        without_partner.values[j] + u * (without_partner.values[j + 1] - without_partner.values[j]);
    sum_diff += reference - with_partner.values[i];
    sum_t += t - origin;
    ++used;
  }
  if (used == 0) throw std::invalid_argument("no samples inside the analysis window");
  if (!(sum_t > 0.0)) throw std::invalid_argument("analysis window starts at the trace origin");
  FlaggedValue out{sum_diff / sum_t, {}};
  if (out.value < 0.0) out.flags.emplace_back("negative_excess");
  return out;
}

double energy_partition(double m_receiver, double m_partner) {
  if (!(m_receiver > 0.0) || !(m_partner > 0.0)) throw std::domain_error("masses must be > 0");
  if (m_receiver == m_partner) return 0.5;
  // The larger share is computed symmetrically; the smaller one as its exact
  // complement, so both orderings sum to exactly 1.
  const double larger = std::max(m_receiver, m_partner) / (m_receiver + m_partner);
  return m_partner > m_receiver ? larger : 1.0 - larger;
}

double zeeman_release_energy(double field, ZeemanChannel channel) {
  if (!(field >= 0.0)) throw std::domain_error("field must be >= 0");
  const double coefficient = channel == ZeemanChannel::ground ? 1.5 : 4.0 / 3.0;
  return coefficient * constants::bohr_magneton * field;
}

}  // namespace trapkit
