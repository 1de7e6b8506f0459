#include "trapkit/dynamics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>
#include <string>

#include "trapkit/overlap_geometry.hpp"

namespace trapkit {

double effective_volume(const Overlap& overlap) {
  return std::visit(
      [](const auto& o) -> double {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, FixedVolume>) {
          if (!(o.effective_volume > 0.0)) {
            throw std::invalid_argument("effective volume must be > 0");
          }
          return o.effective_volume;
        } else {
          return effective_volume(o.mot_size, o.mt_length);
        }
      },
      overlap);
}

void TwoSpeciesModel::validate() const {
  auto non_negative = [](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument(std::string(name) + " must be finite and >= 0");
    }
  };
  non_negative(loading_rate_rb, "loading_rate_rb");
  non_negative(gamma_rb, "gamma_rb");
  non_negative(gamma_cr, "gamma_cr");
  non_negative(beta_rbcr, "beta_rbcr");
  non_negative(beta_crrb, "beta_crrb");
  if (constant_factor) non_negative(*constant_factor, "constant_factor");
  (void)effective_volume(overlap);
}

double TwoSpeciesModel::factor(double n_cr, double n_rb) const {
  if (constant_factor) return *constant_factor;
  return n_cr * n_rb / effective_volume(overlap);
}

std::string_view species_name(Species s) { return s == Species::cr ? "cr" : "rb"; }

void NoiseSpec::validate() const {
  if (!(relative_sigma >= 0.0) || !(additive_sigma >= 0.0)) {
    throw std::invalid_argument("noise sigmas must be >= 0");
  }
}

double one_body_loading(double loading_rate, double gamma, double n0, double t) {
  if (!(t >= 0.0)) throw std::domain_error("time must be >= 0");
  if (!(gamma >= 0.0)) throw std::domain_error("loss rate must be >= 0");
  if (gamma == 0.0) return loading_rate * t + n0;
  const double decay = std::exp(-gamma * t);
  // -expm1 keeps the small-gamma*t regime accurate.
  return (loading_rate / gamma) * -std::expm1(-gamma * t) + n0 * decay;
}

double one_body_decay(double gamma, double n0, double t) {
  if (!(t >= 0.0)) throw std::domain_error("time must be >= 0");
  if (!(gamma >= 0.0)) throw std::domain_error("loss rate must be >= 0");
  return n0 * std::exp(-gamma * t);
}

std::vector<double> uniform_times(double duration, double sample_rate) {
  if (!(sample_rate > 0.0)) throw std::invalid_argument("sample rate must be > 0");
  if (!(duration >= 0.0) || !std::isfinite(duration)) {
    throw std::invalid_argument("duration must be finite and >= 0");
  }
  // Round so that e.g. 30 s at 20 Hz gives exactly 601 samples.
  const auto n = static_cast<std::size_t>(std::floor(duration * sample_rate + 1e-9));
  std::vector<double> t(n + 1);
  for (std::size_t i = 0; i <= n; ++i) t[i] = static_cast<double>(i) / sample_rate;
  return t;
}

Trajectory integrate_coupled(const TwoSpeciesModel& model, double n_cr0, double n_rb0,
                             std::span<const double> times, double rel_tol, double abs_tol) {
  model.validate();
  if (!(rel_tol > 0.0 && rel_tol <= 1e-3) || !(abs_tol > 0.0 && abs_tol <= 1e-3)) {
    throw std::invalid_argument("tolerances must lie in (0, 1e-3]");
  }
  if (!(n_cr0 >= 0.0) || !(n_rb0 >= 0.0)) {
    throw std::invalid_argument("initial atom numbers must be >= 0");
  }
  for (double t : times) {
    if (!std::isfinite(t)) throw std::invalid_argument("time span must be finite");
  }

  const double inv_volume =
      model.constant_factor ? 0.0 : 1.0 / effective_volume(model.overlap);
  auto rhs = [&](double, const ode::State<2>& y) -> ode::State<2> {
    const double f = model.constant_factor ? *model.constant_factor : y[0] * y[1] * inv_volume;
    return {-model.gamma_cr * y[0] - model.beta_crrb * f,
            model.loading_rate_rb - model.gamma_rb * y[1] - model.beta_rbcr * f};
  };

  ode::Solution<2> sol;
  try {
    sol = ode::integrate_dopri5<2>(rhs, {n_cr0, n_rb0}, times, {rel_tol, abs_tol});
  } catch (const ode::StepUnderflow<2>& e) {
    throw IntegrationFailure(e.what(), e.time, e.state[0], e.state[1]);
  }

  Trajectory traj;
  traj.times = std::move(sol.times);
  traj.n_cr.reserve(sol.states.size());
  traj.n_rb.reserve(sol.states.size());
  for (const auto& s : sol.states) {
    traj.n_cr.push_back(s[0]);
    traj.n_rb.push_back(s[1]);
  }
  traj.rel_tol = rel_tol;
  traj.abs_tol = abs_tol;
  traj.stats = sol.stats;
  traj.terminated = sol.status == ode::Status::terminated;
  return traj;
}

Trajectory integrate_coupled(const TwoSpeciesModel& model, double n_cr0, double n_rb0,
                             double t_end, double sample_rate, double rel_tol, double abs_tol) {
  const auto times = uniform_times(t_end, sample_rate);
  return integrate_coupled(model, n_cr0, n_rb0, times, rel_tol, abs_tol);
}

double initial_slope(std::span<const double> times, std::span<const double> values,
                     double window, double one_body_rate, std::span<const double> sigma) {
  if (times.size() != values.size()) throw std::invalid_argument("length mismatch");
  if (!sigma.empty() && sigma.size() != times.size()) {
    throw std::invalid_argument("sigma length mismatch");
  }
  if (!(window > 0.0)) throw std::invalid_argument("slope window must be > 0");
  if (!(one_body_rate >= 0.0)) throw std::invalid_argument("one-body rate must be >= 0");
  if (times.empty()) throw std::invalid_argument("too few samples inside the slope window");

  const double t0 = times.front();
  const double gamma = one_body_rate;
  // Normal equations for N = c0 b0 + c1 b1.
  double s00 = 0, s01 = 0, s11 = 0, r0 = 0, r1 = 0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double tau = times[i] - t0;
    if (tau > window * (1.0 + 1e-12)) break;
    const double b0 = std::exp(-gamma * tau);
    const double b1 = gamma > 0.0 ? -std::expm1(-gamma * tau) / gamma : tau;
    const double w = sigma.empty() ? 1.0 : 1.0 / (sigma[i] * sigma[i]);
    s00 += w * b0 * b0;
    s01 += w * b0 * b1;
    s11 += w * b1 * b1;
    r0 += w * b0 * values[i];
    r1 += w * b1 * values[i];
    ++used;
  }
  if (used < 4) {
    throw std::invalid_argument("too few samples inside the slope window (" +
                                std::to_string(used) + " < 4)");
  }
  const double det = s00 * s11 - s01 * s01;
  if (!(std::fabs(det) > 0.0)) throw std::invalid_argument("degenerate slope window");
  const double c0 = (r0 * s11 - r1 * s01) / det;
  const double c1 = (r1 * s00 - r0 * s01) / det;
  return c1 - gamma * c0;
}

double initial_slope(const Trajectory& traj, Species species, double window,
                     double one_body_rate) {
  return initial_slope(traj.times, traj.of(species), window, one_body_rate);
}

double initial_slope(const DataTrace& trace, double window, double one_body_rate) {
  trace.validate();
  return initial_slope(trace.times, trace.values, window, one_body_rate, trace.sigma);
}

namespace {

DataTrace apply_noise(std::vector<double> times, std::vector<double> clean, ValueKind kind,
                      const NoiseSpec& noise) {
  noise.validate();
  DataTrace trace;
  trace.kind = kind;
  trace.times = std::move(times);
  trace.values.resize(clean.size());

  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const bool noisy = noise.relative_sigma > 0.0 || noise.additive_sigma > 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const double xi_rel = gauss(rng);
    const double xi_add = gauss(rng);
    trace.values[i] = noisy ? clean[i] * (1.0 + noise.relative_sigma * xi_rel) +
                                  noise.additive_sigma * xi_add
                            : clean[i];
  }

  if (noisy) {
    trace.sigma.resize(clean.size());
    double floor = 0.0;
    for (std::size_t i = 0; i < clean.size(); ++i) {
      const double rel = noise.relative_sigma * clean[i];
      trace.sigma[i] = std::sqrt(rel * rel + noise.additive_sigma * noise.additive_sigma);
      if (trace.sigma[i] > 0.0 && (floor == 0.0 || trace.sigma[i] < floor)) {
        floor = trace.sigma[i];
      }
    }
    if (floor == 0.0) {
      trace.sigma.clear();
    } else {
      // Noise-free samples (e.g. N = 0 with purely relative noise) get the
      // smallest sigma in the trace.
      for (double& s : trace.sigma) s = std::max(s, floor);
    }
  }

  auto fmt = [](double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
  };
  trace.metadata["seed"] = std::to_string(noise.seed);
  trace.metadata["relative_sigma"] = fmt(noise.relative_sigma);
  trace.metadata["additive_sigma"] = fmt(noise.additive_sigma);
  return trace;
}

}  // namespace

DataTrace synthesize_trace(const Trajectory& traj, Species species, const NoiseSpec& noise,
                           double sample_rate) {
  if (!(sample_rate > 0.0)) throw std::invalid_argument("sample rate must be > 0");
  if (traj.size() == 0) throw std::invalid_argument("empty trajectory");
  const auto source = traj.of(species);
  const double t_first = traj.times.front();
  const double t_last = traj.times.back();

  std::vector<double> times;
  std::vector<double> clean;
  std::size_t j = 0;
  for (std::size_t i = 0;; ++i) {
    const double t = t_first + static_cast<double>(i) / sample_rate;
    if (t > t_last * (1.0 + 1e-12) + 1e-12) break;
    while (j + 1 < traj.size() && traj.times[j + 1] <= t) ++j;
    const double tol = 1e-9 * std::max(1.0, std::fabs(t));
    double v;
    if (std::fabs(traj.times[j] - t) <= tol) {
      v = source[j];
    } else if (j + 1 < traj.size() && std::fabs(traj.times[j + 1] - t) <= tol) {
      v = source[j + 1];
    } else if (j + 1 < traj.size()) {
      const double u = (t - traj.times[j]) / (traj.times[j + 1] - traj.times[j]);
      v = source[j] + u * (source[j + 1] - source[j]);
    } else {
      v = source[j];
    }
    times.push_back(t);
    clean.push_back(v);
  }
  auto trace = apply_noise(std::move(times), std::move(clean), ValueKind::atom_number, noise);
  trace.metadata["species"] = std::string(species_name(species));
  return trace;
}

DataTrace synthesize_trace(std::span<const double> times, std::span<const double> values,
                           ValueKind kind, const NoiseSpec& noise) {
  if (times.size() != values.size()) throw std::invalid_argument("length mismatch");
  return apply_noise({times.begin(), times.end()}, {values.begin(), values.end()}, kind, noise);
}

}  // namespace trapkit
