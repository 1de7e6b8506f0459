#ifndef TRAPKIT_ODE_HPP
#define TRAPKIT_ODE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace trapkit::ode {

template <std::size_t N>
using State = std::array<double, N>;

struct Tolerances {
  double rel_tol = 1e-9;
  double abs_tol = 1e-3;
};

enum class Status {
  completed,
  terminated,  // a component would have crossed zero; integration stopped there
};

struct Stats {
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
  std::size_t rhs_evaluations = 0;
};

template <std::size_t N>
struct Solution {
  std::vector<double> times;
  std::vector<State<N>> states;
  Status status = Status::completed;
  double termination_time = 0.0;
  Stats stats;
};

/// Thrown when the step size collapses; carries the last accepted state.
template <std::size_t N>
class StepUnderflow : public std::runtime_error {
 public:
  StepUnderflow(double t, const State<N>& y)
      : std::runtime_error("step size underflow at t = " + std::to_string(t)), time(t),
        state(y) {}
  double time;
  State<N> state;
};

/// Adaptive Dormand-Prince 5(4) integrator reporting the state exactly at
/// each requested output time (steps are shortened to land on them).
///
/// If `non_negative` is set and a step would push a component below zero,
/// the zero crossing is located by bisection on the step size, the state is
/// clamped there and integration terminates.
template <std::size_t N, typename Rhs>
Solution<N> integrate_dopri5(Rhs&& rhs, State<N> y, std::span<const double> output_times,
                             const Tolerances& tol, bool non_negative = true) {
  // Butcher tableau.
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                   b6 = 11.0 / 84;
  // b - b_hat
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  if (!(tol.rel_tol > 0.0) || !(tol.abs_tol > 0.0)) {
    throw std::invalid_argument("tolerances must be positive");
  }
  if (output_times.empty()) throw std::invalid_argument("no output times");
  for (std::size_t i = 1; i < output_times.size(); ++i) {
    if (!(output_times[i] > output_times[i - 1])) {
      throw std::invalid_argument("output times must be strictly increasing");
    }
  }

  Solution<N> sol;
  double t = output_times.front();
  sol.times.push_back(t);
  sol.states.push_back(y);
  if (output_times.size() == 1) return sol;

  auto eval = [&](double tt, const State<N>& yy) {
    ++sol.stats.rhs_evaluations;
    return rhs(tt, yy);
  };

  const double t_end = output_times.back();
  State<N> k1 = eval(t, y);

  // Initial step guess from the derivative scale.
  double h = 0.0;
  {
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sc = tol.abs_tol + tol.rel_tol * std::fabs(y[i]);
      d0 += (y[i] / sc) * (y[i] / sc);
      d1 += (k1[i] / sc) * (k1[i] / sc);
    }
    d0 = std::sqrt(d0 / N);
    d1 = std::sqrt(d1 / N);
    h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h = std::min(h, t_end - t);
  }

  std::size_t next_out = 1;
  State<N> k2, k3, k4, k5, k6, k7, y_stage, y_new;

  auto stage = [&](auto&&... terms) {
    // y + h * sum(a_j k_j)
    for (std::size_t i = 0; i < N; ++i) {
      double acc = 0.0;
      ((acc += terms.first * (*terms.second)[i]), ...);
      y_stage[i] = y[i] + h * acc;
    }
    return y_stage;
  };

  auto take_step = [&](double step) {
    h = step;
    k2 = eval(t + c2 * h, stage(std::pair{a21, &k1}));
    k3 = eval(t + c3 * h, stage(std::pair{a31, &k1}, std::pair{a32, &k2}));
    k4 = eval(t + c4 * h, stage(std::pair{a41, &k1}, std::pair{a42, &k2}, std::pair{a43, &k3}));
    k5 = eval(t + c5 * h, stage(std::pair{a51, &k1}, std::pair{a52, &k2}, std::pair{a53, &k3},
                                std::pair{a54, &k4}));
    k6 = eval(t + h, stage(std::pair{a61, &k1}, std::pair{a62, &k2}, std::pair{a63, &k3},
                           std::pair{a64, &k4}, std::pair{a65, &k5}));
    for (std::size_t i = 0; i < N; ++i) {
      y_new[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    }
    k7 = eval(t + h, y_new);
    double err = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double ei =
          h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sc =
          tol.abs_tol + tol.rel_tol * std::max(std::fabs(y[i]), std::fabs(y_new[i]));
      err += (ei / sc) * (ei / sc);
    }
    return std::sqrt(err / N);
  };

  auto negative = [&](const State<N>& s) {
    return std::any_of(s.begin(), s.end(), [](double v) { return v < 0.0; });
  };

  while (next_out < output_times.size()) {
    const double target = output_times[next_out];
    bool hit_target = false;
    double step = h;
    if (t + step >= target || t + 1.01 * step >= target) {
      step = target - t;
      hit_target = true;
    }
    if (step <= 1e-13 * std::max(1.0, std::fabs(t))) throw StepUnderflow<N>(t, y);

    const double natural = h;
    const double err = take_step(step);
    if (!(err <= 1.0)) {
      ++sol.stats.rejected_steps;
      const double factor = std::isfinite(err) ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.2;
      h = step * factor;
      continue;
    }

    if (non_negative && negative(y_new)) {
      // Locate the crossing by bisection on the step length.
      std::array<bool, N> crossing{};
      auto mark = [&] {
        for (std::size_t i = 0; i < N; ++i) crossing[i] = y_new[i] < 0.0;
      };
      mark();
      double lo = 0.0, hi = step;
      for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, std::fabs(t)); ++it) {
        const double mid = 0.5 * (lo + hi);
        take_step(mid);
        if (negative(y_new)) {
          hi = mid;
          mark();
        } else {
          lo = mid;
        }
      }
      if (lo > 0.0) {
        take_step(lo);
        t += lo;
        y = y_new;
        ++sol.stats.accepted_steps;
      }
      for (std::size_t i = 0; i < N; ++i) y[i] = crossing[i] ? 0.0 : std::max(y[i], 0.0);
      sol.status = Status::terminated;
      sol.termination_time = t;
      if (sol.times.back() == t) {
        sol.states.back() = y;
      } else {
        sol.times.push_back(t);
        sol.states.push_back(y);
      }
      return sol;
    }

    ++sol.stats.accepted_steps;
    t = hit_target ? target : t + step;
    y = y_new;
    k1 = k7;  // first-same-as-last

    const double factor =
        err > 0.0 ? std::min(5.0, std::max(0.2, 0.9 * std::pow(err, -0.2))) : 5.0;
    // A step shortened to land on an output time says little about the
    // natural step size; keep the larger of the two.
    h = hit_target ? std::max(natural, step * factor) : step * factor;

    if (hit_target) {
      sol.times.push_back(t);
      sol.states.push_back(y);
      ++next_out;
    }
  }
  sol.termination_time = t;
  return sol;
}

}  // namespace trapkit::ode

#endif  // TRAPKIT_ODE_HPP
