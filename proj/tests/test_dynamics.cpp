#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "trapkit/dynamics.hpp"
#include "trapkit/ode.hpp"
#include "trapkit/overlap_geometry.hpp"

using namespace trapkit;
using doctest::Approx;

namespace {

TwoSpeciesModel reference_model() {
  TwoSpeciesModel m;
  m.loading_rate_rb = 2.6e4;
  m.gamma_rb = 1.0 / 9.0;
  m.gamma_cr = 0.1;
  m.beta_rbcr = 1.4e-17;
  m.beta_crrb = 1e-15;
  m.overlap = CloudGeometry{1e-3, 1e-3};
  return m;
}

double rel(double a, double b) { return std::fabs(a - b) / std::fabs(b); }

}  // namespace

TEST_CASE("one-body closed forms") {
  CHECK(one_body_loading(2.6e4, 1.0 / 9.0, 0.0, 1e4) == Approx(2.34e5).epsilon(1e-12));
  CHECK(one_body_loading(2.6e4, 1.0 / 9.0, 123.0, 0.0) == 123.0);
  CHECK(one_body_loading(100.0, 0.0, 5.0, 3.0) == 305.0);
  // Derivative at t = 0 with N0 = 0 equals L.
  const double h = 1e-6;
  CHECK(one_body_loading(2.6e4, 1.0 / 9.0, 0.0, h) / h == Approx(2.6e4).epsilon(1e-6));
  // Small gamma approaches the linear limit smoothly.
  CHECK(one_body_loading(100.0, 1e-14, 0.0, 3.0) == Approx(300.0).epsilon(1e-12));
  CHECK_THROWS(one_body_loading(1.0, 0.1, 0.0, -1.0));
  CHECK_THROWS(one_body_loading(1.0, -0.1, 0.0, 1.0));

  CHECK(one_body_decay(0.1, 5e7, 10.0) == Approx(5e7 / std::exp(1.0)).epsilon(1e-15));
  CHECK(one_body_decay(0.1, 5e7, 0.0) == 5e7);
  CHECK(one_body_decay(0.1, 5e7, 7.0) == Approx(2.4829e7).epsilon(1e-4));
}

TEST_CASE("uniform sample grid") {
  const auto t = uniform_times(30.0, 20.0);
  CHECK(t.size() == 601);
  CHECK(t.front() == 0.0);
  CHECK(t.back() == Approx(30.0).epsilon(1e-15));
  CHECK(uniform_times(0.0, 10.0).size() == 1);
  CHECK_THROWS(uniform_times(1.0, 0.0));
}

TEST_CASE("model validation") {
  TwoSpeciesModel m = reference_model();
  CHECK_NOTHROW(m.validate());
  m.beta_crrb = -1.0;
  CHECK_THROWS(m.validate());
  m = reference_model();
  m.overlap = FixedVolume{0.0};
  CHECK_THROWS(m.validate());
  m = reference_model();
  m.constant_factor = 1e20;
  CHECK(m.factor(1.0, 1.0) == 1e20);
}

TEST_CASE("decoupled integration matches the closed forms") {
  TwoSpeciesModel m = reference_model();
  m.beta_rbcr = 0.0;
  m.beta_crrb = 0.0;
  const auto traj = integrate_coupled(m, 5e7, 0.0, 50.0, 20.0);
  REQUIRE(traj.size() == 1001);
  CHECK_FALSE(traj.terminated);
  double worst = 0.0;
  for (std::size_t i = 1; i < traj.size(); ++i) {
    const double t = traj.times[i];
    worst = std::max(worst, rel(traj.n_cr[i], one_body_decay(m.gamma_cr, 5e7, t)));
    worst = std::max(worst, rel(traj.n_rb[i], one_body_loading(m.loading_rate_rb, m.gamma_rb, 0.0, t)));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("all rates zero keeps the populations constant") {
  TwoSpeciesModel m;
  m.overlap = FixedVolume{1e-7};
  const auto traj = integrate_coupled(m, 5e7, 2e5, 10.0, 5.0);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    CHECK(traj.n_cr[i] == 5e7);
    CHECK(traj.n_rb[i] == 2e5);
  }
}

TEST_CASE("interspecies losses only remove atoms") {
  const TwoSpeciesModel m = reference_model();
  const auto traj = integrate_coupled(m, 5e7, 1e4, 60.0, 10.0);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double t = traj.times[i];
    CHECK(traj.n_cr[i] >= 0.0);
    CHECK(traj.n_rb[i] >= 0.0);
    CHECK(traj.n_cr[i] <= one_body_decay(m.gamma_cr, 5e7, t) * (1 + 1e-9));
    CHECK(traj.n_rb[i] <= one_body_loading(m.loading_rate_rb, m.gamma_rb, 1e4, t) * (1 + 1e-9));
  }
}

TEST_CASE("Cr loss increases with the interspecies coefficient") {
  TwoSpeciesModel with = reference_model();
  TwoSpeciesModel without = with;
  without.beta_crrb = 0.0;
  const double t[] = {0.0, 30.0};
  const auto a = integrate_coupled(with, 5e7, 0.0, t);
  const auto b = integrate_coupled(without, 5e7, 0.0, t);
  CHECK(a.n_cr[1] < b.n_cr[1]);
  CHECK(b.n_cr[1] - a.n_cr[1] > 1e3);
}

TEST_CASE("self-convergence under tolerance halving") {
  const TwoSpeciesModel m = reference_model();
  for (double tol : {1e-6, 1e-9}) {
    const double abs_tol = 1e-3;
    const double t[] = {0.0, 50.0};
    const auto a = integrate_coupled(m, 5e7, 0.0, t, tol, abs_tol);
    const auto b = integrate_coupled(m, 5e7, 0.0, t, tol / 2, abs_tol / 2);
    CAPTURE(tol);
    CHECK(std::fabs(a.n_cr[1] - b.n_cr[1]) < tol * std::fabs(b.n_cr[1]) + abs_tol);
    CHECK(std::fabs(a.n_rb[1] - b.n_rb[1]) < tol * std::fabs(b.n_rb[1]) + abs_tol);
  }
}

TEST_CASE("steady state satisfies the Rb balance") {
  TwoSpeciesModel m = reference_model();
  m.gamma_cr = 0.0;  // keep Cr present so the coupling term matters
  m.beta_crrb = 0.0;
  const double v = effective_volume(m.overlap);
  const double gamma_eff = m.gamma_rb + m.beta_rbcr * 5e7 / v;
  auto residual = [&](const Trajectory& traj) {
    const double n_cr = traj.n_cr[1];
    const double n_rb = traj.n_rb[1];
    return m.loading_rate_rb - m.gamma_rb * n_rb - m.beta_rbcr * n_cr * n_rb / v;
  };
  // After 10 lifetimes only the e^-10 transient remains.
  const double t10[] = {0.0, 90.0};
  CHECK(std::fabs(residual(integrate_coupled(m, 5e7, 0.0, t10))) <
        1.01 * m.loading_rate_rb * std::exp(-gamma_eff * 90.0));
  // Long enough for the transient to vanish: the balance holds to solver tolerance.
  const double t_long[] = {0.0, 400.0};
  const auto traj = integrate_coupled(m, 5e7, 0.0, t_long);
  const double n_star = m.loading_rate_rb / gamma_eff;
  const double tol_atoms = traj.rel_tol * n_star + traj.abs_tol;
  // Global error may exceed the per-step tolerance by a modest factor.
  CHECK(std::fabs(traj.n_rb[1] - n_star) < 10.0 * tol_atoms);
  CHECK(std::fabs(residual(traj)) < 10.0 * gamma_eff * tol_atoms);
}

TEST_CASE("tolerance and input validation") {
  const TwoSpeciesModel m = reference_model();
  CHECK_THROWS(integrate_coupled(m, 1.0, 1.0, 1.0, 10.0, 0.0, 1e-3));
  CHECK_THROWS(integrate_coupled(m, 1.0, 1.0, 1.0, 10.0, 2e-3, 1e-3));
  CHECK_THROWS(integrate_coupled(m, -1.0, 1.0, 1.0, 10.0));
  const double bad[] = {0.0, 1.0, 0.5};
  CHECK_THROWS(integrate_coupled(m, 1.0, 1.0, bad));
}

TEST_CASE("negative-population guard clamps and terminates") {
  // dy/dt = -1 crosses zero at t = 1.
  auto rhs = [](double, const ode::State<1>&) { return ode::State<1>{-1.0}; };
  const double out[] = {0.0, 0.5, 2.0, 3.0};
  const auto sol = ode::integrate_dopri5<1>(rhs, {1.0}, out, {1e-9, 1e-9});
  CHECK(sol.status == ode::Status::terminated);
  CHECK(sol.termination_time == Approx(1.0).epsilon(1e-6));
  CHECK(sol.states.back()[0] == 0.0);
  CHECK(sol.times.back() == Approx(1.0).epsilon(1e-6));
  for (const auto& s : sol.states) CHECK(s[0] >= 0.0);
  CHECK(sol.states[1][0] == Approx(0.5).epsilon(1e-12));
}

TEST_CASE("step-size underflow reports the last state") {
  // Finite-time blow-up at t = 1.
  auto rhs = [](double, const ode::State<1>& y) { return ode::State<1>{y[0] * y[0]}; };
  const double out[] = {0.0, 2.0};
  try {
    (void)ode::integrate_dopri5<1>(rhs, {1.0}, out, {1e-9, 1e-9});
    FAIL("expected underflow");
  } catch (const ode::StepUnderflow<1>& e) {
    CHECK(e.time == Approx(1.0).epsilon(1e-3));
    CHECK(e.state[0] > 1e3);
  }
}

TEST_CASE("initial slope") {
  SUBCASE("pure loading, short window") {
    // gamma * window = 0.022: a straight line is within 2%.
    const auto t = uniform_times(0.2, 100.0);
    std::vector<double> n;
    for (double ti : t) n.push_back(one_body_loading(2.6e4, 1.0 / 9.0, 0.0, ti));
    CHECK(rel(initial_slope(t, n, 0.2), 2.6e4) < 0.02);
    // With the one-body rate in the basis the slope is exact, whatever the window.
    const auto t1 = uniform_times(1.0, 20.0);
    std::vector<double> n1;
    for (double ti : t1) n1.push_back(one_body_loading(2.6e4, 1.0 / 9.0, 0.0, ti));
    CHECK(rel(initial_slope(t1, n1, 1.0, 1.0 / 9.0), 2.6e4) < 1e-9);
  }
  SUBCASE("flat trace") {
    const auto t = uniform_times(1.0, 20.0);
    const std::vector<double> n(t.size(), 1234.0);
    CHECK(initial_slope(t, n, 1.0) == Approx(0.0).scale(1.0));
  }
  SUBCASE("coupled trace with known alpha") {
    TwoSpeciesModel m = reference_model();
    m.overlap = FixedVolume{1.012e-7};
    const double n_rb0 = 5e4;
    const auto traj = integrate_coupled(m, 5e7, n_rb0, 1.0, 20.0);
    const double alpha = m.loading_rate_rb - m.gamma_rb * n_rb0 -
                         m.beta_rbcr * 5e7 * n_rb0 / 1.012e-7;
    CHECK(rel(initial_slope(traj, Species::rb, 1.0, m.gamma_rb), alpha) < 0.05);
  }
  SUBCASE("too few samples") {
    const auto t = uniform_times(1.0, 2.0);
    const std::vector<double> n(t.size(), 1.0);
    CHECK_THROWS(initial_slope(t, n, 1.0));
  }
}

TEST_CASE("trace synthesis") {
  const TwoSpeciesModel m = reference_model();
  const auto traj = integrate_coupled(m, 5e7, 0.0, 20.0, 20.0);

  SUBCASE("zero noise resamples exactly") {
    const auto tr = synthesize_trace(traj, Species::rb, {}, 20.0);
    REQUIRE(tr.size() == traj.size());
    for (std::size_t i = 0; i < tr.size(); ++i) {
      CHECK(tr.times[i] == traj.times[i]);
      CHECK(tr.values[i] == traj.n_rb[i]);
    }
    CHECK_FALSE(tr.has_sigma());
    CHECK(tr.metadata.at("species") == "rb");
  }
  SUBCASE("coarser sampling picks the trajectory samples") {
    const auto tr = synthesize_trace(traj, Species::cr, {}, 4.0);
    CHECK(tr.size() == 81);
    CHECK(tr.values[4] == traj.n_cr[20]);
  }
  SUBCASE("same seed gives the same trace, other seeds differ") {
    const NoiseSpec a{0.05, 10.0, 42};
    const auto t1 = synthesize_trace(traj, Species::rb, a, 20.0);
    const auto t2 = synthesize_trace(traj, Species::rb, a, 20.0);
    CHECK(t1.values == t2.values);
    CHECK(t1.sigma == t2.sigma);
    const auto t3 = synthesize_trace(traj, Species::rb, {0.05, 10.0, 43}, 20.0);
    CHECK(t1.values != t3.values);
  }
}

TEST_CASE("relative noise has the requested spread") {
  std::vector<double> t(10000), x(10000, 1e6);
  std::iota(t.begin(), t.end(), 0.0);
  const auto tr = synthesize_trace(t, x, ValueKind::atom_number, {0.05, 0.0, 2024});
  double mean = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) mean += (tr.values[i] - x[i]) / x[i];
  mean /= static_cast<double>(x.size());
  double var = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = (tr.values[i] - x[i]) / x[i] - mean;
    var += r * r;
  }
  const double sd = std::sqrt(var / static_cast<double>(x.size() - 1));
  CHECK(sd >= 0.04);
  CHECK(sd <= 0.06);
  CHECK(sd == Approx(0.05).epsilon(0.03));
  CHECK(tr.sigma.front() == Approx(5e4));
}

TEST_CASE("noise sigma floor for samples at zero") {
  const std::vector<double> t{0.0, 1.0, 2.0}, x{0.0, 100.0, 200.0};
  const auto tr = synthesize_trace(t, x, ValueKind::atom_number, {0.1, 0.0, 1});
  CHECK(tr.values[0] == 0.0);
  CHECK(tr.sigma[0] == Approx(10.0));
  CHECK(tr.sigma[2] == Approx(20.0));
  CHECK_THROWS(synthesize_trace(t, x, ValueKind::atom_number, {-0.1, 0.0, 1}));
}
