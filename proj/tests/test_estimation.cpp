#include <doctest.h>

#include <cmath>

#include "synthetic.hpp"
#include "trapkit/dynamics.hpp"
#include "trapkit/estimation.hpp"
#include "trapkit/overlap_geometry.hpp"

using namespace trapkit;
using namespace trapkit::testing;
using doctest::Approx;

namespace {

double rel(double a, double b) { return std::fabs(a - b) / std::fabs(b); }

DataTrace clean_trace(const std::vector<double>& t, const std::vector<double>& v,
                      ValueKind kind = ValueKind::atom_number) {
  DataTrace tr;
  tr.times = t;
  tr.values = v;
  tr.kind = kind;
  return tr;
}

DataTrace loading(double l, double g, double n0, double duration, double rate) {
  const auto t = uniform_times(duration, rate);
  std::vector<double> v;
  for (double ti : t) v.push_back(one_body_loading(l, g, n0, ti));
  return clean_trace(t, v);
}

DataTrace decay(double g, double n0, double duration, double rate) {
  const auto t = uniform_times(duration, rate);
  std::vector<double> v;
  for (double ti : t) v.push_back(one_body_decay(g, n0, ti));
  return clean_trace(t, v);
}

DataTrace ramp(double rate_k_per_s, double t0_k, double duration) {
  const auto t = uniform_times(duration, 2.0);
  std::vector<double> v;
  for (double ti : t) v.push_back(t0_k + rate_k_per_s * ti);
  return clean_trace(t, v, ValueKind::temperature);
}

}  // namespace

TEST_CASE("loading fit recovers noiseless parameters") {
  const auto fit = fit_loading(loading(2.6e4, 1.0 / 9.0, 0.0, 40.0, 5.0));
  CHECK(fit.converged);
  CHECK(fit.authoritative());
  CHECK(rel(fit.value("loading_rate"), 2.6e4) < 1e-6);
  CHECK(rel(fit.value("gamma"), 1.0 / 9.0) < 1e-6);
  CHECK(rel(fit.value("steady_state"), 2.34e5) < 1e-6);
  CHECK(rel(fit.value("lifetime"), 9.0) < 1e-6);
  CHECK(fit.value("steady_state") == Approx(2.3e5).epsilon(0.02));
  CHECK(fit.dof == 201 - 2);
  for (const auto& p : fit.parameters) CHECK(p.sigma >= 0.0);
}

TEST_CASE("loading fit with a free initial number") {
  LoadingFitOptions opt;
  opt.fit_initial_number = true;
  const auto fit = fit_loading(loading(2.6e4, 1.0 / 9.0, 3e4, 40.0, 5.0), opt);
  CHECK(rel(fit.value("initial_number"), 3e4) < 1e-6);
  CHECK(rel(fit.value("loading_rate"), 2.6e4) < 1e-6);
  opt.fit_initial_number = false;
  opt.initial_number = 3e4;
  CHECK(rel(fit_loading(loading(2.6e4, 1.0 / 9.0, 3e4, 40.0, 5.0), opt).value("gamma"),
            1.0 / 9.0) < 1e-6);
}

TEST_CASE("loading fit errors and flags") {
  const auto t = uniform_times(10.0, 2.0);
  CHECK_THROWS_AS(fit_loading(clean_trace(t, std::vector<double>(t.size(), 5.0))), FitError);
  CHECK_THROWS_AS(fit_loading(ramp(4e-6, 1e-4, 10.0)), FitError);
  CHECK_THROWS_AS(fit_loading(loading(2.6e4, 0.1, 0.0, 2.0, 2.0)), FitError);  // 5 points
  const auto short_fit = fit_loading(loading(2.6e4, 1.0 / 9.0, 0.0, 3.0, 20.0));
  CHECK(short_fit.has_flag("span_shorter_than_lifetime"));
}

TEST_CASE("loading fit covariance is calibrated") {
  int within2 = 0, within3_l = 0, within3_g = 0;
  const double l = 2.6e4, g = 1.0 / 9.0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto fit = fit_loading(noisy_loading_trace(l, g, 0.05, seed));
    REQUIRE(fit.converged);
    within3_l += std::fabs(fit.value("loading_rate") - l) <= 3.0 * fit.sigma("loading_rate");
    within3_g += std::fabs(fit.value("gamma") - g) <= 3.0 * fit.sigma("gamma");
    within2 += std::fabs(fit.value("gamma") - g) <= 2.0 * fit.sigma("gamma");
  }
  CHECK(within3_l >= 95);
  CHECK(within3_g >= 95);
  CHECK(within2 >= 90);
}

TEST_CASE("decay fit") {
  const auto fit = fit_decay(decay(0.1, 5e7, 40.0, 5.0));
  CHECK(fit.converged);
  CHECK(rel(fit.value("gamma"), 0.1) < 1e-6);
  CHECK(rel(fit.value("initial_number"), 5e7) < 1e-6);
  CHECK(rel(fit.value("lifetime"), 10.0) < 1e-6);
  const auto t = uniform_times(10.0, 2.0);
  CHECK_THROWS_AS(fit_decay(clean_trace(t, std::vector<double>(t.size(), 7.0))), FitError);
}

TEST_CASE("decay fit covariance is calibrated") {
  const auto base = decay(0.1, 5e7, 40.0, 5.0);
  int within2 = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto noisy =
        synthesize_trace(base.times, base.values, ValueKind::atom_number, {0.05, 0.0, seed});
    const auto fit = fit_decay(noisy);
    REQUIRE(fit.converged);
    within2 += std::fabs(fit.value("gamma") - 0.1) <= 2.0 * fit.sigma("gamma");
  }
  CHECK(within2 >= 90);
}

TEST_CASE("one-body fit of a Cr trace with Rb present sees a shorter lifetime") {
  TwoSpeciesModel m;
  m.loading_rate_rb = 2.6e4;
  m.gamma_rb = 1.0 / 9.0;
  m.gamma_cr = 0.1;
  m.beta_rbcr = 1.4e-17;
  m.beta_crrb = 1e-15;
  m.overlap = CloudGeometry{1e-3, 1e-3};
  const auto traj = integrate_coupled(m, 5e7, 0.0, 40.0, 5.0);
  const auto fit = fit_decay(synthesize_trace(traj, Species::cr, {}, 5.0));
  CHECK(fit.value("lifetime") < 10.0);
}

TEST_CASE("heating-rate fit") {
  const auto fit = fit_heating_rate(ramp(4e-6, 100e-6, 20.0));
  CHECK(fit.value("rate") == Approx(4e-6).epsilon(1e-9));
  CHECK(fit.value("initial_temperature") == Approx(100e-6).epsilon(1e-9));
  CHECK(fit_heating_rate(ramp(0.0, 100e-6, 20.0)).value("rate") == Approx(0.0).scale(1e-6));
  const auto with = fit_heating_rate(ramp(8e-6, 100e-6, 20.0));
  const auto excess = heating_rate_excess(with, fit);
  CHECK(excess.value == Approx(4e-6).epsilon(1e-9));
  CHECK(excess.unit == "K/s");
  CHECK_THROWS_AS(fit_heating_rate(decay(0.1, 5e7, 10.0, 1.0)), FitError);
  const std::vector<double> t{0.0, 1.0, 2.0};
  CHECK_THROWS_AS(fit_heating_rate(clean_trace(t, {1e-4, 1e-4, 1e-4}, ValueKind::temperature)),
                  FitError);
}

TEST_CASE("gamma_p extraction") {
  CHECK(extract_gamma_p(0.11, 0.11).value == 0.0);
  CHECK(extract_gamma_p(0.70, 0.11).value == Approx(0.59));
  const auto neg = extract_gamma_p(0.10, 0.11);
  CHECK(neg.value == Approx(-0.01));
  CHECK(neg.flagged());
  CHECK(neg.flags.front() == "below_background");
  CHECK_THROWS(extract_gamma_p(-0.1, 0.1));
}

TEST_CASE("sigma_p round trip on the noiseless grid") {
  const auto runs = sigma_p_grid(1.1e-21, 0.11);
  const auto res = extract_sigma_p(runs, BackgroundRates::constant(0.11), {});
  CHECK(res.groups.size() == 4);
  CHECK(rel(res.pooled.value("cross_section"), 1.1e-21) < 1e-6);
  for (const auto& g : res.groups) CHECK(rel(g.cross_section, 1.1e-21) < 1e-6);
  CHECK(res.pooled.metadata.at("relative_systematic") == 0.2);
  CHECK(res.warnings.empty());

  // Pooled background from the I_p = 0 runs gives the same answer.
  const auto pooled = extract_sigma_p(runs, BackgroundRates::from_runs(runs, true), {});
  CHECK(rel(pooled.pooled.value("cross_section"), 1.1e-21) < 1e-6);
  const auto per = extract_sigma_p(runs, BackgroundRates::from_runs(runs, false), {});
  CHECK(rel(per.pooled.value("cross_section"), 1.1e-21) < 1e-6);
}

TEST_CASE("sigma_p is zero when nothing ionizes") {
  auto runs = sigma_p_grid(0.0, 0.11);
  const auto res = extract_sigma_p(runs, BackgroundRates::constant(0.11), {});
  CHECK(res.pooled.value("cross_section") == Approx(0.0).scale(1e-21));
}

TEST_CASE("sigma_p is invariant under a common background offset") {
  auto runs = sigma_p_grid(1.1e-21, 0.11);
  const double a = extract_sigma_p(runs, BackgroundRates::constant(0.11), {})
                       .pooled.value("cross_section");
  for (auto& r : runs) r.gamma_total += 0.37;
  const double b = extract_sigma_p(runs, BackgroundRates::constant(0.48), {})
                       .pooled.value("cross_section");
  CHECK(b == Approx(a).epsilon(1e-9));
}

TEST_CASE("sigma_p free-intercept diagnostic") {
  SigmaPOptions opt;
  opt.free_intercept_diagnostic = true;
  const auto clean = extract_sigma_p(sigma_p_grid(1.1e-21, 0.11),
                                     BackgroundRates::constant(0.11), {}, opt);
  for (const auto& g : clean.groups) {
    REQUIRE(g.has_free_fit);
    CHECK(std::fabs(g.free_intercept) < 1e-9);
    CHECK(rel(g.free_slope, 1.1e-21) < 1e-6);
  }
  // A wrong background shows up as an intercept.
  const auto off = extract_sigma_p(sigma_p_grid(1.1e-21, 0.11),
                                   BackgroundRates::constant(0.05), {}, opt);
  for (const auto& g : off.groups) CHECK(g.free_intercept > 0.0);
}

TEST_CASE("sigma_p group handling") {
  SUBCASE("single group with two points is a valid fit") {
    std::vector<SigmaPRun> runs = sigma_p_grid(1.1e-21, 0.11);
    std::vector<SigmaPRun> two{runs[1], runs[4]};
    two[0].gamma_total *= 1.02;  // some scatter
    const auto res = extract_sigma_p(two, BackgroundRates::constant(0.11), {});
    CHECK(res.groups.size() == 1);
    CHECK(res.pooled.sigma("cross_section") > 0.0);
    CHECK(rel(res.pooled.value("cross_section"), 1.1e-21) < 0.05);
  }
  SUBCASE("groups without two distinct fluxes are skipped") {
    std::vector<SigmaPRun> runs = sigma_p_grid(1.1e-21, 0.11);
    std::vector<SigmaPRun> some(runs.begin(), runs.begin() + 10);
    some.push_back(runs[12]);  // lone run of the third group
    const auto res = extract_sigma_p(some, BackgroundRates::constant(0.11), {});
    CHECK(res.groups.size() == 2);
    CHECK(res.pooled.has_flag("groups_skipped"));
    CHECK(res.warnings.size() == 1);
  }
  SUBCASE("no ionizing light at all is an error") {
    std::vector<SigmaPRun> runs;
    for (const auto& r : sigma_p_grid(1.1e-21, 0.11)) {
      if (r.ionizing_intensity == 0.0) runs.push_back(r);
    }
    CHECK_THROWS_AS(extract_sigma_p(runs, BackgroundRates::constant(0.11), {}), FitError);
  }
  SUBCASE("sub-threshold ionizing light is an error") {
    SigmaPSetup setup;
    setup.ionizing_wavelength = 780e-9;
    CHECK_THROWS_AS(extract_sigma_p(sigma_p_grid(1.1e-21, 0.11), BackgroundRates::constant(0.11),
                                    setup),
                    FitError);
  }
}

TEST_CASE("sigma_p covariance is calibrated") {
  int within2 = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto runs = noisy_sigma_p_grid(1.1e-21, 0.11, 0.05, seed);
    const auto res = extract_sigma_p(runs, BackgroundRates::constant(0.11), {});
    within2 += std::fabs(res.pooled.value("cross_section") - 1.1e-21) <=
               2.0 * res.pooled.sigma("cross_section");
  }
  CHECK(within2 >= 90);
}

TEST_CASE("detuning sweep brackets the central value") {
  const auto runs = sigma_p_grid(1.1e-21, 0.11);
  SigmaPSetup setup;
  const auto sw = sigma_p_detuning_sweep(runs, BackgroundRates::constant(0.11), setup,
                                         0.25 * setup.transition.natural_linewidth);
  // Smaller detuning means more excited population, hence a smaller sigma_p.
  CHECK(sw.cross_section_low < sw.cross_section_center);
  CHECK(sw.cross_section_high > sw.cross_section_center);
  CHECK(rel(sw.cross_section_center, 1.1e-21) < 1e-6);
}

TEST_CASE("mean relative speed and inelastic cross section") {
  const double mc = constants::mass_cr52, mr = constants::mass_rb87;
  CHECK(mean_relative_speed(0.0, mc, 0.0, mr) == 0.0);
  const double v = mean_relative_speed(100e-6, mc, 320e-6, mr);
  CHECK(v == Approx(0.344559).epsilon(1e-5));
  const double single = std::sqrt(8.0 * constants::boltzmann_k * 1e-4 / (constants::pi * mc));
  CHECK(mean_relative_speed(1e-4, mc, 1e-4, mc) == Approx(std::sqrt(2.0) * single).epsilon(1e-14));
  CHECK(inelastic_cross_section(0.0, v) == 0.0);
  CHECK(inelastic_cross_section(1.4e-17, 0.344) == Approx(4.07e-17).epsilon(1e-3));
  CHECK(inelastic_cross_section(3.0 * 1.4e-17, v) ==
        Approx(3.0 * inelastic_cross_section(1.4e-17, v)).epsilon(1e-15));
  CHECK_THROWS(inelastic_cross_section(1e-17, 0.0));
}

TEST_CASE("beta_RbCr from the initial slope") {
  CHECK(extract_beta_rbcr(2.6e4, 2.6e4, 1e21).value == 0.0);
  CHECK(extract_beta_rbcr(1.2e4, 2.6e4, 1e21).value == Approx(1.4e-17).epsilon(1e-12));
  const auto neg = extract_beta_rbcr(3e4, 2.6e4, 1e21);
  CHECK(neg.value < 0.0);
  CHECK(neg.flags.front() == "unphysical");
  CHECK_THROWS(extract_beta_rbcr(1e4, 2.6e4, 0.0));
}

TEST_CASE("slope extraction is exact when the overlap factor is constant") {
  TwoSpeciesModel m;
  m.loading_rate_rb = 2.6e4;
  m.gamma_rb = 1.0 / 9.0;
  m.gamma_cr = 0.1;
  m.beta_rbcr = 1.4e-17;
  m.beta_crrb = 1e-15;
  m.overlap = FixedVolume{1.012e-7};
  m.constant_factor = 1e21;
  const auto traj = integrate_coupled(m, 5e7, 0.0, 1.0, 20.0);
  const double alpha = initial_slope(traj, Species::rb, 1.0, m.gamma_rb);
  CHECK(rel(extract_beta_rbcr(alpha, m.loading_rate_rb, 1e21).value, 1.4e-17) < 1e-6);
}

TEST_CASE("beta_CrRb bounds") {
  const auto same = beta_crrb_bounds(1e5, 1e20, 1e20);
  CHECK(same.lower == same.upper);
  const auto zero = beta_crrb_bounds(0.0, 1e20, 2e20);
  CHECK(zero.lower == 0.0);
  CHECK(zero.upper == 0.0);
  const auto b = beta_crrb_bounds(1e5, 1e20, 2e20);
  CHECK(b.lower == Approx(5e-16));
  CHECK(b.upper == Approx(1e-15));
  CHECK(beta_crrb_bounds(-1.0, 1e20, 2e20).flags.front() == "unphysical");
  CHECK_THROWS(beta_crrb_bounds(1e5, 2e20, 1e20));
  CHECK_THROWS(beta_crrb_bounds(1e5, 0.0, 1e20));
}

TEST_CASE("excess loss rate from a pair of traces") {
  // Without: constant 1e6. With: loses 100 atoms/s linearly.
  const auto t = uniform_times(40.0, 2.0);
  std::vector<double> without(t.size(), 1e6), with;
  for (double ti : t) with.push_back(1e6 - 100.0 * ti);
  const auto ex = excess_loss_rate(clean_trace(t, without), clean_trace(t, with), 20.0, 30.0);
  CHECK(ex.value == Approx(100.0).epsilon(1e-12));
  CHECK_FALSE(ex.flagged());
  const auto rev = excess_loss_rate(clean_trace(t, with), clean_trace(t, without), 20.0, 30.0);
  CHECK(rev.flags.front() == "negative_excess");
  CHECK_THROWS(excess_loss_rate(clean_trace(t, without), clean_trace(t, with), 30.0, 20.0));
  CHECK_THROWS(excess_loss_rate(clean_trace(t, without), clean_trace(t, with), 50.0, 60.0));
}

TEST_CASE("energy partition") {
  CHECK(energy_partition(1.0, 1.0) == 0.5);
  CHECK(energy_partition(52.0, 87.0) == Approx(87.0 / 139.0).epsilon(1e-15));
  CHECK(energy_partition(constants::mass_cr52, constants::mass_rb87) ==
        Approx(0.625923).epsilon(1e-6));
  for (double a : {1.0, 3.0, 52.0, 86.909180527, 1e-27, 7.7}) {
    for (double b : {2.0, 51.9405075, 87.0, 1.3e-25, 7.7}) {
      CHECK(energy_partition(a, b) + energy_partition(b, a) == 1.0);
    }
  }
  CHECK_THROWS(energy_partition(0.0, 1.0));
}

TEST_CASE("Zeeman release energy") {
  CHECK(zeeman_release_energy(0.0, ZeemanChannel::ground) == 0.0);
  const double e = zeeman_release_energy(1e-4, ZeemanChannel::ground);
  CHECK(e == Approx(1.3911e-27).epsilon(1e-4));
  CHECK(e / constants::boltzmann_k == Approx(100.76e-6).epsilon(1e-4));
  for (double b : {1e-6, 1e-4, 0.3}) {
    CHECK(zeeman_release_energy(b, ZeemanChannel::ground) /
              zeeman_release_energy(b, ZeemanChannel::excited) ==
          Approx(9.0 / 8.0).epsilon(1e-15));
  }
  CHECK_THROWS(zeeman_release_energy(-1.0, ZeemanChannel::ground));
}
