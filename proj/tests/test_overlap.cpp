#include <doctest.h>

#include <boost/math/special_functions/erf.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>

#include "trapkit/overlap_geometry.hpp"
#include "trapkit/units.hpp"

using namespace trapkit;
using doctest::Approx;
using Big = boost::multiprecision::cpp_bin_float_100;

namespace {

// e^{x^2/2} (x^2 + 1) erfc(x / sqrt 2) - sqrt(2/pi) x at 100 digits.
double varsigma_oracle(double x_in) {
  const Big x = x_in;
  const Big pi = boost::math::constants::pi<Big>();
  const Big e = exp(x * x / 2) * (x * x + 1) * boost::math::erfc(x / sqrt(Big(2)));
  return static_cast<double>(e - sqrt(Big(2) / pi) * x);
}

double erfcx_oracle(double y_in) {
  const Big y = y_in;
  return static_cast<double>(exp(y * y) * boost::math::erfc(y));
}

double rel(double a, double b) { return std::fabs(a - b) / std::fabs(b); }

}  // namespace

TEST_CASE("erfcx matches a 100-digit evaluation") {
  for (double y : {-5.0, -1.0, -0.1, 0.0, 0.3, 1.0, 2.5, 2.999, 3.0, 3.001, 5.0, 10.0, 17.7,
                   50.0, 1e3}) {
    CAPTURE(y);
    CHECK(rel(erfcx(y), erfcx_oracle(y)) < 1e-13);
  }
  // Beyond the oracle's exponent range: 1/(sqrt(pi) y) (1 - 1/(2 y^2)).
  CHECK(erfcx(1e6) == Approx(1.0 / (std::sqrt(constants::pi) * 1e6)).epsilon(1e-12));
  CHECK(erfcx(1e10) == Approx(1.0 / (std::sqrt(constants::pi) * 1e10)).epsilon(1e-15));
  CHECK(std::isnan(erfcx(std::nan(""))));
}

TEST_CASE("varsigma at zero is exactly one") {
  CHECK(varsigma(0.0, 1e-3) == 1.0);
  const auto e = evaluate_varsigma(0.0, 1.0);
  CHECK(e.value == 1.0);
  CHECK_FALSE(e.asymptotic);
}

TEST_CASE("varsigma reproduces frozen high-precision values") {
  struct Row {
    double x, value;
  };
  // 80-digit reference values.
  const Row rows[] = {{0.5, 0.47510480639956249663},   {1.0, 0.24842860665762813085},
                      {2.0, 0.085250890625975352512},  {5.0, 0.010381054686000610757},
                      {8.0, 0.0028545211923183279217}, {10.0, 0.0015066004513190359938},
                      {15.0, 0.00046061560892926184145}, {20.0, 0.00019653390097221927318},
                      {24.0, 0.00011424765093077537023}, {25.0, 0.00010116037592338024625},
                      {30.0, 0.000058711792836605878037}};
  for (const auto& r : rows) {
    CAPTURE(r.x);
    CHECK(rel(varsigma(r.x * 1e-3, 1e-3), r.value) < 1e-10);
    CHECK(rel(varsigma_oracle(r.x), r.value) < 1e-15);
  }
}

TEST_CASE("varsigma tracks the oracle across both branches") {
  for (int i = 1; i <= 200; ++i) {
    const double x = 0.2 * i;
    CAPTURE(x);
    CHECK(rel(varsigma(x, 1.0), varsigma_oracle(x)) < 1e-10);
  }
}

TEST_CASE("asymptotic series accuracy") {
  CHECK(rel(varsigma_asymptotic(20.0), varsigma_oracle(20.0)) < 1e-2);
  CHECK(rel(varsigma_asymptotic(25.0), varsigma_oracle(25.0)) < 1e-3);
  for (double x : {20.0, 22.0, 25.0, 30.0, 50.0, 100.0}) {
    CAPTURE(x);
    CHECK(rel(varsigma_asymptotic(x), varsigma_oracle(x)) < 1e-12);
  }
}

TEST_CASE("leading asymptotic term") {
  // Relative error of the leading term is about 3 / x^2.
  CHECK(rel(varsigma_leading_term(20.0), varsigma_oracle(20.0)) == Approx(0.0149).epsilon(0.02));
  for (double x = 25.0; x <= 60.0; x += 2.5) {
    CAPTURE(x);
    CHECK(rel(varsigma_leading_term(x), varsigma_oracle(x)) < 1e-2);
  }
}

TEST_CASE("branch switch is continuous") {
  const double t = kVarsigmaAsymptoticThreshold;
  const auto below = evaluate_varsigma(t, 1.0);
  const auto above = evaluate_varsigma(std::nextafter(t, 100.0), 1.0);
  CHECK_FALSE(below.asymptotic);
  CHECK(above.asymptotic);
  CHECK(rel(above.value, below.value) < 1e-6);
  CHECK(rel(varsigma_asymptotic(t), below.value) < 1e-6);
}

TEST_CASE("varsigma is strictly decreasing") {
  double prev = 2.0;
  for (int i = 0; i < 100; ++i) {
    const double x = 40.0 * i / 99.0;
    const double v = varsigma(x, 1.0);
    CHECK(v < prev);
    CHECK(v > 0.0);
    prev = v;
  }
  // Fine grid across the branch switch.
  prev = varsigma(24.9, 1.0);
  for (int i = 1; i <= 200; ++i) {
    const double v = varsigma(24.9 + i * 0.001, 1.0);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("varsigma depends on the ratio only") {
  for (double z : {1e-6, 1e-3, 1.0, 10.0}) {
    CHECK(varsigma(2.0 * z, z) == Approx(varsigma(2.0, 1.0)).epsilon(1e-14));
  }
  CHECK_THROWS(varsigma(1.0, 0.0));
  CHECK_THROWS(varsigma(-1.0, 1.0));
}

TEST_CASE("volumes and overlap factor") {
  CHECK(mt_volume(1e-3) == Approx(8.0 * constants::pi * 1e-9).epsilon(1e-15));
  CHECK(effective_volume(0.0, 1e-3) == mt_volume(1e-3));
  CHECK(effective_volume(1e-3, 1e-3) == Approx(1.011669e-7).epsilon(1e-6));
  CHECK(varsigma(1e-3, 1e-3) == Approx(0.2484).epsilon(1e-4));
  CHECK(overlap_density_factor(5e7, 2.3e5, effective_volume(1e-3, 1e-3)) ==
        Approx(1.13674e20).epsilon(1e-5));
  CHECK_THROWS(overlap_density_factor(1.0, 1.0, 0.0));
  CHECK_THROWS(mt_volume(0.0));

  const MotCloud mot{1e-3, 2.3e5, 320e-6};
  const MtCloud mt{1e-3, 5e7, 100e-6, 6.0 * constants::bohr_magneton, 0.25};
  CHECK(effective_volume(mot, mt) == effective_volume(1e-3, 1e-3));
  MtCloud bad = mt;
  bad.one_over_e_length = 0.0;
  CHECK_THROWS(effective_volume(mot, bad));
}

TEST_CASE("magnetic potential of a trapped Cr atom") {
  const double u = magnetic_potential(6.0 * constants::bohr_magneton, 0.25, 1e-3);
  CHECK(u == Approx(1.3911e-26).epsilon(1e-4));
  CHECK(u / constants::boltzmann_k == Approx(1.0076e-3).epsilon(1e-4));
}
