#include "trapkit/overlap_geometry.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace trapkit {

namespace {

constexpr double kInvSqrtPi = std::numbers::inv_sqrtpi;
constexpr double kSqrtTwoOverPi = std::numbers::sqrt2 * std::numbers::inv_sqrtpi;

// Continued fraction erfc(y) = e^{-y^2}/sqrt(pi) / (y + (1/2)/(y + 1/(y + (3/2)/(y + ...)))),
// modified Lentz. Converges quickly for y >= 3.
double erfcx_continued_fraction(double y) {
  constexpr double tiny = 1e-300;
  double f = y;
  double c = y;
  double d = 0.0;
  for (int n = 1; n < 2000; ++n) {
    const double a = 0.5 * n;
    d = y + a * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = y + a / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return kInvSqrtPi / f;
}

}  // namespace

double erfcx(double y) {
  if (std::isnan(y)) return y;
  if (y < 0.0) {
    // erfcx(-y) = 2 e^{y^2} - erfcx(y)
    return 2.0 * std::exp(y * y) - erfcx(-y);
  }
  if (y < 3.0) return std::exp(y * y) * std::erfc(y);
  if (y > 1e8) return kInvSqrtPi / y;
  return erfcx_continued_fraction(y);
}

void MtCloud::validate() const {
  if (!(one_over_e_length > 0.0)) throw std::invalid_argument("MT length z must be > 0");
  if (!(atom_number >= 0.0)) throw std::invalid_argument("atom number must be >= 0");
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be > 0");
  if (!(axial_gradient > 0.0)) throw std::invalid_argument("gradient must be > 0");
}

void MotCloud::validate() const {
  if (!(mean_size > 0.0)) throw std::invalid_argument("MOT size must be > 0");
  if (!(atom_number >= 0.0)) throw std::invalid_argument("atom number must be >= 0");
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be > 0");
}

double varsigma_leading_term(double ratio) {
  return 2.0 * kSqrtTwoOverPi / (ratio * ratio * ratio);
}

double varsigma_asymptotic(double ratio) {
  if (!(ratio > 0.0)) throw std::domain_error("asymptotic series needs ratio > 0");
  // sqrt(2/pi) * sum_{k>=2} (-1)^k (2k-2) (2k-3)!! x^{1-2k}
  const double inv_x2 = 1.0 / (ratio * ratio);
  double power = inv_x2 / ratio;  // x^-3
  double double_factorial = 1.0;  // (2k-3)!! at k = 2
  double sum = 0.0;
  for (int k = 2; k <= 13; ++k) {
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    sum += sign * (2.0 * k - 2.0) * double_factorial * power;
    double_factorial *= 2.0 * k - 1.0;
    power *= inv_x2;
  }
  return kSqrtTwoOverPi * sum;
}

VarsigmaEvaluation evaluate_varsigma(double sigma_bar, double z) {
  if (!(z > 0.0)) throw std::domain_error("z must be > 0");
  if (!(sigma_bar >= 0.0)) throw std::domain_error("sigma_bar must be >= 0");
  const double x = sigma_bar / z;
  if (x > kVarsigmaAsymptoticThreshold) return {varsigma_asymptotic(x), true};
  const double scaled = erfcx(x * std::numbers::sqrt2 / 2.0);
  return {(x * x + 1.0) * scaled - kSqrtTwoOverPi * x, false};
}

double varsigma(double sigma_bar, double z) { return evaluate_varsigma(sigma_bar, z).value; }

double mt_volume(double z) {
  if (!(z > 0.0)) throw std::domain_error("z must be > 0");
  return 8.0 * std::numbers::pi * z * z * z;
}

double effective_volume(double sigma_bar, double z) {
  return mt_volume(z) / varsigma(sigma_bar, z);
}

double effective_volume(const MotCloud& mot, const MtCloud& mt) {
  mot.validate();
  mt.validate();
  return effective_volume(mot.mean_size, mt.one_over_e_length);
}

double overlap_density_factor(double n_cr, double n_rb, double effective_volume) {
  if (!(effective_volume > 0.0)) throw std::domain_error("effective volume must be > 0");
  if (!(n_cr >= 0.0) || !(n_rb >= 0.0)) throw std::domain_error("atom numbers must be >= 0");
  return n_cr * n_rb / effective_volume;
}

double magnetic_potential(double moment, double gradient, double r) {
  if (!(moment >= 0.0) || !(gradient >= 0.0) || !(r >= 0.0)) {
    throw std::domain_error("magnetic potential arguments must be >= 0");
  }
  return moment * gradient * r;
}

}  // namespace trapkit
