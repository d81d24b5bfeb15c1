#include "cpwres/special_functions.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <string>

#include "cpwres/constants.hpp"
#include "cpwres/errors.hpp"

namespace cpwres::special {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void require_finite(double x, const char* fn) {
  if (!std::isfinite(x)) {
    fail(ErrorKind::Domain, std::string(fn) + ": non-finite argument");
  }
}

double i0_series(double x) {
  const double q = 0.25 * x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int m = 1; m < 500; ++m) {
    term *= q / (static_cast<double>(m) * m);
    sum += term;
    if (term < kEps * sum) break;
  }
  return sum;
}

// Hankel expansion e^x / sqrt(2 pi x) * sum ((2k-1)!!)^2 / (k! (8x)^k),
// truncated at its smallest term. Only used for x > 15 where the smallest
// term is below 1e-13.
double i0_asymptotic(double x) {
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 60; ++k) {
    const double odd = 2.0 * k - 1.0;
    const double next = term * odd * odd / (k * 8.0 * x);
    if (next > term) break;
    term = next;
    sum += term;
    if (term < kEps * sum) break;
  }
  return std::exp(x) / std::sqrt(2.0 * constants::pi * x) * sum;
}

// K0(x) = -(ln(x/2) + gamma) I0(x) + sum_{m>=1} H_m (x/2)^{2m} / (m!)^2
double k0_series(double x) {
  const double q = 0.25 * x * x;
  double term = 1.0;
  double harmonic = 0.0;
  double i0 = 1.0;
  double tail = 0.0;
  for (int m = 1; m < 200; ++m) {
    term *= q / (static_cast<double>(m) * m);
    harmonic += 1.0 / m;
    i0 += term;
    tail += harmonic * term;
    if (term * harmonic < kEps * std::abs(tail) && term < kEps * i0) break;
  }
  return -(std::log(0.5 * x) + constants::euler_gamma) * i0 + tail;
}

// Steed's continued fraction (Temme's CF2 normalisation) for order zero.
double k0_continued_fraction(double x) {
  constexpr double a1 = 0.25;  // 1/4 - nu^2 with nu = 0
  double b = 2.0 * (1.0 + x);
  double d = 1.0 / b;
  double h = d;
  double delh = d;
  double q1 = 0.0;
  double q2 = 1.0;
  double q = a1;
  double c = a1;
  double a = -a1;
  double s = 1.0 + q * delh;
  for (int i = 1; i < 10000; ++i) {
    a -= 2 * i;
    c = -a * c / (i + 1.0);
    const double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const double dels = q * delh;
    s += dels;
    if (std::abs(dels / s) < kEps) break;
  }
  return std::sqrt(constants::pi / (2.0 * x)) * std::exp(-x) / s;
}

}  // namespace

double ellip_k(double modulus) {
  require_finite(modulus, "ellip_k");
  if (modulus < 0.0 || modulus >= 1.0) {
    fail(ErrorKind::Domain, "ellip_k: modulus must lie in [0, 1)");
  }
  double a = 1.0;
  double g = std::sqrt((1.0 - modulus) * (1.0 + modulus));
  for (int i = 0; i < 64; ++i) {
    const double an = 0.5 * (a + g);
    const double gn = std::sqrt(a * g);
    a = an;
    g = gn;
    if (std::abs(a - g) <= 4.0 * kEps * a) break;
  }
  return constants::pi / (a + g);
}

double bessel_i0(double x) {
  require_finite(x, "bessel_i0");
  if (x < 0.0) fail(ErrorKind::Domain, "bessel_i0: x must be >= 0");
  return x <= 15.0 ? i0_series(x) : i0_asymptotic(x);
}

double bessel_k0(double x) {
  require_finite(x, "bessel_k0");
  if (x <= 0.0) fail(ErrorKind::Domain, "bessel_k0: x must be > 0");
  return x <= 2.0 ? k0_series(x) : k0_continued_fraction(x);
}

double digamma_real_part_half_plus_iy(double y) {
  require_finite(y, "digamma_real_part_half_plus_iy");
  // Shift the argument to |z| >= 10 with psi(z) = psi(z + N) - sum 1/(z + k),
  // then use the asymptotic series with Bernoulli numbers B2..B16.
  constexpr int kShift = 10;
  const double y2 = y * y;
  double shift_sum = 0.0;
  for (int k = 0; k < kShift; ++k) {
    const double re = 0.5 + k;
    shift_sum += re / (re * re + y2);
  }
  const std::complex<double> w(0.5 + kShift, y);
  const std::complex<double> inv = 1.0 / w;
  const std::complex<double> inv2 = inv * inv;
  // B_{2k} / (2k), k = 1..8
  static constexpr double coeff[] = {
      1.0 / 12.0,      -1.0 / 120.0,    1.0 / 252.0,       -1.0 / 240.0,
      1.0 / 132.0,     -691.0 / 32760.0, 1.0 / 12.0,       -3617.0 / 8160.0};
  std::complex<double> series = 0.0;
  std::complex<double> p = inv2;
  for (double ck : coeff) {
    series += ck * p;
    p *= inv2;
  }
  const std::complex<double> psi = std::log(w) - 0.5 * inv - series;
  return psi.real() - shift_sum;
}

double coth(double x) {
  require_finite(x, "coth");
  if (x <= 0.0) fail(ErrorKind::Domain, "coth: x must be > 0");
  // coth x = 1 + 2 / (e^{2x} - 1); expm1 keeps precision for small x and
  // saturates to +inf (giving exactly 1) for large x.
  return 1.0 + 2.0 / std::expm1(2.0 * x);
}

}  // namespace cpwres::special
