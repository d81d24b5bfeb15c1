#pragma once

// Independent reference implementations used only by tests. They use
// different algorithms (quadrature, power series, direct sums) and long
// double arithmetic so that agreement with the library is meaningful.

#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

using ld = long double;

inline constexpr ld kPi = 3.141592653589793238462643383279502884L;
inline constexpr ld kEuler = 0.577215664901532860606512090082402431L;

// K(k) by the arithmetic-geometric mean, K = pi / (2 AGM(1, k')).
inline ld ellip_k_agm(ld k) {
  ld a = 1.0L, b = std::sqrt((1.0L - k) * (1.0L + k));
  for (int i = 0; i < 64 && std::fabs(a - b) > 1e-19L * a; ++i) {
    const ld an = 0.5L * (a + b);
    b = std::sqrt(a * b);
    a = an;
  }
  return kPi / (2.0L * a);
}

// K(k) = (pi/2) sum [(2n)! / (2^{2n} n!^2)]^2 k^{2n}; use for k <= 0.9.
inline ld ellip_k_series(ld k) {
  ld term = 1.0L, sum = 1.0L;
  const ld k2 = k * k;
  for (int n = 1; n < 20000; ++n) {
    const ld r = (2.0L * n - 1.0L) / (2.0L * n);
    term *= r * r * k2;
    sum += term;
    if (term < 1e-22L * sum) break;
  }
  return 0.5L * kPi * sum;
}

// K(k) by trapezoidal quadrature of the periodic integrand
// 1/sqrt(1 - k^2 sin^2 t) over [0, pi/2]; spectrally accurate.
inline ld ellip_k_quadrature(ld k, int n = 4000) {
  const ld h = 0.5L * kPi / n;
  ld sum = 0.0L;
  for (int i = 0; i <= n; ++i) {
    const ld s = std::sin(i * h);
    const ld f = 1.0L / std::sqrt(1.0L - k * k * s * s);
    sum += (i == 0 || i == n) ? 0.5L * f : f;
  }
  return sum * h;
}

// I0(x) = sum (x^2/4)^k / (k!)^2.
inline ld bessel_i0_series(ld x) {
  const ld q = 0.25L * x * x;
  ld term = 1.0L, sum = 1.0L;
  for (int k = 1; k < 2000; ++k) {
    term *= q / (static_cast<ld>(k) * k);
    sum += term;
    if (term < 1e-21L * sum) break;
  }
  return sum;
}

// I0(x) = (1/pi) int_0^pi exp(x cos t) dt, trapezoidal (periodic integrand).
inline ld bessel_i0_integral(ld x, int n = 2000) {
  const ld h = kPi / n;
  ld sum = 0.0L;
  for (int i = 0; i <= n; ++i) {
    const ld f = std::exp(x * std::cos(i * h));
    sum += (i == 0 || i == n) ? 0.5L * f : f;
  }
  return sum * h / kPi;
}

// K0(x) = -(ln(x/2) + gamma) I0(x) + sum (x^2/4)^k / (k!)^2 H_k; small x.
inline ld bessel_k0_series(ld x) {
  const ld q = 0.25L * x * x;
  ld term = 1.0L, harmonic = 0.0L, sum = 0.0L;
  for (int k = 1; k < 2000; ++k) {
    term *= q / (static_cast<ld>(k) * k);
    harmonic += 1.0L / k;
    sum += term * harmonic;
    if (term * harmonic < 1e-21L * (sum + 1e-300L)) break;
  }
  return -(std::log(0.5L * x) + kEuler) * bessel_i0_series(x) + sum;
}

// K0(x) = int_0^inf exp(-x cosh t) dt, trapezoidal with double-exponential
// decay; accurate for any x > 0.
inline ld bessel_k0_integral(ld x) {
  const ld h = 1.0L / 512.0L;
  ld sum = 0.5L * std::exp(-x);
  for (int i = 1; i < 200000; ++i) {
    const ld f = std::exp(-x * std::cosh(i * h));
    sum += f;
    if (f < 1e-30L * sum) break;
  }
  return sum * h;
}

// Riemann zeta for s > 1 by direct sum with an Euler-Maclaurin tail.
inline ld zeta(ld s) {
  const int N = 64;
  ld sum = 0.0L;
  for (int n = 1; n < N; ++n) sum += std::pow(static_cast<ld>(n), -s);
  const ld Nl = N;
  sum += std::pow(Nl, 1.0L - s) / (s - 1.0L) + 0.5L * std::pow(Nl, -s);
  // Bernoulli corrections B2/2!, B4/4!, B6/6!
  sum += s / 12.0L * std::pow(Nl, -s - 1.0L);
  sum -= s * (s + 1.0L) * (s + 2.0L) / 720.0L * std::pow(Nl, -s - 3.0L);
  sum += s * (s + 1.0L) * (s + 2.0L) * (s + 3.0L) * (s + 4.0L) / 30240.0L * std::pow(Nl, -s - 5.0L);
  return sum;
}

// psi(1/2) = -gamma - 2 ln 2.
inline ld digamma_half() { return -kEuler - 2.0L * std::log(2.0L); }

// Re psi(1/2 + i y) = psi(1/2) + sum_{k>=1} (-1)^{k+1} (2^{2k+1} - 1) zeta(2k+1) y^{2k},
// Taylor series about y = 0, convergent for |y| < 1/2.
inline ld re_digamma_taylor(ld y, int terms = 60) {
  ld sum = digamma_half();
  ld y2k = 1.0L;
  for (int k = 1; k <= terms; ++k) {
    y2k *= y * y;
    const ld c = (std::pow(2.0L, 2 * k + 1) - 1.0L) * zeta(2.0L * k + 1.0L) * y2k;
    sum += (k % 2 ? c : -c);
    if (std::fabs(c) < 1e-22L) break;
  }
  return sum;
}

// Re psi(1/2 + i y) from psi(z) = -gamma + sum_{n>=0} [1/(n+1) - 1/(n+z)],
// summed to N with an Euler-Maclaurin tail; valid for any y.
inline ld re_digamma_series(ld y, long N = 200000) {
  auto f = [y](ld n) {
    const ld a = n + 0.5L;
    return 1.0L / (n + 1.0L) - a / (a * a + y * y);
  };
  auto df = [y](ld n) {
    const ld a = n + 0.5L;
    const ld d = a * a + y * y;
    return -1.0L / ((n + 1.0L) * (n + 1.0L)) - (y * y - a * a) / (d * d);
  };
  ld sum = 0.0L;
  for (long n = N - 1; n >= 0; --n) sum += f(static_cast<ld>(n));
  const ld Nl = static_cast<ld>(N);
  const ld a = Nl + 0.5L;
  const ld integral = -std::log(Nl + 1.0L) + 0.5L * std::log(a * a + y * y);
  sum += integral + 0.5L * f(Nl) - df(Nl) / 12.0L;
  return -kEuler + sum;
}

// Low-temperature Mattis-Bardeen loss re-evaluated with the series/integral
// Bessel oracles in long double.
inline ld mattis_bardeen(ld T, ld f_r, ld T_c, ld gamma) {
  const ld kB = 1.380649e-23L, hbar = 1.054571817e-34L;
  const ld delta = 1.76L * kB * T_c;
  const ld zeta_ = delta / (kB * T);
  const ld xi = hbar * 2.0L * kPi * f_r / (2.0L * kB * T);
  const ld k0 = xi < 2.0L ? bessel_k0_series(xi) : bessel_k0_integral(xi);
  const ld i0 = bessel_i0_series(xi);
  const ld e = std::exp(-zeta_);
  return 2.0L * gamma / kPi * e * std::sinh(xi) * k0 /
         (1.0L - e * (std::sqrt(2.0L * kPi / zeta_) - 2.0L * std::exp(-xi) * i0));
}

// Solves the symmetric positive definite system A x = b by Gauss-Jordan
// elimination with partial pivoting (small dense systems only).
inline std::vector<ld> solve(std::vector<std::vector<ld>> A, std::vector<ld> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::fabs(A[r][c]) > std::fabs(A[p][c])) p = r;
    }
    std::swap(A[c], A[p]);
    std::swap(b[c], b[p]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const ld m = A[r][c] / A[c][c];
      for (std::size_t k = c; k < n; ++k) A[r][k] -= m * A[c][k];
      b[r] -= m * b[c];
    }
  }
  for (std::size_t i = 0; i < n; ++i) b[i] /= A[i][i];
  return b;
}

inline std::vector<std::vector<ld>> inverse(const std::vector<std::vector<ld>>& A) {
  const std::size_t n = A.size();
  std::vector<std::vector<ld>> out(n, std::vector<ld>(n));
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<ld> e(n, 0.0L);
    e[j] = 1.0L;
    const auto col = solve(A, e);
    for (std::size_t i = 0; i < n; ++i) out[i][j] = col[i];
  }
  return out;
}

}  // namespace oracle
