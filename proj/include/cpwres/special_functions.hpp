#pragma once

// Transcendental functions needed by the CPW and loss models.
//
// All functions are pure. Non-finite arguments and arguments outside the
// documented domain throw cpwres::Error with ErrorKind::Domain.

namespace cpwres::special {

/// Complete elliptic integral of the first kind K(k).
///
/// NOTE: the argument is the *modulus* k, not the parameter m = k^2.
/// K(k) = integral_0^{pi/2} dtheta / sqrt(1 - k^2 sin^2 theta), 0 <= k < 1.
/// Evaluated with the arithmetic-geometric mean, K(k) = pi / (2 AGM(1, k')).
double ellip_k(double modulus);

/// Modified Bessel function of the first kind, order zero. Requires x >= 0.
double bessel_i0(double x);

/// Modified Bessel function of the second kind, order zero. Requires x > 0.
double bessel_k0(double x);

/// Re psi(1/2 + i y), the real part of the digamma function on the line
/// Re z = 1/2. Even in y.
double digamma_real_part_half_plus_iy(double y);

/// Hyperbolic cotangent for x > 0, stable for both x -> 0+ and large x.
double coth(double x);

}  // namespace cpwres::special
