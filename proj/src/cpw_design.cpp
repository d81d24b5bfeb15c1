#include "cpwres/cpw_design.hpp"

#include <cmath>
#include <string>

#include "cpwres/constants.hpp"
#include "cpwres/errors.hpp"
#include "cpwres/special_functions.hpp"

namespace cpwres {

namespace {

bool positive(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

double FilmProperties::gap_energy_J() const {
  return constants::bcs_gap_ratio * constants::k_B * critical_temperature_K;
}

void validate(const CpwGeometry& geom) {
  if (!positive(geom.center_width_m) || !positive(geom.gap_m) || !positive(geom.length_m)) {
    fail(ErrorKind::Domain, "CPW geometry: width, gap and length must be positive");
  }
  if (!std::isfinite(geom.substrate_rel_permittivity) || geom.substrate_rel_permittivity < 1.0) {
    fail(ErrorKind::Domain, "CPW geometry: relative permittivity must be >= 1");
  }
  const double k = geom.modulus();
  if (!(k > 0.0 && k < 1.0)) {
    fail(ErrorKind::Domain, "CPW geometry: modulus w/(w+2s) outside (0, 1)");
  }
}

void validate(const FilmProperties& film) {
  if (!positive(film.thickness_m)) fail(ErrorKind::Domain, "film: thickness must be positive");
  if (!positive(film.critical_temperature_K)) {
    fail(ErrorKind::Domain, "film: critical temperature must be positive");
  }
  if (!std::isfinite(film.sheet_resistance_ohm_sq) || film.sheet_resistance_ohm_sq < 0.0) {
    fail(ErrorKind::Domain, "film: sheet resistance must be non-negative");
  }
  if (!positive(film.bulk_penetration_depth_m)) {
    fail(ErrorKind::Domain, "film: bulk penetration depth must be positive");
  }
}

LineParameters line_parameters_geometric(const CpwGeometry& geom) {
  validate(geom);
  const double k = geom.modulus();
  const double k_prime = std::sqrt((1.0 - k) * (1.0 + k));
  const double ratio = special::ellip_k(k) / special::ellip_k(k_prime);  // K(k)/K(k')

  LineParameters p;
  p.C_per_m = 4.0 * constants::epsilon0 * geom.effective_permittivity() * ratio;
  p.L_geometric_per_m = 0.25 * constants::mu0 / ratio;
  p.L_kinetic_per_m = 0.0;
  p.Z0_ohm = std::sqrt(p.L_geometric_per_m / p.C_per_m);
  p.v_ph_m_per_s = 1.0 / std::sqrt(p.L_geometric_per_m * p.C_per_m);
  p.kinetic_fraction = 0.0;
  return p;
}

double kinetic_inductance_per_square(const FilmProperties& film) {
  validate(film);
  return constants::hbar * film.sheet_resistance_ohm_sq / (constants::pi * film.gap_energy_J());
}

double effective_penetration_depth(const FilmProperties& film) {
  validate(film);
  const double lambda0 = film.bulk_penetration_depth_m;
  return lambda0 * special::coth(film.thickness_m / lambda0);
}

double fundamental_frequency(const CpwGeometry& geom) {
  validate(geom);
  return constants::c / (4.0 * geom.length_m * std::sqrt(geom.effective_permittivity()));
}

double harmonic_frequency(const CpwGeometry& geom, int n) {
  if (n < 0) fail(ErrorKind::Domain, "harmonic index must be >= 0");
  return (2.0 * n + 1.0) * fundamental_frequency(geom);
}

double resonance_frequency(const CpwGeometry& geom, double L_total_per_m, double C_per_m) {
  validate(geom);
  if (!positive(L_total_per_m) || !positive(C_per_m)) {
    fail(ErrorKind::Domain, "resonance_frequency: L and C per length must be positive");
  }
  return 1.0 / (4.0 * geom.length_m * std::sqrt(L_total_per_m * C_per_m));
}

LineParameters extract_kinetic_inductance_per_length(const CpwGeometry& geom,
                                                     double measured_f0_Hz) {
  if (!positive(measured_f0_Hz)) {
    fail(ErrorKind::Domain, "measured f0 must be positive");
  }
  LineParameters p = line_parameters_geometric(geom);
  const double v_ph = 4.0 * geom.length_m * measured_f0_Hz;
  const double L_total = 1.0 / (p.C_per_m * v_ph * v_ph);
  const double L_k = L_total - p.L_geometric_per_m;
  // Tolerate rounding (and the 1e-10 mismatch of mu0 eps0 c^2 with 1) when the
  // measured frequency equals the geometric one.
  if (L_k < -1e-9 * p.L_geometric_per_m) {
    fail(ErrorKind::NegativeKineticInductance,
         "measured f0 = " + std::to_string(measured_f0_Hz) +
             " Hz exceeds the geometric-only prediction " +
             std::to_string(p.v_ph_m_per_s / (4.0 * geom.length_m)) + " Hz");
  }
  p.L_kinetic_per_m = L_k > 0.0 ? L_k : 0.0;
  p.v_ph_m_per_s = v_ph;
  p.Z0_ohm = std::sqrt((p.L_geometric_per_m + p.L_kinetic_per_m) / p.C_per_m);
  p.kinetic_fraction = p.L_kinetic_per_m / (p.L_geometric_per_m + p.L_kinetic_per_m);
  return p;
}

}  // namespace cpwres
