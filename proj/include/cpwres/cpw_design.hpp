#pragma once

// Forward physics of a quarter-wave CPW resonator: geometry to
// transmission-line parameters, film to kinetic inductance and penetration
// depth, and the inverse extraction of kinetic inductance per length from a
// measured fundamental frequency.
//
// Conformal-mapping formulas assume an infinitely thick substrate and a
// zero-thickness conductor, with eps_eff = (eps_r + 1) / 2.

namespace cpwres {

enum class ResonatorType { QuarterWave };

struct CpwGeometry {
  double center_width_m = 4e-6;
  double gap_m = 2e-6;
  double length_m = 8e-3;
  double substrate_rel_permittivity = 11.9;  // room-temperature silicon
  ResonatorType type = ResonatorType::QuarterWave;

  double modulus() const { return center_width_m / (center_width_m + 2.0 * gap_m); }
  double effective_permittivity() const { return 0.5 * (substrate_rel_permittivity + 1.0); }
};

struct FilmProperties {
  double thickness_m = 40e-9;
  double critical_temperature_K = 4.06;
  double sheet_resistance_ohm_sq = 1.764;
  double bulk_penetration_depth_m = 150e-9;  // Ta

  /// Zero-temperature gap Delta_0 = 1.76 k_B T_c, in joules.
  double gap_energy_J() const;
};

struct LineParameters {
  double L_geometric_per_m = 0.0;  // L_m
  double C_per_m = 0.0;
  double L_kinetic_per_m = 0.0;    // L_k
  double Z0_ohm = 0.0;
  double v_ph_m_per_s = 0.0;
  /// L_k / (L_m + L_k); the same ratio enters both quasiparticle models.
  double kinetic_fraction = 0.0;
};

void validate(const CpwGeometry& geom);
void validate(const FilmProperties& film);

/// Conformal-mapping C_l, L_m, Z0 and v_ph with no kinetic contribution.
LineParameters line_parameters_geometric(const CpwGeometry& geom);

/// Sheet kinetic inductance hbar R_s / (pi Delta_0), in H per square.
double kinetic_inductance_per_square(const FilmProperties& film);

/// lambda_eff = lambda_0 coth(d / lambda_0), in metres.
double effective_penetration_depth(const FilmProperties& film);

/// f0 = c / (4 l sqrt(eps_eff)).
double fundamental_frequency(const CpwGeometry& geom);

/// (2n + 1) f0 for n >= 0; n = 0 is the fundamental.
double harmonic_frequency(const CpwGeometry& geom, int n);

/// Quarter-wave resonance c.f. f = 1 / (4 l sqrt(C_l (L_m + L_k))) for a line
/// with kinetic inductance; inverse of extract_kinetic_inductance_per_length.
double resonance_frequency(const CpwGeometry& geom, double L_total_per_m, double C_per_m);

/// Infers L_k per length from a measured quarter-wave fundamental using
/// v_ph = 4 l f0 = 1 / sqrt(C_l (L_m + L_k)). Throws
/// NegativeKineticInductance when f0 exceeds the geometric-only prediction.
LineParameters extract_kinetic_inductance_per_length(const CpwGeometry& geom,
                                                     double measured_f0_Hz);

}  // namespace cpwres
