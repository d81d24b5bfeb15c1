"""Superconducting CPW resonator design and characterization."""

from ._core import (
    CpwresError,
    ParseError,
    __version__,
    bessel_i0,
    bessel_k0,
    coth,
    design_report,
    digamma_real_part_half_plus_iy,
    effective_penetration_depth,
    ellip_k,
    fit_notch,
    fit_temperature_sweep,
    fit_tls_power_sweep,
    frequency_shift_qp,
    frequency_shift_tls,
    fundamental_frequency,
    kinetic_inductance_per_square,
    line_parameters,
    mean_photon_number,
    power_partition,
    qp_loss_density_form,
    qp_loss_mattis_bardeen,
    read_trace,
    run_power_sweep,
    run_temperature_sweep,
    synth_dataset,
    synthesize,
    tls_loss,
    total_frequency_shift,
    write_csv_trace,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
