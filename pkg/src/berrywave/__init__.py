"""Simulation laboratory for nodal statistics of planar random waves.

Monochromatic isotropic Gaussian fields are sampled as finite sums of
random plane waves, their zero sets are traced and measured, degree-4
Hermite functionals are integrated alongside, and a deterministic
covariance-integral oracle cross-checks the Monte Carlo laws: the mean
and variance of the nodal length, its asymptotically full correlation
with the rescaled sample trispectrum, and the central limit behaviour of
both.
"""

from .chaos import (ChaosRecord, RecordParseError, chaos4_projection,
                    chaos4_terms, m_statistic, read_records_csv,
                    records_to_csv, trispectrum)
from .harness import (CltVerdict, EnergyStats, EnsembleResult, ExperimentPlan,
                      TrendRecord, clt_verdict, cumulant_trend, k_statistic_4,
                      ks_statistic, record_from_grid, report, run_ensemble,
                      simulate_replication, summarize_records,
                      w1_to_standard_normal)
from .nodal import (NodalCurve, marching_squares, mean_length_formula,
                    nodal_length, segments_to_csv)
from .oracle import (KernelIntegral, pair_distance_density,
                     pair_kernel_integral, slope_fit, var_m_oracle,
                     variance_log_slope)
from .randomwave import (ConfigurationError, Domain, FieldGrid, WaveConfig,
                         dump_field, field_from_amplitudes, helmholtz_residual,
                         load_field_dump, rng_stream, sample_field)
from .specfun import (bessel_j0, bessel_j0_asymptotic, covariance, hermite,
                      wavenumber)

__version__ = "0.1.0"

__all__ = [
    "ChaosRecord", "RecordParseError", "chaos4_projection", "chaos4_terms",
    "m_statistic", "read_records_csv", "records_to_csv", "trispectrum",
    "CltVerdict", "EnergyStats", "EnsembleResult", "ExperimentPlan",
    "TrendRecord", "clt_verdict", "cumulant_trend", "k_statistic_4",
    "ks_statistic", "record_from_grid", "report", "run_ensemble",
    "simulate_replication", "summarize_records", "w1_to_standard_normal",
    "NodalCurve", "marching_squares", "mean_length_formula", "nodal_length",
    "segments_to_csv",
    "KernelIntegral", "pair_distance_density", "pair_kernel_integral",
    "slope_fit", "var_m_oracle", "variance_log_slope",
    "ConfigurationError", "Domain", "FieldGrid", "WaveConfig", "dump_field",
    "field_from_amplitudes", "helmholtz_residual", "load_field_dump",
    "rng_stream", "sample_field",
    "bessel_j0", "bessel_j0_asymptotic", "covariance", "hermite",
    "wavenumber",
    "__version__",
]
