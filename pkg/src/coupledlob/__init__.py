"""Coupled diffusive limit order books with non-uniform sampling.

Simulates two order books as signed density fields on a shared lattice,
coupled through their price gap, each evolving on its own event clock.
Analysis tools cover scale-dependent correlation (the drop at fine
sampling scales), price impact, stylised-facts reporting, trade-and-quote
ingestion, and simulated-moment calibration of (D_alpha, nu, alpha).
"""

from .calibrate import (
    CalibrationResult,
    MomentVector,
    bootstrap_weight,
    calibrate,
    confidence_intervals,
    moments,
    nmta,
    smd_objective,
)
from .config import (
    BookConfig,
    CalibrationConfig,
    DynamicsConfig,
    EppsConfig,
    RunConfig,
    RunSettings,
    ShockSpec,
    config_from_dict,
    default_config,
    load_config,
    with_theta,
)
from .correlation import (
    EppsCurve,
    FourierCoefficients,
    brownian_pair,
    correlation_at_scale,
    direct_nudft,
    epps_curve,
    fgg_nufft,
    fourier_covariance,
    power_spectrum,
)
from .exceptions import (
    ConfigurationError,
    DataError,
    OneSidedBookError,
    SimulationError,
)
from .facts import FactsReport, acf, facts, qq_table, return_moments, tick_rule_signs
from .ingest import (
    TaqRecord,
    clean,
    compact,
    micro_price,
    micro_price_series,
    read_taq_csv,
    write_taq_csv,
)
from .kernels import KernelTable, build_kernel_table, memory_kernel, sibuya
from .lattice import LatticeConfig, base_dt, build_lattice, sample_time_grid
from .simulate import PricePath, measure_impact, simulate

__version__ = "0.1.0"

__all__ = [
    "BookConfig",
    "CalibrationConfig",
    "CalibrationResult",
    "ConfigurationError",
    "DataError",
    "DynamicsConfig",
    "EppsConfig",
    "EppsCurve",
    "FactsReport",
    "FourierCoefficients",
    "KernelTable",
    "LatticeConfig",
    "MomentVector",
    "OneSidedBookError",
    "PricePath",
    "RunConfig",
    "RunSettings",
    "ShockSpec",
    "SimulationError",
    "TaqRecord",
    "acf",
    "base_dt",
    "bootstrap_weight",
    "brownian_pair",
    "build_kernel_table",
    "build_lattice",
    "calibrate",
    "clean",
    "compact",
    "config_from_dict",
    "confidence_intervals",
    "correlation_at_scale",
    "default_config",
    "direct_nudft",
    "epps_curve",
    "facts",
    "fgg_nufft",
    "fourier_covariance",
    "load_config",
    "measure_impact",
    "memory_kernel",
    "micro_price",
    "micro_price_series",
    "moments",
    "nmta",
    "power_spectrum",
    "qq_table",
    "read_taq_csv",
    "return_moments",
    "sample_time_grid",
    "sibuya",
    "simulate",
    "smd_objective",
    "tick_rule_signs",
    "with_theta",
    "write_taq_csv",
]
