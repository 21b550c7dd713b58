"""Logistic-map statistics and LMS channel estimation with chaotic drive signals."""
from .logistic import (Constant, DegenerateOrbitWarning, LogisticParams, Modulated, Orbit,
                       Switched, bifurcation_scan, center, generate_orbit, iterate_map,
                       uncenter)
from .sim import (REFERENCE_CHANNEL, ChaoticDrive, DivergenceError, ExternalDrive, GaussianDrive,
                  IirChannel, LmsState, MmaTrace, channel_output, impulse_response,
                  lms_step, run_estimation)
from .rng import gaussian_source

__version__ = "0.1.0"

__all__ = [
    "Constant", "DegenerateOrbitWarning", "LogisticParams", "Modulated", "Orbit", "Switched",
    "bifurcation_scan", "center", "generate_orbit", "iterate_map", "uncenter",
    "REFERENCE_CHANNEL", "ChaoticDrive", "DivergenceError", "ExternalDrive", "GaussianDrive",
    "IirChannel", "LmsState", "MmaTrace", "channel_output", "impulse_response", "lms_step",
    "run_estimation", "gaussian_source",
]
