"""Invariant density estimation for jump-diffusion SDEs.

Modules
-------
model
    Levy measures, model specifications, assumption audits and the catalogue.
simulate
    Reproducible Euler simulation with per-replication random streams.
kernel
    Higher-order kernels, the bump function and the time-average estimator.
inverse_drift
    Drift that makes a prescribed density invariant, plus its audits.
hypotheses
    Lower-bound hypothesis families and their KL budgets.
experiments
    Rate, CLT and mixing studies.
cli
    Command-line front end (``jumpkde``).
"""

__version__ = "0.1.0"

from .kernel import build_kernel, default_bandwidth, estimate_density  # noqa: E402
from .model import CATALOGUE, LevyMeasure, ModelSpec, get_model  # noqa: E402
from .simulate import SimConfig, simulate_ensemble, simulate_path  # noqa: E402

__all__ = [
    "__version__",
    "CATALOGUE",
    "LevyMeasure",
    "ModelSpec",
    "SimConfig",
    "build_kernel",
    "default_bandwidth",
    "estimate_density",
    "get_model",
    "simulate_ensemble",
    "simulate_path",
]
