"""First-order shock-front asymptotics for weakly forced 2x2 quasilinear
systems, with a finite-volume cross-check."""

from shockasym.engine import AsymptoticSolution, solve_asymptotics
from shockasym.model import ProblemSpec, load_spec, validate
from shockasym.reference import extract_shocks, recover_v, run_reference

__version__ = "0.1.0"

__all__ = [
    "AsymptoticSolution",
    "ProblemSpec",
    "extract_shocks",
    "load_spec",
    "recover_v",
    "run_reference",
    "solve_asymptotics",
    "validate",
]
