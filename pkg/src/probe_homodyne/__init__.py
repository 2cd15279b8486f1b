"""Field moments from derivatives of probe populations at zero interaction time.

Modules:
    opsalg        Hilbert spaces, operators, density operators, unitary evolution.
    states        Field and probe state preparation with truncation checks.
    interactions  The five probe-field exchange Hamiltonians.
    evolution     Population series (unitary, closed form, Lindblad).
    sampling      Binomial shot noise with counter-based seeding.
    derivatives   Derivative-at-zero estimators.
    extraction    Protocols combining derivatives into field moments.
    oracle        Ground-truth moments from the density matrix.
    scenario      Declarative scenario files and their runner.
    cli           Command-line front end.
"""

from .errors import HomodyneError
from .extraction import (
    Estimator,
    Experiment,
    MomentResult,
    duan_check,
    extract_A,
    extract_B,
    extract_n,
    extract_X,
    extract_X2_Y2_twoatom,
    extract_X2_Y2_twophoton,
    extract_Y,
    extract_Y_homodyne,
    two_mode_second_moments,
)
from .derivatives import DerivativeEstimate, derivative_at_zero

__version__ = "0.1.0"

__all__ = [
    "DerivativeEstimate",
    "Estimator",
    "Experiment",
    "HomodyneError",
    "MomentResult",
    "derivative_at_zero",
    "duan_check",
    "extract_A",
    "extract_B",
    "extract_X",
    "extract_X2_Y2_twoatom",
    "extract_X2_Y2_twophoton",
    "extract_Y",
    "extract_Y_homodyne",
    "extract_n",
    "two_mode_second_moments",
]
