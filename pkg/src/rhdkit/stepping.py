"""Time-step selection and per-step bookkeeping shared by the 1D/2D solvers."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

OMEGA_GL1 = 1.0 / 12.0   # corner Gauss-Lobatto weight entering the CFL bounds

# SSP-RK3 stage combinations: state^(k) = a*state^n + b*(prev + dt*L(prev))
SSP_RK3_STAGES = ((0.0, 1.0), (0.75, 0.25), (1.0 / 3.0, 2.0 / 3.0))


@dataclass
class StepReport:
    """Diagnostics for one accepted time step."""

    t: float
    dt: float
    alpha: tuple
    dt_bound: str                 # which bound set dt: cfl | pcp | source | final
    troubled_cells: int = 0
    limited_cells: int = 0
    recovery_iterations: int = 0
    retries: int = 0
    eig_fallbacks: int = 0


@dataclass
class RunResult:
    """Final state of a simulation plus its step history."""

    field: object
    reports: list = field(default_factory=list)
    limited_map: np.ndarray | None = None
    troubled_map: np.ndarray | None = None

    @property
    def time(self):
        return self.reports[-1].t if self.reports else 0.0


def dt_pcp_1d(alpha, dx):
    """Proof-backed bound dt <= omega_1 dx / alpha."""
    return OMEGA_GL1 * dx / alpha


def dt_pcp_2d(alpha1, alpha2, dx, dy, source_bound=np.inf):
    """Proof-backed 2D bound, folded with the cylindrical source restriction.

    Without a source the bound is omega_1 / (a1/dx + a2/dy); with the source
    limit A_s it becomes omega_1 A_s / (omega_1 + A_s (a1/dx + a2/dy)), which
    recovers the plain bound as A_s -> infinity.
    """
    rate = alpha1 / dx + alpha2 / dy
    plain = OMEGA_GL1 / rate
    if not np.isfinite(source_bound):
        return plain
    return OMEGA_GL1 * source_bound / (OMEGA_GL1 + source_bound * rate)


def select_dt(cfg, length_scale, strict_bound, source_bound=np.inf):
    """dt and the name of the active bound.

    The practical step is cfl * L^dt_exponent with L the alpha-weighted length
    (dx/alpha in 1D); strict mode additionally enforces the theorem bound.
    """
    dt = cfg.cfl * length_scale ** cfg.dt_exponent
    which = "cfl"
    if cfg.strict_pcp and strict_bound < dt:
        dt = strict_bound
        which = "pcp"
    if cfg.strict_pcp and source_bound < dt:
        dt = source_bound
        which = "source"
    return dt, which
