"""Random recovery benchmark over the three published sampling laws.

Primitives are drawn, mapped to conserved variables, and recovered; errors
are measured against the generating pressure. Sampling uses the counter-based
Philox generator: shard k of a run seeded with `seed` draws from
Philox(seed).jumped(k), so results are reproducible and independent of the
shard size or any parallel execution order.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from ..config import RecoveryConfig
from ..recovery import Termination, recover_pressure_batch
from ..state import prim_to_cons_packed

SHARD_SIZE = 250_000


@dataclass
class RandomBenchSpec:
    set_id: int                  # 1, 2 or 3
    n: int
    seed: int = 0

    def __post_init__(self):
        if self.set_id not in (1, 2, 3):
            raise ValueError("set_id must be 1, 2 or 3")
        if self.n < 1:
            raise ValueError("sample count must be >= 1")


@dataclass
class MethodStats:
    method: str
    n: int
    max_err: float
    mean_err: float
    mean_iters: float
    neg_count: int
    nonconv_count: int
    wall_ms: float


def sample_primitives(set_id, n, rng):
    """One draw of (rho, v, p, gamma) for the given sampling law."""
    U = rng.random((4, n))
    if set_id == 1:
        rho = 1000.0 * U[0] + 1e-10
        v = 1.9999 * U[1] - 1.9999 / 2.0
        p = 10.0 * U[2] + 1e-10
    elif set_id == 2:
        rho = 1e-3 * U[0] + 1e-10
        v = 1.9999 * U[1] - 1.9999 / 2.0
        p = 0.1 * U[2] + 1e-10
    else:
        rho = 10000.0 * U[0] + 1e-10
        v = 0.001 * U[1]
        p = 10.0 * U[2] + 1e-10
    gamma = 1.0001 + 0.9999 * U[3]
    return rho, v, p, gamma


def _shard_rng(seed, shard):
    return np.random.default_rng(np.random.Philox(seed).jumped(shard))


def recover_bench(spec: RandomBenchSpec, methods=("nr1", "nr2", "hybrid"),
                  cfg: RecoveryConfig | None = None, oracle_tol=1e-12):
    """Per-method statistics over `spec.n` samples; order-independent merge
    of fixed-size shards."""
    cfg = cfg or RecoveryConfig()
    agg = {m: dict(max_err=0.0, sum_err=0.0, sum_iters=0, neg=0, nonconv=0,
                   wall=0.0) for m in methods}
    remaining = spec.n
    shard = 0
    while remaining > 0:
        n = min(SHARD_SIZE, remaining)
        rho, v, p, gamma = sample_primitives(spec.set_id, n,
                                             _shard_rng(spec.seed, shard))
        u = prim_to_cons_packed(rho, v[:, None], p, gamma)
        for m in methods:
            t0 = time.perf_counter()
            res = recover_pressure_batch(u, gamma, m, cfg,
                                         oracle_tol=oracle_tol,
                                         check_admissible=False)
            wall = time.perf_counter() - t0
            err = np.abs(res.p - p)
            a = agg[m]
            a["max_err"] = max(a["max_err"], float(err.max()))
            a["sum_err"] += float(err.sum())
            a["sum_iters"] += int(res.iterations.sum())
            a["neg"] += int(np.count_nonzero(res.negative_seen))
            a["nonconv"] += int(np.count_nonzero(
                res.termination == Termination.MAX_ITER.value))
            a["wall"] += wall
        remaining -= n
        shard += 1
    return [MethodStats(m, spec.n, a["max_err"], a["sum_err"] / spec.n,
                        a["sum_iters"] / spec.n, a["neg"], a["nonconv"],
                        1000.0 * a["wall"])
            for m, a in agg.items()]
