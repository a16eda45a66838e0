"""Pressure recovery from conserved variables.

The physical pressure of an admissible state solves Phi(p) = 0 where

    Phi(p) = p/(gamma-1) - E + |m|^2/(E+p) + D sqrt(1 - |m|^2/(E+p)^2),

which is strictly increasing on [0, inf) with Phi(0) < 0. Four routes are
implemented, all preserving p_n >= 0 along the iteration:

  * nr1        -- Newton on the quartic phi(p) = c0 + c1 p + c2 p^2 + c3 p^3 + p^4,
                  monotonically increasing iterates from a convexity-picked p0;
                  terminates on residual, loss of monotonicity (round-off), or cap.
  * nr2        -- Newton on psi(p) = (E+p) Phi(p) with p0 = 0 or the bracket
                  point p_c; robust for near-degenerate quartics.
  * hybrid     -- nr1 unless gamma < 1+eps1 or D^2/(E^2-|m|^2) < eps2 signals an
                  ill-conditioned quartic, then nr2.
  * analytical -- closed form via the Ferrari method (principal complex roots).

A bisection of Phi on (0, p_b] serves as the independent oracle. Once p is
known, v = m/(E+p) and rho = D sqrt(1-|v|^2).

All kernels are vectorized; scalar structs are thin wrappers around size-1
arrays so the two paths cannot drift apart.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .config import RecoveryConfig
from .errors import DomainError, InadmissibleStateError
from .state import ConservedState, EosParams, admissibility, momentum_norm_sq

_TINY = np.finfo(np.float64).tiny


class Method(enum.Enum):
    NRI = "nr1"
    NRII = "nr2"
    HYBRID = "hybrid"
    ANALYTICAL = "analytical"
    BISECTION_ORACLE = "bisection"


class Termination(enum.Enum):
    TOLERANCE_MET = 0
    MONOTONICITY_LOST = 1
    MAX_ITER = 2


@dataclass
class BatchRecovery:
    """Vectorized recovery result: pressures plus per-sample diagnostics."""

    p: np.ndarray
    iterations: np.ndarray
    termination: np.ndarray      # Termination values as uint8
    negative_seen: np.ndarray    # any iterate < 0 (PCP violation) per sample
    method_used: np.ndarray      # Method char code per sample ('1','2','a','b')
    trace: np.ndarray | None = None   # (max_iter+1, n) iterates, NaN-padded


@dataclass
class RecoveryOutcome:
    """Scalar recovery result with the iterate sequence."""

    p: float
    v: np.ndarray
    rho: float
    iterations: int
    method: Method
    termination: Termination
    iterates: np.ndarray


@dataclass
class QuarticCoeffs:
    c0: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    c3: np.ndarray


def _split(u):
    u = np.asarray(u, dtype=np.float64)
    return u[..., 0], momentum_norm_sq(u), u[..., -1]


def phi_residual(p, u, eos):
    """Phi(p); domain error outside (E+p)^2 > |m|^2."""
    D, m2, E = _split(u.packed() if isinstance(u, ConservedState) else u)
    gamma = eos.gamma if isinstance(eos, EosParams) else eos
    p = np.asarray(p, dtype=np.float64)
    Ep = E + p
    if np.any(Ep * Ep <= m2):
        raise DomainError("Phi(p) undefined: (E+p)^2 <= |m|^2")
    return p / (gamma - 1.0) - E + m2 / Ep + D * np.sqrt(1.0 - m2 / (Ep * Ep))


def quartic_coeffs(u, eos):
    """Coefficients of phi(p) = c0 + c1 p + c2 p^2 + c3 p^3 + p^4."""
    D, m2, E = _split(u.packed() if isinstance(u, ConservedState) else u)
    gamma = eos.gamma if isinstance(eos, EosParams) else eos
    c0, c1, c2, c3 = _quartic(D, m2, E, gamma)
    return QuarticCoeffs(c0, c1, c2, c3)


def _quartic(D, m2, E, g):
    # c0 and c1 in factored form: E^2-|m|^2 = (E-|m|)(E+|m|) and
    # E^2-|m|^2-D^2 = g(U)(E+sqrt(D^2+|m|^2)) avoid the catastrophic
    # cancellation of the expanded expressions for |v| -> 1
    gm1 = g - 1.0
    D2 = D * D
    am = np.sqrt(m2)
    s = np.sqrt(D2 + m2)
    EmE = (E - am) * (E + am)
    c0 = EmE * ((E - s) * (E + s)) * gm1 * gm1
    c1 = -2.0 * E * gm1 * ((2.0 - g) * EmE + D2 * gm1)
    c2 = E * E * (g * g - 6.0 * g + 6.0) + 2.0 * m2 * gm1 - D2 * gm1 * gm1
    c3 = 2.0 * E * (2.0 - g)
    return c0, c1, c2, c3


def bracket_points(u, eos):
    """(p_b, p_c): upper bracket of the physical root and the tighter point
    solving h1(p_c) = h2(0), with p(U) < p_c < p_b for admissible input."""
    D, m2, E = _split(u.packed() if isinstance(u, ConservedState) else u)
    gamma = eos.gamma if isinstance(eos, EosParams) else eos
    return _p_b(D, m2, E, gamma), _p_c(D, m2, E, gamma)


def _p_b(D, m2, E, g):
    # root of A p^2/... written as B/(sqrt(A^2+B)+A) so the subtraction of
    # nearly equal terms never occurs
    am = np.sqrt(m2)
    A = E * (2.0 - g)
    B = 4.0 * (g - 1.0) * (E - am) * (E + am)
    return 0.5 * B / (np.sqrt(A * A + B) + A)


def _p_c(D, m2, E, g):
    am = np.sqrt(m2)
    s = np.sqrt(D * D + m2)
    rt = np.sqrt((E - am) * (E + am))           # sqrt(E^2 - |m|^2)
    # rt - D = (E^2-|m|^2-D^2)/(rt+D), with the numerator via g(U)
    diff = (E - s) * (E + s) / (rt + D)
    A = E * (2.0 - g)
    B = 4.0 * (g - 1.0) * rt * diff
    return 0.5 * B / (np.sqrt(A * A + np.maximum(B, 0.0)) + A)


def _require_admissible(u_packed):
    rep = admissibility(u_packed)
    if not np.all(rep.admissible):
        idx = np.argwhere(~np.atleast_1d(rep.admissible))
        raise InadmissibleStateError(
            f"recovery requires an admissible state (first offender {idx[0]})",
            index=tuple(idx[0]))


# --- batch kernels -----------------------------------------------------------

def _nr1_batch(D, m2, E, g, cfg, record_trace=False):
    """Newton on the quartic.

    Stops when |phi(p_n)| falls below eps_target times the Horner evaluation
    magnitude S(p_n) = sum |c_i| p^i (the attainable residual scale), or when
    |phi| stops decreasing, which is the round-off oscillation the monotone
    theory rules out; the best iterate seen is returned in that case.
    """
    c0, c1, c2, c3 = _quartic(D, m2, E, g)
    a0, a1, a2, a3 = np.abs(c0), np.abs(c1), np.abs(c2), np.abs(c3)
    p0 = np.where(c2 > 0.0, 0.0,
                  (-3.0 * c3 + np.sqrt(9.0 * c3 * c3 - 24.0 * np.minimum(c2, 0.0))) / 12.0)
    n = p0.shape[0]
    p = p0.copy()
    phi = c0 + p * (c1 + p * (c2 + p * (c3 + p)))
    iters = np.zeros(n, dtype=np.int64)
    term = np.full(n, Termination.MAX_ITER.value, dtype=np.uint8)
    neg = p0 < 0.0
    trace = None
    if record_trace:
        trace = np.full((cfg.max_iter + 1, n), np.nan)
        trace[0] = p0
    active = np.arange(n)
    for _ in range(cfg.max_iter):
        if active.size == 0:
            break
        pa = p[active]
        scale = a0[active] + pa * (a1[active] + pa * (a2[active] + pa * (a3[active] + pa)))
        done = np.abs(phi[active]) <= cfg.eps_target * scale
        term[active[done]] = Termination.TOLERANCE_MET.value
        active = active[~done]
        if active.size == 0:
            break
        pa, fa = p[active], phi[active]
        dphi = c1[active] + pa * (2.0 * c2[active] + pa * (3.0 * c3[active] + 4.0 * pa))
        with np.errstate(divide="ignore", invalid="ignore"):
            pn = pa - fa / dphi
            fn = c0[active] + pn * (c1[active] + pn * (c2[active] + pn * (c3[active] + pn)))
        bad = ~np.isfinite(pn)
        pn = np.where(bad, pa, pn)
        fn = np.where(bad, fa, fn)
        iters[active] += 1
        neg[active] |= pn < 0.0
        if record_trace:
            trace[iters[active], active] = pn
        stalled = bad | (np.abs(fn) >= np.abs(fa))
        term[active[stalled]] = Termination.MONOTONICITY_LOST.value
        adv = ~stalled
        p[active[adv]] = pn[adv]
        phi[active[adv]] = fn[adv]
        active = active[adv]
    return p, iters, term, neg, trace


def _psi(pa, D, m2, E, g):
    Ep = E + pa
    return (m2 + Ep * (pa / (g - 1.0) - E)
            + D * np.sqrt(np.maximum(Ep * Ep - m2, 0.0)))


def _nr2_batch(D, m2, E, g, cfg, record_trace=False):
    """Newton on psi.

    Stops on |psi(p_n)| < eps_target, or when |psi| stops decreasing after
    the first step (the initial step from p0 may legitimately overshoot the
    root before the monotone phase begins, so it is never a stop trigger).
    """
    EmE = E * E - m2
    p0 = np.where(D >= EmE / E, 0.0, _p_c(D, m2, E, g))
    n = p0.shape[0]
    p = p0.copy()
    psi = _psi(p0, D, m2, E, g)
    iters = np.zeros(n, dtype=np.int64)
    term = np.full(n, Termination.MAX_ITER.value, dtype=np.uint8)
    neg = p0 < 0.0
    trace = None
    if record_trace:
        trace = np.full((cfg.max_iter + 1, n), np.nan)
        trace[0] = p0
    active = np.arange(n)
    for _ in range(cfg.max_iter):
        if active.size == 0:
            break
        done = np.abs(psi[active]) < cfg.eps_target
        term[active[done]] = Termination.TOLERANCE_MET.value
        active = active[~done]
        if active.size == 0:
            break
        pa, fa = p[active], psi[active]
        Da, m2a, Ea = D[active], m2[active], E[active]
        ga = _at(g, active)
        Ep = Ea + pa
        rad = np.sqrt(np.maximum(Ep * Ep - m2a, _TINY))
        dpsi = (2.0 * pa + (2.0 - ga) * Ea) / (ga - 1.0) + Da * Ep / rad
        pn = pa - fa / dpsi
        fn = _psi(pn, Da, m2a, Ea, ga)
        iters[active] += 1
        neg[active] |= pn < 0.0
        if record_trace:
            trace[iters[active], active] = pn
        worse = (np.abs(fn) >= np.abs(fa)) & (iters[active] >= 2)
        term[active[worse]] = Termination.MONOTONICITY_LOST.value
        better = np.abs(fn) <= np.abs(fa)
        upd = better | ~worse
        p[active[upd]] = pn[upd]
        psi[active[upd]] = fn[upd]
        active = active[~worse]
    return p, iters, term, neg, trace


def _at(g, idx):
    g = np.asarray(g, dtype=np.float64)
    return g[idx] if g.ndim else np.full(idx.shape, float(g))


def _croot(z, n):
    """Principal n-th root (A cos(theta/n), A sin(theta/n)) with the
    quadrant-correct angle theta = atan2(Im, Re)."""
    z = np.asarray(z, dtype=np.complex128)
    A = np.abs(z)
    theta = np.arctan2(z.imag, z.real)
    return (A ** (1.0 / n)) * (np.cos(theta / n) + 1j * np.sin(theta / n))


def _analytical_batch(D, m2, E, g):
    c0, c1, c2, c3 = _quartic(D, m2, E, g)
    M1 = (c2 * c2 + 12.0 * c0 - 3.0 * c3 * c1) / 9.0
    M2 = (27.0 * c1 * c1 + 2.0 * c2 ** 3 + 27.0 * c3 * c3 * c0
          - 72.0 * c2 * c0 - 9.0 * c3 * c2 * c1) / 54.0
    M3 = _croot(M2 + _croot(M2 * M2 - M1 ** 3, 2), 3)
    M3 = np.where(np.abs(M3) < _TINY, _TINY + 0j, M3)
    M4 = M3 + M1 / M3 + c2 / 3.0
    M5 = _croot(c3 * c3 + 4.0 * (M4 - c2), 2)
    M5 = np.where(np.abs(M5) < _TINY, _TINY + 0j, M5)
    M6 = _croot((c3 - M5) ** 2 - 8.0 * (M4 - (c3 * M4 - 2.0 * c1) / M5), 2)
    return ((M5 - c3 - M6) / 4.0).real


def _bisection_batch(D, m2, E, g, tol, max_iter=200):
    lo = np.zeros_like(D)
    hi = _p_b(D, m2, E, g)
    gm1 = g - 1.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        # stop where the midpoint no longer separates the bracket or width is met
        open_ = (mid > lo) & (mid < hi) & (hi - lo > tol * np.maximum(hi, _TINY))
        if not np.any(open_):
            break
        Ep = E + mid
        f = mid / gm1 - E + m2 / Ep + D * np.sqrt(np.maximum(1.0 - m2 / (Ep * Ep), 0.0))
        neg = f < 0.0
        lo = np.where(open_ & neg, mid, lo)
        hi = np.where(open_ & ~neg, mid, hi)
    return 0.5 * (lo + hi)


_METHOD_CODE = {"nr1": ord("1"), "nr2": ord("2"), "analytical": ord("a"),
                "bisection": ord("b")}


def recover_pressure_batch(u, gamma, method="hybrid", cfg=None,
                           record_trace=False, oracle_tol=1e-12,
                           check_admissible=True):
    """Recover p for a batch of packed conserved states.

    `gamma` may be a scalar or a per-sample array. Input admissibility is the
    caller's contract; it is verified unless `check_admissible=False`.
    """
    cfg = cfg or RecoveryConfig()
    u = np.asarray(u, dtype=np.float64)
    flat = u.reshape(-1, u.shape[-1])
    if check_admissible:
        _require_admissible(flat)
    D, m2, E = _split(flat)
    g = np.asarray(gamma, dtype=np.float64)
    if g.ndim:
        g = np.broadcast_to(g, u.shape[:-1]).reshape(-1)
    n = D.shape[0]
    code = np.full(n, _METHOD_CODE.get(method, ord("1")), dtype=np.uint8)
    trace = None

    if method == "nr1":
        p, iters, term, neg, trace = _nr1_batch(D, m2, E, g, cfg, record_trace)
    elif method == "nr2":
        p, iters, term, neg, trace = _nr2_batch(D, m2, E, g, cfg, record_trace)
    elif method == "hybrid":
        use1 = (g >= 1.0 + cfg.eps1) & (D * D >= cfg.eps2 * (E * E - m2))
        p = np.empty(n)
        iters = np.zeros(n, dtype=np.int64)
        term = np.empty(n, dtype=np.uint8)
        neg = np.zeros(n, dtype=bool)
        if record_trace:
            trace = np.full((cfg.max_iter + 1, n), np.nan)
        for pick, sub, c in ((use1, _nr1_batch, ord("1")),
                             (~use1, _nr2_batch, ord("2"))):
            if not np.any(pick):
                continue
            idx = np.flatnonzero(pick)
            ps, it, tm, ng, tr = sub(D[idx], m2[idx], E[idx], _at(g, idx),
                                     cfg, record_trace)
            p[idx] = ps
            iters[idx] = it
            term[idx] = tm
            neg[idx] = ng
            code[idx] = c
            if record_trace:
                trace[:, idx] = tr
    elif method == "analytical":
        p = _analytical_batch(D, m2, E, g)
        iters = np.zeros(n, dtype=np.int64)
        term = np.full(n, Termination.TOLERANCE_MET.value, dtype=np.uint8)
        neg = p < 0.0
        if record_trace:
            trace = p[None, :].copy()
    elif method == "bisection":
        p = _bisection_batch(D, m2, E, g, oracle_tol)
        iters = np.zeros(n, dtype=np.int64)
        term = np.full(n, Termination.TOLERANCE_MET.value, dtype=np.uint8)
        neg = np.zeros(n, dtype=bool)
    else:
        raise ValueError(f"unknown recovery method '{method}'")

    out_shape = u.shape[:-1]
    return BatchRecovery(p.reshape(out_shape), iters.reshape(out_shape),
                         term.reshape(out_shape), neg.reshape(out_shape),
                         code.reshape(out_shape), trace)


def finish_recovery(p, u):
    """Velocity and density once the pressure is known:
    v = m/(E+p), rho = D sqrt(1-|v|^2)."""
    packed = u.packed() if isinstance(u, ConservedState) else np.asarray(u)
    p = np.asarray(p, dtype=np.float64)
    v = packed[..., 1:-1] / (packed[..., -1] + p)[..., None]
    rho = packed[..., 0] * np.sqrt(np.maximum(1.0 - np.sum(v * v, axis=-1), 0.0))
    return v, rho


def recover_primitives_packed(u, gamma, method="hybrid", cfg=None,
                              check_admissible=True):
    """(rho, v, p) arrays for packed conserved input; solver hot path."""
    res = recover_pressure_batch(u, gamma, method, cfg,
                                 check_admissible=check_admissible)
    v, rho = finish_recovery(res.p, u)
    return rho, v, res.p


def recover_primitives_packed_info(u, gamma, method="hybrid", cfg=None,
                                   check_admissible=True):
    """Like recover_primitives_packed but also returns the BatchRecovery."""
    res = recover_pressure_batch(u, gamma, method, cfg,
                                 check_admissible=check_admissible)
    v, rho = finish_recovery(res.p, u)
    return rho, v, res.p, res


def _scalar_outcome(u, eos, method, cfg=None, oracle_tol=1e-12):
    packed = (u.packed() if isinstance(u, ConservedState) else
              np.asarray(u, dtype=np.float64))[None, :]
    cfg = cfg or RecoveryConfig()
    res = recover_pressure_batch(packed, eos.gamma, method, cfg,
                                 record_trace=True, oracle_tol=oracle_tol)
    v, rho = finish_recovery(res.p, packed)
    if res.trace is not None:
        tr = res.trace[:, 0]
        iterates = tr[~np.isnan(tr)]
    else:
        iterates = np.array([float(res.p[0])])
    # hybrid reports the concrete method it dispatched to
    meth = {ord("1"): Method.NRI, ord("2"): Method.NRII,
            ord("a"): Method.ANALYTICAL, ord("b"): Method.BISECTION_ORACLE}[
                int(res.method_used[0])]
    return RecoveryOutcome(float(res.p[0]), v[0], float(rho[0]),
                           int(res.iterations[0]), meth,
                           Termination(int(res.termination[0])), iterates)


def recover_nr1(u, eos, cfg=None):
    """Monotone Newton iteration on the quartic (Algorithm NR-I)."""
    return _scalar_outcome(u, eos, "nr1", cfg)


def recover_nr2(u, eos, cfg=None):
    """Robust Newton iteration on psi (Algorithm NR-II)."""
    return _scalar_outcome(u, eos, "nr2", cfg)


def recover_hybrid(u, eos, cfg=None):
    """Dispatch NR-I/NR-II on the ill-conditioning predicate."""
    return _scalar_outcome(u, eos, "hybrid", cfg)


def recover_analytical(u, eos):
    """Closed-form smallest positive quartic root (Ferrari method)."""
    return _scalar_outcome(u, eos, "analytical")


def recover_oracle_bisection(u, eos, tol=1e-12):
    """Bisection of Phi on [0, p_b]; ground truth for the other methods."""
    return _scalar_outcome(u, eos, "bisection", oracle_tol=tol)


def hybrid_uses_nr1(u, eos, cfg=None):
    """The hybrid dispatch predicate as a pure function of (gamma, D, m, E)."""
    cfg = cfg or RecoveryConfig()
    D, m2, E = _split(u.packed() if isinstance(u, ConservedState) else u)
    gamma = eos.gamma if isinstance(eos, EosParams) else eos
    return (gamma >= 1.0 + cfg.eps1) & (D * D >= cfg.eps2 * (E * E - m2))
