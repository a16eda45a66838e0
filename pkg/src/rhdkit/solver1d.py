"""1D finite volume solver evolving cell averages and first moments.

One right-hand-side evaluation runs the full pipeline: ghost fill, troubled
cell detection, first-moment limiting, point reconstruction (linear in calm
cells, nonlinear with characteristic projection at the faces of troubled
cells), PCP point limiting, and Lax-Friedrichs flux assembly for both moment
families. Cells carry two ghost layers; the ring of cells adjacent to the
interior is reconstructed and limited too since its face values feed the
boundary fluxes.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import SchemeConfig
from .errors import InadmissibleStateError, StepFailure
from .limiters import kxrcf_flag_1d, pcp_floors, pcp_limit_1d
from .reconstruct1d import (GL_NODES, GL_WEIGHTS, limited_first_moment,
                            mh_eval_points, ml_eval_matrix)
from .recovery import recover_pressure_batch, finish_recovery
from .state import (eigensystem_at, flux_packed, g_value,
                    max_signal_speed_packed)
from .stepping import (RunResult, SSP_RK3_STAGES, StepReport, dt_pcp_1d,
                       select_dt)

NG = 2  # ghost layers per side

_EVAL_GL = ml_eval_matrix(GL_NODES)        # (4, 6) linear point-value map
_EVAL_FACES = ml_eval_matrix([-0.5, 0.5])  # (2, 6)


@dataclass
class Grid1D:
    n: int
    x_lo: float
    x_hi: float

    @property
    def dx(self):
        return (self.x_hi - self.x_lo) / self.n

    def centers(self):
        return self.x_lo + (np.arange(self.n) + 0.5) * self.dx


@dataclass
class Field1D:
    """Padded moment arrays; interior cells live at [NG:-NG]."""

    grid: Grid1D
    U: np.ndarray           # (n + 2 NG, 3) zeroth moments
    V: np.ndarray           # (n + 2 NG, 3) first moments
    bc: tuple               # (left, right); see fill_ghosts_1d
    gamma: float

    @classmethod
    def allocate(cls, grid, bc, gamma):
        shape = (grid.n + 2 * NG, 3)
        return cls(grid, np.zeros(shape), np.zeros(shape), bc, gamma)

    def interior(self):
        return self.U[NG:-NG], self.V[NG:-NG]

    def copy(self):
        return Field1D(self.grid, self.U.copy(), self.V.copy(), self.bc,
                       self.gamma)


_REFLECT_SIGN = np.array([1.0, -1.0, 1.0])


def fill_ghosts_1d(field: Field1D):
    U, V = field.U, field.V
    n = field.grid.n
    for side, kind in enumerate(field.bc):
        if isinstance(kind, tuple):
            kind, data = kind
        if kind == "periodic":
            if side == 0:
                U[:NG] = U[n:n + NG]
                V[:NG] = V[n:n + NG]
            else:
                U[-NG:] = U[NG:2 * NG]
                V[-NG:] = V[NG:2 * NG]
        elif kind == "outflow":
            edge = NG if side == 0 else -NG - 1
            sl = slice(0, NG) if side == 0 else slice(-NG, None)
            U[sl] = U[edge]
            V[sl] = V[edge]
        elif kind == "reflect":
            for k in range(NG):
                g = NG - 1 - k if side == 0 else -NG + k
                m = NG + k if side == 0 else -NG - 1 - k
                U[g] = U[m] * _REFLECT_SIGN
                V[g] = -V[m] * _REFLECT_SIGN
        elif kind == "inflow":
            sl = slice(0, NG) if side == 0 else slice(-NG, None)
            U[sl] = data
            V[sl] = 0.0
        else:
            raise ValueError(f"unknown boundary kind '{kind}'")


@dataclass
class Rhs1D:
    dU: np.ndarray
    dV: np.ndarray
    alpha: float
    troubled: np.ndarray
    limited: np.ndarray
    recovery_iterations: int
    eig_fallbacks: int


def _stencils(U, V):
    """(cells, dof, 6) stencil tensors for all cells with both neighbors."""
    return np.stack([U[:-2], U[1:-1], U[2:], V[:-2], V[1:-1], V[2:]], axis=-1)


def rhs_1d(field: Field1D, cfg: SchemeConfig) -> Rhs1D:
    """Semi-discrete tendencies of the interior averages and first moments."""
    fill_ghosts_1d(field)
    n = field.grid.n
    dx = field.grid.dx
    gamma = field.gamma

    # processed cells: interior plus one ghost ring, indices 1..n+2 of the pad
    S = _stencils(field.U, field.V)            # (n+2, 3, 6)
    avgs = field.U[1:-1]
    rep_d, rep_g = avgs[..., 0], g_value(avgs)
    bad = ~((rep_d > 0) & (rep_g > 0))
    if np.any(bad[1:-1]):
        idx = int(np.flatnonzero(bad[1:-1])[0])
        raise InadmissibleStateError(
            f"inadmissible cell average at interior cell {idx}", index=(idx,))

    rho_a, v_a, p_a, rec_avg = _recover_info(avgs, gamma, cfg)

    # troubled cells (interior only) from the KXRCF jump indicator
    face_vals = np.einsum("fk,cdk->cdf", _EVAL_FACES, S)   # (n+2, 3, 2)
    ind = (0, 2)                                           # D and E channels
    face_self = np.stack([face_vals[1:-1, d, :] for d in ind], axis=-1)
    nbr_left = np.stack([face_vals[:-2, d, 1] for d in ind], axis=-1)
    nbr_right = np.stack([face_vals[2:, d, 0] for d in ind], axis=-1)
    face_nbr = np.stack([nbr_left, nbr_right], axis=-2)
    vbar = v_a[1:-1, 0]
    norms = np.stack([np.abs(avgs[1:-1, d]) for d in ind], axis=-1)
    troubled = np.zeros(n + 2, dtype=bool)
    troubled[1:-1] = kxrcf_flag_1d(face_self, face_nbr,
                                   vbar > -cfg.kxrcf.v_tol,
                                   vbar < cfg.kxrcf.v_tol,
                                   norms, dx, cfg.kxrcf)
    for _ in range(cfg.kxrcf.dilate):
        grown = troubled.copy()
        grown[1:] |= troubled[:-1]
        grown[:-1] |= troubled[1:]
        troubled = grown
        troubled[0] = troubled[-1] = False

    if np.any(troubled):
        tidx = np.flatnonzero(troubled)
        field.V[1:-1][tidx] = limited_first_moment(S[tidx], dx, cfg.weno_1d)
        fill_ghosts_1d(field)
        S = _stencils(field.U, field.V)

    # point values at the four Gauss-Lobatto offsets, (n+2, 4, 3)
    points = np.einsum("pk,cdk->cpd", _EVAL_GL, S)
    eig_fallbacks = 0
    if np.any(troubled):
        tidx = np.flatnonzero(troubled)
        # interior offsets: componentwise nonlinear reconstruction
        inner = mh_eval_points(S[tidx], GL_NODES[1:3], cfg.weno_1d)
        points[tidx, 1:3, :] = np.swapaxes(inner, -1, -2)
        # face offsets: characteristic-space nonlinear reconstruction
        faces = np.unique(np.concatenate([tidx - 1, tidx]))
        rho_f = 0.5 * (rho_a[faces] + rho_a[faces + 1])
        v_f = 0.5 * (v_a[faces] + v_a[faces + 1])
        p_f = 0.5 * (p_a[faces] + p_a[faces + 1])
        eig = eigensystem_at(rho_f, v_f, p_f, gamma, 0, cfg.rescale,
                             cfg.eig_cond_limit)
        eig_fallbacks = int(np.count_nonzero(eig.fallback))
        pos = np.searchsorted(faces, np.stack([tidx - 1, tidx]))
        for col, eta in ((0, GL_NODES[0]), (1, GL_NODES[3])):
            L = eig.left[pos[col]]
            R = eig.right[pos[col]]
            char = np.einsum("tij,tjk->tik", L, S[tidx])
            vals = mh_eval_points(char, eta, cfg.weno_1d)
            points[tidx, 0 if col == 0 else 3, :] = \
                np.einsum("tij,tj->ti", R, vals)

    limited = np.zeros(n + 2, dtype=bool)
    if cfg.pcp_limiter:
        eps_d, eps_g = pcp_floors(avgs)
        points, rec = pcp_limit_1d(points, avgs, eps_d, eps_g)
        limited = rec.activated

    # primitives at all point values (faces feed fluxes, all feed H)
    rho_p, v_p, p_p, rec_pts = _recover_info(points, gamma, cfg)
    speeds = max_signal_speed_packed(rho_p[:, (0, 3)], v_p[:, (0, 3)],
                                     p_p[:, (0, 3)], gamma, 0)
    alpha = float(np.max(speeds))

    F = flux_packed(points, v_p, p_p, 0)       # (n+2, 4, 3)
    # faces k = 0..n between processed cells k and k+1
    left = points[:-1, 3, :]
    right = points[1:, 0, :]
    fhat = 0.5 * (F[:-1, 3, :] + F[1:, 0, :] - alpha * (right - left))

    dU = -(fhat[1:] - fhat[:-1]) / dx
    H = np.einsum("l,cld->cd", GL_WEIGHTS, F[1:-1])
    dV = -(fhat[1:] + fhat[:-1]) / (2.0 * dx) + H / dx

    iters = int(np.sum(rec_avg.iterations)) + int(np.sum(rec_pts.iterations))
    return Rhs1D(dU, dV, alpha, troubled[1:-1], limited[1:-1], iters,
                 eig_fallbacks)


def _recover_info(u, gamma, cfg):
    res = recover_pressure_batch(u, gamma, cfg.recovery, cfg.recovery_cfg)
    v, rho = finish_recovery(res.p, u)
    return rho, v, res.p, res


def _check_admissible(U, where):
    ok = (U[..., 0] > 0) & (g_value(U) > 0)
    if not np.all(ok):
        idx = int(np.flatnonzero(~ok)[0])
        raise InadmissibleStateError(
            f"inadmissible average after {where} at cell {idx}", index=(idx,))


def step_ssprk3_1d(field: Field1D, dt, cfg, accum=None, first_rhs=None):
    """One SSP-RK3 step in place; returns aggregate diagnostics."""
    U0 = field.U[NG:-NG].copy()
    V0 = field.V[NG:-NG].copy()
    troubled = 0
    limited = 0
    iters = 0
    fallbacks = 0
    alpha = 0.0
    for k, (a, b) in enumerate(SSP_RK3_STAGES):
        out = first_rhs if (k == 0 and first_rhs is not None) \
            else rhs_1d(field, cfg)
        alpha = max(alpha, out.alpha)
        troubled += int(np.count_nonzero(out.troubled))
        limited += int(np.count_nonzero(out.limited))
        iters += out.recovery_iterations
        fallbacks += out.eig_fallbacks
        if accum is not None:
            accum[0][out.troubled] += 1
            accum[1][out.limited] += 1
        Ui, Vi = field.interior()
        Unew = a * U0 + b * (Ui + dt * out.dU)
        Vnew = a * V0 + b * (Vi + dt * out.dV)
        _check_admissible(Unew, f"stage {k + 1}")
        field.U[NG:-NG] = Unew
        field.V[NG:-NG] = Vnew
    return alpha, troubled, limited, iters, fallbacks


def run_1d(field: Field1D, t_final, cfg: SchemeConfig | None = None,
           max_steps=10 ** 7) -> RunResult:
    """Advance to t_final, clipping the last step; deterministic per config."""
    cfg = cfg or SchemeConfig()
    n = field.grid.n
    result = RunResult(field, [], np.zeros(n, dtype=np.int64),
                       np.zeros(n, dtype=np.int64))
    t = 0.0
    step = 0
    while t < t_final - 1e-14 * max(1.0, t_final):
        if step >= max_steps:
            raise StepFailure("step budget exhausted", step=step)
        saved_U = field.U.copy()
        saved_V = field.V.copy()
        # the first stage does not depend on dt, so it also prices the step
        try:
            rhs1 = rhs_1d(field, cfg)
        except InadmissibleStateError as err:
            raise StepFailure(
                f"inadmissible state entering step at t={t:.6g}: {err}",
                step=step, index=err.index) from err
        dt, bound = select_dt(cfg, field.grid.dx / rhs1.alpha,
                              dt_pcp_1d(rhs1.alpha, field.grid.dx))
        if t + dt >= t_final:
            dt = t_final - t
            bound = "final"
        retries = 0
        accum = (result.troubled_map, result.limited_map)
        while True:
            try:
                alpha, ntr, nlim, iters, nfb = step_ssprk3_1d(
                    field, dt, cfg, accum, first_rhs=rhs1)
                break
            except InadmissibleStateError as err:
                field.U[:] = saved_U
                field.V[:] = saved_V
                if not (cfg.retry_on_violation and cfg.pcp_limiter) \
                        or retries >= cfg.max_retries:
                    raise StepFailure(
                        f"inadmissible averages at t={t:.6g}: {err}",
                        step=step, index=err.index) from err
                retries += 1
                dt *= 0.5
                bound = "retry"
                rhs1 = rhs_1d(field, cfg)
        t += dt
        step += 1
        result.reports.append(StepReport(t, dt, (alpha,), bound, ntr, nlim,
                                         iters, retries, nfb))
    return result
