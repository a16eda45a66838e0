"""2D finite volume solver evolving cell averages and both first moments.

The pipeline per right-hand-side evaluation mirrors the 1D solver: ghost
fill, per-direction troubled-cell detection, first-moment limiting, point
reconstruction at the 9 interior Gauss points (always linear) and the 12 face
points (linear, or characteristic nonlinear in troubled cells), PCP point
limiting over all 21 values, Lax-Friedrichs fluxes on both face families,
and optionally the cylindrical geometric source evaluated at the interior
points. Point ordering: 0..8 interior (x fastest), 9..11 x- face, 12..14 x+
face, 15..17 y- face, 18..20 y+ face.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SchemeConfig
from .errors import InadmissibleStateError, StepFailure
from .limiters import kxrcf_flag_1d, pcp_floors, pcp_limit_2d
from .reconstruct1d import limited_first_moment
from .reconstruct2d import (CELL_OFFSETS, GAUSS3_NODES, GAUSS3_WEIGHTS,
                            V_SLOT, W_SLOT, linear_point_matrix,
                            mh2_eval_points)
from .recovery import finish_recovery, recover_pressure_batch
from .state import (eigensystem_at, flux_packed, g_value,
                    max_signal_speed_packed)
from .stepping import (OMEGA_GL1, RunResult, SSP_RK3_STAGES, StepReport,
                       dt_pcp_2d, select_dt)

NG = 2

# the 21 reconstruction points in reference coordinates
_PTS = ([(bx, by) for by in GAUSS3_NODES for bx in GAUSS3_NODES]
        + [(-0.5, b) for b in GAUSS3_NODES] + [(0.5, b) for b in GAUSS3_NODES]
        + [(b, -0.5) for b in GAUSS3_NODES] + [(b, 0.5) for b in GAUSS3_NODES])
SL_INT = slice(0, 9)
SL_XM, SL_XP = slice(9, 12), slice(12, 15)
SL_YM, SL_YP = slice(15, 18), slice(18, 21)
FACE_SLICES = (SL_XM, SL_XP, SL_YM, SL_YP)

_P_ALL = linear_point_matrix(_PTS)                       # (21, 19)
_W3 = GAUSS3_WEIGHTS
_ROW_XM = _W3 @ _P_ALL[SL_XM]                            # face-averaged rows
_ROW_XP = _W3 @ _P_ALL[SL_XP]
_ROW_YM = _W3 @ _P_ALL[SL_YM]
_ROW_YP = _W3 @ _P_ALL[SL_YP]
# interior quadrature weights w[l]*w[k] matching point ordering 3*k + l
_W_INT = np.array([_W3[k] * _W3[el] for k in range(3) for el in range(3)])
_BX_INT = np.array([GAUSS3_NODES[el] for k in range(3) for el in range(3)])
_BY_INT = np.array([GAUSS3_NODES[k] for k in range(3) for el in range(3)])


@dataclass
class Grid2D:
    nx: int
    ny: int
    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float

    @property
    def dx(self):
        return (self.x_hi - self.x_lo) / self.nx

    @property
    def dy(self):
        return (self.y_hi - self.y_lo) / self.ny

    def centers(self):
        x = self.x_lo + (np.arange(self.nx) + 0.5) * self.dx
        y = self.y_lo + (np.arange(self.ny) + 0.5) * self.dy
        return x, y


@dataclass
class Field2D:
    """Padded moment arrays (nx+4, ny+4, 4); interior at [NG:-NG, NG:-NG]."""

    grid: Grid2D
    U: np.ndarray
    V: np.ndarray
    W: np.ndarray
    bc: tuple               # (x_lo, x_hi, y_lo, y_hi)
    gamma: float
    cylindrical: bool = False

    @classmethod
    def allocate(cls, grid, bc, gamma, cylindrical=False):
        shape = (grid.nx + 2 * NG, grid.ny + 2 * NG, 4)
        return cls(grid, np.zeros(shape), np.zeros(shape), np.zeros(shape),
                   bc, gamma, cylindrical)

    def interior(self):
        sl = (slice(NG, -NG), slice(NG, -NG))
        return self.U[sl], self.V[sl], self.W[sl]

    def copy(self):
        return Field2D(self.grid, self.U.copy(), self.V.copy(), self.W.copy(),
                       self.bc, self.gamma, self.cylindrical)


def _reflect_sign(axis):
    s = np.ones(4)
    s[1 + axis] = -1.0
    return s


def fill_ghosts_2d(field: Field2D):
    U, V, W = field.U, field.V, field.W
    nx, ny = field.grid.nx, field.grid.ny
    for side, kind in enumerate(field.bc):
        data = None
        if isinstance(kind, tuple):
            kind, data = kind
        axis = 0 if side < 2 else 1
        lo = side % 2 == 0
        if kind == "custom":
            data(U, V, W, side)
            continue

        def _sl(idx):
            return (idx, slice(None)) if axis == 0 else (slice(None), idx)

        if kind == "periodic":
            src = slice(nx, nx + NG) if axis == 0 else slice(ny, ny + NG)
            src2 = slice(NG, 2 * NG)
            if lo:
                for A in (U, V, W):
                    A[_sl(slice(0, NG))] = A[_sl(src)]
            else:
                for A in (U, V, W):
                    A[_sl(slice(-NG, None))] = A[_sl(src2)]
        elif kind == "outflow":
            edge = NG if lo else (-NG - 1)
            dst = slice(0, NG) if lo else slice(-NG, None)
            for A in (U, V, W):
                A[_sl(dst)] = A[_sl(edge)][None] if axis == 0 \
                    else A[_sl(edge)][:, None]
        elif kind == "reflect":
            sign = _reflect_sign(axis)
            mom = V if axis == 0 else W
            other = W if axis == 0 else V
            for k in range(NG):
                g = NG - 1 - k if lo else -NG + k
                m = NG + k if lo else -NG - 1 - k
                U[_sl(g)] = U[_sl(m)] * sign
                mom[_sl(g)] = -mom[_sl(m)] * sign
                other[_sl(g)] = other[_sl(m)] * sign
        elif kind == "inflow":
            dst = slice(0, NG) if lo else slice(-NG, None)
            data = np.asarray(data)
            if data.ndim == 2:               # per-edge profile
                data = data[None] if axis == 0 else data[:, None, :]
            U[_sl(dst)] = data
            V[_sl(dst)] = 0.0
            W[_sl(dst)] = 0.0
        else:
            raise ValueError(f"unknown boundary kind '{kind}'")


def _gather_inputs(field: Field2D):
    """(nx+2, ny+2, 4, 19) stencil inputs for the interior plus one ring."""
    U, V, W = field.U, field.V, field.W
    nx2 = field.grid.nx + 2
    ny2 = field.grid.ny + 2

    def block(A, di, dj):
        return A[1 + di:1 + di + nx2, 1 + dj:1 + dj + ny2]

    cols = [block(U, *CELL_OFFSETS[k]) for k in range(1, 10)]
    cols += [block(V, *CELL_OFFSETS[k]) for k in (2, 4, 5, 6, 8)]
    cols += [block(W, *CELL_OFFSETS[k]) for k in (2, 4, 5, 6, 8)]
    return np.stack(cols, axis=-1)


@dataclass
class Rhs2D:
    dU: np.ndarray
    dV: np.ndarray
    dW: np.ndarray
    alpha: tuple
    source_bound: float
    troubled: np.ndarray
    limited: np.ndarray
    recovery_iterations: int
    eig_fallbacks: int
    mu: tuple


def _recover(u, gamma, cfg):
    res = recover_pressure_batch(u, gamma, cfg.recovery, cfg.recovery_cfg)
    v, rho = finish_recovery(res.p, u)
    return rho, v, res.p, res


def _char_faces(points, inputs, tidx, avg_prims, axis, cfg, gamma, aspect):
    """Replace the two axis faces of troubled cells by characteristic
    nonlinear reconstruction; returns the eigendecomposition fallback count."""
    rho_a, v_a, p_a = avg_prims
    ti, tj = tidx
    if axis == 0:
        nbr_lo = (ti - 1, tj)
        nbr_hi = (ti + 1, tj)
        sl_lo, sl_hi = SL_XM, SL_XP
    else:
        nbr_lo = (ti, tj - 1)
        nbr_hi = (ti, tj + 1)
        sl_lo, sl_hi = SL_YM, SL_YP
    fallbacks = 0
    for nbr, sl, own_first in ((nbr_lo, sl_lo, False), (nbr_hi, sl_hi, True)):
        pair = ((ti, tj), nbr) if own_first else (nbr, (ti, tj))
        rho = 0.5 * (rho_a[pair[0]] + rho_a[pair[1]])
        vv = 0.5 * (v_a[pair[0]] + v_a[pair[1]])
        p = 0.5 * (p_a[pair[0]] + p_a[pair[1]])
        eig = eigensystem_at(rho, vv, p, gamma, axis, cfg.rescale,
                             cfg.eig_cond_limit)
        fallbacks += int(np.count_nonzero(eig.fallback))
        char = np.einsum("tij,tjk->tik", eig.left, inputs[ti, tj])
        vals = mh2_eval_points(char, _PTS[sl.start:sl.stop], cfg.weno_2d,
                               aspect)                     # (t, 4, 3)
        lifted = np.einsum("tij,tjl->tli", eig.right, vals)
        points[ti, tj, sl] = lifted
    return fallbacks


def rhs_2d(field: Field2D, cfg: SchemeConfig) -> Rhs2D:
    fill_ghosts_2d(field)
    grid = field.grid
    nx, ny = grid.nx, grid.ny
    dx, dy = grid.dx, grid.dy
    gamma = field.gamma
    aspect = dy / dx
    core = (slice(1, -1), slice(1, -1))

    inputs = _gather_inputs(field)
    avgs = field.U[1:-1, 1:-1]
    ok = (avgs[..., 0] > 0) & (g_value(avgs) > 0)
    if not np.all(ok[core]):
        idx = tuple(np.argwhere(~ok[core])[0])
        raise InadmissibleStateError(
            f"inadmissible cell average at interior cell {idx}", index=idx)
    rho_a, v_a, p_a, rec_avg = _recover(avgs, gamma, cfg)

    # --- troubled cells, per direction ---------------------------------------
    ind = (0, 3)        # D and E channels
    favg = {name: inputs[..., ind, :] @ row
            for name, row in (("xm", _ROW_XM), ("xp", _ROW_XP),
                              ("ym", _ROW_YM), ("yp", _ROW_YP))}
    norms = np.abs(avgs[core][..., ind])
    vx = v_a[core][..., 0]
    vy = v_a[core][..., 1]
    vtol = cfg.kxrcf.v_tol
    fs_x = np.stack([favg["xm"][core], favg["xp"][core]], axis=-2)
    fn_x = np.stack([favg["xp"][:-2, 1:-1], favg["xm"][2:, 1:-1]], axis=-2)
    flags_x = kxrcf_flag_1d(fs_x, fn_x, vx > -vtol, vx < vtol, norms, dx,
                            cfg.kxrcf)
    fs_y = np.stack([favg["ym"][core], favg["yp"][core]], axis=-2)
    fn_y = np.stack([favg["yp"][1:-1, :-2], favg["ym"][1:-1, 2:]], axis=-2)
    flags_y = kxrcf_flag_1d(fs_y, fn_y, vy > -vtol, vy < vtol, norms, dy,
                            cfg.kxrcf)
    troubled = np.zeros((nx + 2, ny + 2), dtype=bool)
    troubled[core] = flags_x | flags_y
    for _ in range(cfg.kxrcf.dilate):
        grown = troubled.copy()
        grown[1:, :] |= troubled[:-1, :]
        grown[:-1, :] |= troubled[1:, :]
        grown[:, 1:] |= grown[:, :-1].copy()
        grown[:, :-1] |= grown[:, 1:].copy()
        troubled = grown
        troubled[0, :] = troubled[-1, :] = False
        troubled[:, 0] = troubled[:, -1] = False

    if np.any(troubled):
        ti, tj = np.nonzero(troubled)
        # dimension-split rebuild of both first moments from 1D stencils
        U, V, W = field.U, field.V, field.W
        pi, pj = ti + 1, tj + 1       # padded indices
        sx = np.stack([U[pi - 1, pj], U[pi, pj], U[pi + 1, pj],
                       V[pi - 1, pj], V[pi, pj], V[pi + 1, pj]], axis=-1)
        sy = np.stack([U[pi, pj - 1], U[pi, pj], U[pi, pj + 1],
                       W[pi, pj - 1], W[pi, pj], W[pi, pj + 1]], axis=-1)
        V[pi, pj] = limited_first_moment(sx, dx, cfg.weno_1d)
        W[pi, pj] = limited_first_moment(sy, dy, cfg.weno_1d)
        fill_ghosts_2d(field)
        inputs = _gather_inputs(field)

    # --- point values ---------------------------------------------------------
    points = np.moveaxis(inputs @ _P_ALL.T, -1, -2)       # (nx+2, ny+2, 21, 4)
    eig_fallbacks = 0
    if np.any(troubled):
        tidx = np.nonzero(troubled)
        eig_fallbacks += _char_faces(points, inputs, tidx,
                                     (rho_a, v_a, p_a), 0, cfg, gamma, aspect)
        eig_fallbacks += _char_faces(points, inputs, tidx,
                                     (rho_a, v_a, p_a), 1, cfg, gamma, aspect)

    # direction weights from the cell-average signal speeds
    a1p = float(np.max(max_signal_speed_packed(rho_a, v_a, p_a, gamma, 0)))
    a2p = float(np.max(max_signal_speed_packed(rho_a, v_a, p_a, gamma, 1)))
    mu1 = (a1p / dx) / (a1p / dx + a2p / dy)
    mu2 = 1.0 - mu1

    limited = np.zeros((nx + 2, ny + 2), dtype=bool)
    if cfg.pcp_limiter:
        eps_d, eps_g = pcp_floors(avgs)
        points, rec = pcp_limit_2d(points, avgs, mu1, mu2, eps_d, eps_g,
                                   FACE_SLICES)
        limited = rec.activated

    rho_p, v_p, p_p, rec_pts = _recover(points, gamma, cfg)
    alpha1 = float(np.max(max_signal_speed_packed(
        rho_p[..., 9:15], v_p[..., 9:15, :], p_p[..., 9:15], gamma, 0)))
    alpha2 = float(np.max(max_signal_speed_packed(
        rho_p[..., 15:21], v_p[..., 15:21, :], p_p[..., 15:21], gamma, 1)))

    F1 = flux_packed(points, v_p, p_p, 0)
    F2 = flux_packed(points, v_p, p_p, 1)

    # Lax-Friedrichs fluxes; index = left/lower processed cell of the interface
    fhat1 = 0.5 * (F1[:-1, :, SL_XP] + F1[1:, :, SL_XM]
                   - alpha1 * (points[1:, :, SL_XM] - points[:-1, :, SL_XP]))
    fhat2 = 0.5 * (F2[:, :-1, SL_YP] + F2[:, 1:, SL_YM]
                   - alpha2 * (points[:, 1:, SL_YM] - points[:, :-1, SL_YP]))

    w3 = _W3
    wb3 = _W3 * GAUSS3_NODES
    ii = slice(1, -1)
    # face-quadrature contractions over the 3 Gauss points of each face
    d1 = np.einsum("l,xyld->xyd", w3, fhat1[1:, ii] - fhat1[:-1, ii]) / dx
    d2 = np.einsum("l,xyld->xyd", w3, fhat2[ii, 1:] - fhat2[ii, :-1]) / dy
    s1 = np.einsum("l,xyld->xyd", w3, fhat1[1:, ii] + fhat1[:-1, ii]) / (2 * dx)
    s2 = np.einsum("l,xyld->xyd", w3, fhat2[ii, 1:] + fhat2[ii, :-1]) / (2 * dy)
    d1b = np.einsum("l,xyld->xyd", wb3, fhat1[1:, ii] - fhat1[:-1, ii]) / dx
    d2b = np.einsum("l,xyld->xyd", wb3, fhat2[ii, 1:] - fhat2[ii, :-1]) / dy
    H1 = np.einsum("p,xypd->xyd", _W_INT, F1[core][..., SL_INT, :]) / dx
    H2 = np.einsum("p,xypd->xyd", _W_INT, F2[core][..., SL_INT, :]) / dy

    dU = -d1 - d2
    dV = -s1 - d2b + H1
    dW = -d1b - s2 + H2

    source_bound = np.inf
    if field.cylindrical:
        xc, _ = grid.centers()
        r_pts = xc[:, None, None] + _BX_INT[None, None, :] * dx  # interior cells
        if np.any(r_pts <= 0.0):
            raise InadmissibleStateError("cylindrical source needs r > 0 at "
                                         "all interior quadrature points")
        pts_i = points[core][..., SL_INT, :]
        v1_i = v_p[core][..., SL_INT, 0]
        src = _cyl_source(pts_i, v1_i, r_pts)
        dU = dU + np.einsum("p,xypd->xyd", _W_INT, src)
        dV = dV + np.einsum("p,xypd->xyd", _W_INT * _BX_INT, src)
        dW = dW + np.einsum("p,xypd->xyd", _W_INT * _BY_INT, src)
        g_i = g_value(pts_i)
        p_i = p_p[core][..., SL_INT]
        mask = v1_i > 0.0
        if np.any(mask):
            bound = r_pts * g_i / ((p_i + g_i) * np.where(mask, v1_i, 1.0))
            source_bound = float(np.min(np.where(mask, bound, np.inf)))

    iters = int(np.sum(rec_avg.iterations)) + int(np.sum(rec_pts.iterations))
    return Rhs2D(dU, dV, dW, (alpha1, alpha2), source_bound,
                 troubled[core], limited[core], iters, eig_fallbacks,
                 (mu1, mu2))


def _cyl_source(pts, v1, r):
    """S(U, r) = -(1/r) (D v1, m1 v1, m2 v1, m1)."""
    src = np.empty_like(pts)
    src[..., 0] = pts[..., 0] * v1
    src[..., 1] = pts[..., 1] * v1
    src[..., 2] = pts[..., 2] * v1
    src[..., 3] = pts[..., 1]
    return -src / r[..., None]


def _check_admissible(U, where):
    ok = (U[..., 0] > 0) & (g_value(U) > 0)
    if not np.all(ok):
        idx = tuple(np.argwhere(~ok)[0])
        raise InadmissibleStateError(
            f"inadmissible average after {where} at cell {idx}", index=idx)


def step_ssprk3_2d(field: Field2D, dt, cfg, accum=None, first_rhs=None):
    sl = (slice(NG, -NG), slice(NG, -NG))
    U0 = field.U[sl].copy()
    V0 = field.V[sl].copy()
    W0 = field.W[sl].copy()
    stats = dict(troubled=0, limited=0, iters=0, fallbacks=0,
                 alpha=(0.0, 0.0))
    for k, (a, b) in enumerate(SSP_RK3_STAGES):
        out = first_rhs if (k == 0 and first_rhs is not None) \
            else rhs_2d(field, cfg)
        stats["alpha"] = tuple(max(x, y) for x, y in zip(stats["alpha"],
                                                         out.alpha))
        stats["troubled"] += int(np.count_nonzero(out.troubled))
        stats["limited"] += int(np.count_nonzero(out.limited))
        stats["iters"] += out.recovery_iterations
        stats["fallbacks"] += out.eig_fallbacks
        if accum is not None:
            accum[0][out.troubled] += 1
            accum[1][out.limited] += 1
        Unew = a * U0 + b * (field.U[sl] + dt * out.dU)
        Vnew = a * V0 + b * (field.V[sl] + dt * out.dV)
        Wnew = a * W0 + b * (field.W[sl] + dt * out.dW)
        _check_admissible(Unew, f"stage {k + 1}")
        field.U[sl] = Unew
        field.V[sl] = Vnew
        field.W[sl] = Wnew
    return stats


def run_2d(field: Field2D, t_final, cfg: SchemeConfig | None = None,
           max_steps=10 ** 7) -> RunResult:
    cfg = cfg or SchemeConfig()
    grid = field.grid
    result = RunResult(field, [], np.zeros((grid.nx, grid.ny), np.int64),
                       np.zeros((grid.nx, grid.ny), np.int64))
    t = 0.0
    step = 0
    while t < t_final - 1e-14 * max(1.0, t_final):
        if step >= max_steps:
            raise StepFailure("step budget exhausted", step=step)
        saved = (field.U.copy(), field.V.copy(), field.W.copy())
        try:
            rhs1 = rhs_2d(field, cfg)
        except InadmissibleStateError as err:
            raise StepFailure(
                f"inadmissible state entering step at t={t:.6g}: {err}",
                step=step, index=err.index) from err
        a1, a2 = rhs1.alpha
        length = 1.0 / (a1 / grid.dx + a2 / grid.dy)
        dt, bound = select_dt(cfg, length,
                              dt_pcp_2d(a1, a2, grid.dx, grid.dy),
                              dt_pcp_2d(a1, a2, grid.dx, grid.dy,
                                        rhs1.source_bound))
        if t + dt >= t_final:
            dt = t_final - t
            bound = "final"
        retries = 0
        accum = (result.troubled_map, result.limited_map)
        while True:
            try:
                stats = step_ssprk3_2d(field, dt, cfg, accum, first_rhs=rhs1)
                break
            except InadmissibleStateError as err:
                field.U[:], field.V[:], field.W[:] = saved
                if not (cfg.retry_on_violation and cfg.pcp_limiter) \
                        or retries >= cfg.max_retries:
                    raise StepFailure(
                        f"inadmissible averages at t={t:.6g}: {err}",
                        step=step, index=err.index) from err
                retries += 1
                dt *= 0.5
                bound = "retry"
                rhs1 = rhs_2d(field, cfg)
        t += dt
        step += 1
        result.reports.append(StepReport(
            t, dt, stats["alpha"], bound, stats["troubled"], stats["limited"],
            stats["iters"], retries, stats["fallbacks"]))
    return result
