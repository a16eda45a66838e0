"""2D moment reconstruction on the 3x3 block.

The linear operator fits a quartic (15 coefficients, total degree <= 4) to the
nine cell averages plus the center cell's two first moments (11 equality
constraints) while minimizing the mismatch of the edge-neighbor first moments
in least squares; the constrained problem is solved once by the nullspace
method and cached as a 15x19 matrix. The nonlinear operator combines that
quartic with four quadratics fitted to the 2x2 corner blocks.

Cells of the block are numbered 1..9 row by row from the bottom-left, so the
center cell is 5. The flattened input layout on the last axis is

    [u1..u9, v2, v4, v5, v6, v8, w2, w4, w5, w6, w8]

with v the x-direction and w the y-direction first moments, each about its
own cell center, in reference coordinates xi = (x-x_i)/dx, eta = (y-y_j)/dy.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .config import WenoParams

# three-point Gauss rule used on faces and in the interior
GAUSS3_NODES = np.array([-np.sqrt(15.0) / 10.0, 0.0, np.sqrt(15.0) / 10.0])
GAUSS3_WEIGHTS = np.array([5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0])

CELL_OFFSETS = {1: (-1, -1), 2: (0, -1), 3: (1, -1), 4: (-1, 0), 5: (0, 0),
                6: (1, 0), 7: (-1, 1), 8: (0, 1), 9: (1, 1)}
V_SLOT = {2: 9, 4: 10, 5: 11, 6: 12, 8: 13}
W_SLOT = {2: 14, 4: 15, 5: 16, 6: 17, 8: 18}

QUARTIC_BASIS = [(s, r) for d in range(5) for s in range(d, -1, -1)
                 for r in (d - s,)]
QUAD_BASIS = [(s, r) for d in range(3) for s in range(d, -1, -1)
              for r in (d - s,)]
QUAD_STENCILS = {1: (1, 2, 4, 5), 2: (2, 3, 5, 6), 3: (4, 5, 7, 8),
                 4: (5, 6, 8, 9)}


def _seg(n, c):
    """Integral of t^n over [c-1/2, c+1/2]."""
    return ((c + 0.5) ** (n + 1) - (c - 0.5) ** (n + 1)) / (n + 1)


def _avg_row(basis, cx, cy):
    return np.array([_seg(s, cx) * _seg(r, cy) for s, r in basis])


def _xmom_row(basis, cx, cy):
    return np.array([(_seg(s + 1, cx) - cx * _seg(s, cx)) * _seg(r, cy)
                     for s, r in basis])


def _ymom_row(basis, cx, cy):
    return np.array([_seg(s, cx) * (_seg(r + 1, cy) - cy * _seg(r, cy))
                     for s, r in basis])


def _build_linear_map():
    """15x19 solution operator of the equality-constrained least squares fit."""
    A_eq = np.zeros((11, 15))
    B_eq = np.zeros((11, 19))
    for k in range(1, 10):
        A_eq[k - 1] = _avg_row(QUARTIC_BASIS, *CELL_OFFSETS[k])
        B_eq[k - 1, k - 1] = 1.0
    A_eq[9] = _xmom_row(QUARTIC_BASIS, 0, 0)
    B_eq[9, V_SLOT[5]] = 1.0
    A_eq[10] = _ymom_row(QUARTIC_BASIS, 0, 0)
    B_eq[10, W_SLOT[5]] = 1.0

    A_ls = np.zeros((8, 15))
    B_ls = np.zeros((8, 19))
    for i, k in enumerate((2, 4, 6, 8)):
        A_ls[i] = _xmom_row(QUARTIC_BASIS, *CELL_OFFSETS[k])
        B_ls[i, V_SLOT[k]] = 1.0
        A_ls[4 + i] = _ymom_row(QUARTIC_BASIS, *CELL_OFFSETS[k])
        B_ls[4 + i, W_SLOT[k]] = 1.0

    _, sv, Vt = np.linalg.svd(A_eq)
    assert sv.min() > 1e-10, "constraint rows are expected to be independent"
    N = Vt[11:].T
    ALN = A_ls @ N
    assert np.linalg.matrix_rank(ALN) == N.shape[1], "minimizer must be unique"
    part = np.linalg.pinv(A_eq) @ B_eq
    corr = N @ np.linalg.pinv(ALN) @ (B_ls - A_ls @ part)
    return part + corr


def _build_quad_maps():
    maps = []
    for n in range(1, 5):
        A = np.zeros((6, 6))
        B = np.zeros((6, 19))
        for i, k in enumerate(QUAD_STENCILS[n]):
            A[i] = _avg_row(QUAD_BASIS, *CELL_OFFSETS[k])
            B[i, k - 1] = 1.0
        A[4] = _xmom_row(QUAD_BASIS, 0, 0)
        B[4, V_SLOT[5]] = 1.0
        A[5] = _ymom_row(QUAD_BASIS, 0, 0)
        B[5, W_SLOT[5]] = 1.0
        maps.append(np.linalg.solve(A, B))
    return maps


LINEAR_MAP = _build_linear_map()
QUAD_MAPS = _build_quad_maps()


@dataclass
class Stencil2D:
    """Nine zeroth moments plus the five x- and y-first moments (cells
    2,4,5,6,8) of one scalar channel."""

    u: np.ndarray
    v: np.ndarray
    w: np.ndarray

    def packed(self):
        return np.concatenate([np.asarray(self.u, dtype=np.float64),
                               np.asarray(self.v, dtype=np.float64),
                               np.asarray(self.w, dtype=np.float64)], axis=-1)


def eval_matrix(basis, points):
    """(n_points, len(basis)) monomial values at reference points (xi, eta)."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    return np.array([[x ** s * y ** r for s, r in basis] for x, y in pts])


def ml2_build(s):
    """Quartic coefficients of the constrained least-squares fit."""
    s = s.packed() if isinstance(s, Stencil2D) else np.asarray(s, dtype=np.float64)
    return s @ LINEAR_MAP.T


def ml2_eval(s, xi, eta):
    coeffs = ml2_build(s)
    e = eval_matrix(QUARTIC_BASIS, [(xi, eta)])[0]
    return coeffs @ e


def linear_point_matrix(points):
    """(n_points, 19) map from packed inputs to quartic values at points."""
    return eval_matrix(QUARTIC_BASIS, points) @ LINEAR_MAP


# --- smoothness indicators as quadratic forms --------------------------------

def _deriv_factor(s, r, l1, l2):
    if s < l1 or r < l2:
        return 0.0, 0, 0
    f = 1.0
    for t in range(l1):
        f *= s - t
    for t in range(l2):
        f *= r - t
    return f, s - l1, r - l2


def _beta_blocks(basis, rdeg):
    """[(l1-l2, B)] so that beta = sum aspect^(l1-l2) a^T B a."""
    n = len(basis)
    blocks = {}
    for l1 in range(rdeg + 1):
        for l2 in range(rdeg + 1 - l1):
            if l1 + l2 < 1:
                continue
            B = np.zeros((n, n))
            dd = [_deriv_factor(s, r, l1, l2) for s, r in basis]
            for p, (fp, sp, rp) in enumerate(dd):
                if fp == 0.0:
                    continue
                for q, (fq, sq, rq) in enumerate(dd):
                    if fq == 0.0:
                        continue
                    B[p, q] = fp * fq * _seg(sp + sq, 0) * _seg(rp + rq, 0)
            key = l1 - l2
            blocks[key] = blocks.get(key, 0.0) + B
    return sorted(blocks.items())


_BETA4_BLOCKS = _beta_blocks(QUARTIC_BASIS, 4)
_BETA2_BLOCKS = _beta_blocks(QUAD_BASIS, 2)


@lru_cache(maxsize=32)
def _beta_matrices(aspect):
    """Aspect-combined quadratic forms for the quartic and the quadratics."""
    B4 = sum(aspect ** e * B for e, B in _BETA4_BLOCKS)
    B2 = sum(aspect ** e * B for e, B in _BETA2_BLOCKS)
    return B4, B2


def smoothness_indicators_2d(s, aspect=1.0):
    """(beta_0 .. beta_4) for the quartic and the four corner quadratics.

    `aspect` is dy/dx; each derivative-square integral carries the factor
    (dy/dx)^(l1-l2) on a non-square cell.
    """
    s = np.asarray(s, dtype=np.float64)
    B4, B2 = _beta_matrices(float(aspect))
    c0 = s @ LINEAR_MAP.T
    betas = [np.einsum("...i,ij,...j->...", c0, B4, c0)]
    for Q in QUAD_MAPS:
        cn = s @ Q.T
        betas.append(np.einsum("...i,ij,...j->...", cn, B2, cn))
    return np.stack(betas, axis=-1)


def nonlinear_weights_2d(betas, params: WenoParams):
    """Normalized scale-invariant weights; tau averages |beta_0 - beta_n|."""
    betas = np.asarray(betas, dtype=np.float64)
    g = np.asarray(params.gamma_lin, dtype=np.float64)
    tau = np.sum(np.abs(betas[..., :1] - betas[..., 1:]), axis=-1) / 4.0
    raw = g * (1.0 + tau[..., None] ** 2 / (betas * betas + params.epsilon))
    return raw / np.sum(raw, axis=-1, keepdims=True)


def mh2_eval_points(s, points, params: WenoParams | None = None, aspect=1.0):
    """Nonlinear evaluation at reference points, sharing the weights.

    Returns (..., n_points).
    """
    params = params or WenoParams((0.98, 0.005, 0.005, 0.005, 0.005))
    s = np.asarray(s, dtype=np.float64)
    omega = nonlinear_weights_2d(smoothness_indicators_2d(s, aspect), params)
    e4 = eval_matrix(QUARTIC_BASIS, points)
    e2 = eval_matrix(QUAD_BASIS, points)
    g = params.gamma_lin
    p0 = (s @ LINEAR_MAP.T) @ e4.T
    pn = [(s @ Q.T) @ e2.T for Q in QUAD_MAPS]
    out = omega[..., 0:1] * (p0 / g[0]
                             - sum(g[n] * pn[n - 1] for n in range(1, 5)) / g[0])
    for n in range(1, 5):
        out = out + omega[..., n:n + 1] * pn[n - 1]
    return out


def mh2_eval(s, xi, eta, params: WenoParams | None = None, aspect=1.0):
    """Single-point nonlinear evaluation."""
    s = s.packed() if isinstance(s, Stencil2D) else s
    return mh2_eval_points(s, [(xi, eta)], params, aspect)[..., 0]
