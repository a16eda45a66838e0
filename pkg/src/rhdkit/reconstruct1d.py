"""1D moment reconstruction on the three-cell stencil.

A quintic is pinned by the six moments (cell averages and first moments of
cells i-1, i, i+1, each first moment taken about its own cell center); two
one-sided quadratics share the stencil's halves. All coefficients are in the
reference coordinate eta = (x - x_i)/dx, so nothing depends on the mesh size.

The coefficient tables were obtained by solving the moment systems in exact
arithmetic; the nonlinear combination uses scale-invariant weights
w_n ~ gamma_n (1 + tau^2/(beta_n^2 + eps)).

Stencil layout everywhere: s = [u_{i-1}, u_i, u_{i+1}, v_{i-1}, v_i, v_{i+1}]
on the last axis.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import WenoParams

# four-point Gauss-Lobatto rule used by the scheme (nodes as cell offsets)
GL_NODES = np.array([-0.5, -np.sqrt(5.0) / 10.0, np.sqrt(5.0) / 10.0, 0.5])
GL_WEIGHTS = np.array([1.0 / 12.0, 5.0 / 12.0, 5.0 / 12.0, 1.0 / 12.0])

# quintic coefficients a_0..a_5 from the six moment constraints
QUINTIC_MAP = np.array([
    [-43 / 384, 235 / 192, -43 / 384, -27 / 64, 0, 27 / 64],
    [167 / 576, 0, -167 / 576, 281 / 288, 2449 / 144, 281 / 288],
    [23 / 16, -23 / 8, 23 / 16, 45 / 8, 0, -45 / 8],
    [-455 / 216, 0, 455 / 216, -785 / 108, -1945 / 54, -785 / 108],
    [-5 / 8, 5 / 4, -5 / 8, -15 / 4, 0, 15 / 4],
    [35 / 36, 0, -35 / 36, 77 / 18, 133 / 9, 77 / 18],
])

# quadratics: left-biased (cells i-1, i plus v_i), right-biased (i, i+1 plus v_i)
QUAD_LEFT_MAP = np.array([
    [-1 / 12, 13 / 12, 0, 0, -1, 0],
    [0, 0, 0, 0, 12, 0],
    [1, -1, 0, 0, 12, 0],
])
QUAD_RIGHT_MAP = np.array([
    [0, 13 / 12, -1 / 12, 0, 1, 0],
    [0, 0, 0, 0, 12, 0],
    [0, -1, 1, 0, -12, 0],
])

# smoothness indicator of the quintic: sum of weighted squares of the
# tabulated stencil combinations (equals the derivative-square integrals)
_B0_ROWS = np.array([
    [19 / 108, 0, -19 / 108, 31 / 54, -241 / 27, 31 / 54],
    [9 / 4, -9 / 2, 9 / 4, 15 / 2, 0, -15 / 2],
    [70 / 9, 0, -70 / 9, 200 / 9, 1280 / 9, 200 / 9],
    [5 / 2, -5, 5 / 2, 9, 0, -9],
    [175 / 18, 0, -175 / 18, 277 / 9, 1546 / 9, 277 / 9],
    [95 / 18, 0, -95 / 18, 155 / 9, 830 / 9, 155 / 9],
    [5 / 8, -5 / 4, 5 / 8, 15 / 4, 0, -15 / 4],
    [35 / 36, 0, -35 / 36, 77 / 18, 133 / 9, 77 / 18],
])
_B0_WEIGHTS = np.array([1, 1, 1, 1 / 12, 1 / 12, 1 / 180,
                        109341 / 175, 27553933 / 1764])


@dataclass
class Stencil1D:
    """Three zeroth moments and three first moments of one scalar channel."""

    u: np.ndarray
    v: np.ndarray

    def packed(self):
        return np.concatenate([np.asarray(self.u, dtype=np.float64),
                               np.asarray(self.v, dtype=np.float64)], axis=-1)


@dataclass
class WenoWeights:
    """Linear weights, guard epsilon, and the resulting nonlinear weights."""

    gamma_lin: tuple
    epsilon: float
    omega: np.ndarray


def _pack(u, v):
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    return np.concatenate([u, v], axis=-1)


def _poly_eval(coeffs, eta):
    """Evaluate sum coeffs[..., l] eta^l; eta scalar or trailing-axis array."""
    eta = np.asarray(eta, dtype=np.float64)
    out = np.zeros(np.broadcast_shapes(coeffs.shape[:-1], eta.shape))
    for l in range(coeffs.shape[-1] - 1, -1, -1):
        out = out * eta + coeffs[..., l]
    return out


def ml_eval(u, v, eta):
    """Value of the moment-interpolating quintic at offset eta in [-1/2, 1/2]."""
    s = _pack(u, v)
    return _poly_eval(s @ QUINTIC_MAP.T, eta)


def ml_eval_matrix(etas):
    """(len(etas), 6) map from a stencil to the quintic's values at offsets."""
    etas = np.atleast_1d(np.asarray(etas, dtype=np.float64))
    powers = etas[:, None] ** np.arange(6)[None, :]
    return powers @ QUINTIC_MAP


def smoothness_indicators(s):
    """(beta_0, beta_1, beta_2) for the quintic and the two quadratics."""
    s = np.asarray(s, dtype=np.float64)
    combos = s @ _B0_ROWS.T
    b0 = np.sum(_B0_WEIGHTS * combos * combos, axis=-1)
    um1, u0, up1 = s[..., 0], s[..., 1], s[..., 2]
    vm1, v0, vp1 = s[..., 3], s[..., 4], s[..., 5]
    b1 = 144.0 * v0 * v0 + (13.0 / 3.0) * (um1 - u0 + 12.0 * v0) ** 2
    b2 = 144.0 * v0 * v0 + (13.0 / 3.0) * (u0 - up1 + 12.0 * v0) ** 2
    return np.stack([b0, b1, b2], axis=-1)


def nonlinear_weights(betas, params: WenoParams):
    """Scale-invariant weights from the smoothness indicators.

    tau is the mean absolute deviation of beta_1..beta_n from beta_0; the raw
    weights gamma_n (1 + tau^2/(beta_n^2 + eps)) are normalized to sum to 1.
    """
    betas = np.asarray(betas, dtype=np.float64)
    g = np.asarray(params.gamma_lin, dtype=np.float64)
    tau = np.mean(np.abs(betas[..., :1] - betas[..., 1:]), axis=-1)
    raw = g * (1.0 + tau[..., None] ** 2 / (betas * betas + params.epsilon))
    return raw / np.sum(raw, axis=-1, keepdims=True)


def weno_weights(u, v, params: WenoParams):
    """WenoWeights record for one stencil (diagnostic / test surface)."""
    omega = nonlinear_weights(smoothness_indicators(_pack(u, v)), params)
    return WenoWeights(params.gamma_lin, params.epsilon, omega)


def mh_eval(u, v, eta, params: WenoParams | None = None):
    """Nonlinear (shock-capturing) counterpart of ml_eval.

    Combines the quintic with the two quadratics so that smooth data
    reproduces the quintic exactly when all indicators coincide.
    """
    return mh_eval_points(_pack(u, v), eta, params or WenoParams())


def mh_eval_points(s, etas, params: WenoParams | None = None):
    """mh evaluation at one or several offsets, sharing the weights.

    Returns shape (..., len(etas)) for array etas, (...,) for scalar eta.
    """
    params = params or WenoParams()
    s = np.asarray(s, dtype=np.float64)
    scalar = np.isscalar(etas) or np.asarray(etas).ndim == 0
    etas = np.atleast_1d(np.asarray(etas, dtype=np.float64))
    omega = nonlinear_weights(smoothness_indicators(s), params)
    g0, g1, g2 = params.gamma_lin
    vals = []
    c0 = s @ QUINTIC_MAP.T
    c1 = s @ QUAD_LEFT_MAP.T
    c2 = s @ QUAD_RIGHT_MAP.T
    for eta in etas:
        q0 = _poly_eval(c0, eta)
        q1 = _poly_eval(c1, eta)
        q2 = _poly_eval(c2, eta)
        vals.append(omega[..., 0] * (q0 / g0 - (g1 * q1 + g2 * q2) / g0)
                    + omega[..., 1] * q1 + omega[..., 2] * q2)
    out = np.stack(vals, axis=-1)
    return out[..., 0] if scalar else out


# --- first-moment rebuild tables (troubled-cell limiter) ---------------------
#
# Candidates: the quintic (first moment v_i by construction) and two one-sided
# quadratics that avoid v_i, pinned instead by the neighbor first moment:
#   q1: averages of cells i-1, i and the first moment of cell i-1,
#   q2: averages of cells i, i+1 and the first moment of cell i+1.
# FM_* give each candidate's first moment over cell i; BETA_*_A1/A2 give the
# quadratics' eta and eta^2 coefficients for the indicator a1^2 + 13/3 a2^2.

FM_QUINTIC = np.array([0.0, 0.0, 0.0, 0.0, 1.0, 0.0])
FM_ONESIDED_LEFT = np.array([-1 / 6, 1 / 6, 0.0, -1.0, 0.0, 0.0])
FM_ONESIDED_RIGHT = np.array([0.0, -1 / 6, 1 / 6, 0.0, 0.0, -1.0])
_Q1_A1 = np.array([-2.0, 2.0, 0.0, -12.0, 0.0, 0.0])
_Q1_A2 = np.array([-1.0, 1.0, 0.0, -12.0, 0.0, 0.0])
_Q2_A1 = np.array([0.0, -2.0, 2.0, 0.0, 0.0, -12.0])
_Q2_A2 = np.array([0.0, 1.0, -1.0, 0.0, 0.0, 12.0])


def onesided_indicators(s):
    """(beta_0, beta_q1, beta_q2) for the moment-limiter candidate set."""
    s = np.asarray(s, dtype=np.float64)
    combos = s @ _B0_ROWS.T
    b0 = np.sum(_B0_WEIGHTS * combos * combos, axis=-1)
    b1 = (s @ _Q1_A1) ** 2 + (13.0 / 3.0) * (s @ _Q1_A2) ** 2
    b2 = (s @ _Q2_A1) ** 2 + (13.0 / 3.0) * (s @ _Q2_A2) ** 2
    return np.stack([b0, b1, b2], axis=-1)


def limited_first_moment(s, dx, params: WenoParams | None = None):
    """Rebuilt first moment for a troubled cell.

    Nonlinear combination of the candidates' first moments over cell i with
    the modified weights gamma_n (1 + tau^2 dx / (beta_n^2 + eps)).
    """
    params = params or WenoParams()
    s = np.asarray(s, dtype=np.float64)
    betas = onesided_indicators(s)
    g = np.asarray(params.gamma_lin, dtype=np.float64)
    tau = np.mean(np.abs(betas[..., :1] - betas[..., 1:]), axis=-1)
    raw = g * (1.0 + dx * tau[..., None] ** 2 / (betas * betas + params.epsilon))
    omega = raw / np.sum(raw, axis=-1, keepdims=True)
    f0 = s @ FM_QUINTIC
    f1 = s @ FM_ONESIDED_LEFT
    f2 = s @ FM_ONESIDED_RIGHT
    g0, g1, g2 = params.gamma_lin
    return (omega[..., 0] * (f0 / g0 - (g1 * f1 + g2 * f2) / g0)
            + omega[..., 1] * f1 + omega[..., 2] * f2)
