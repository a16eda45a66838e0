"""Troubled-cell detection, first-moment limiting, and the PCP limiters.

The PCP limiter blends reconstructed point values toward the (admissible)
cell average until every quadrature value and the convex-decomposition anchor
state lie in the admissible set; it is the identity whenever the candidates
already satisfy D >= eps_D and g >= eps_g.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import KxrcfConfig, WenoParams
from .errors import InadmissibleStateError
from .reconstruct1d import (GL_WEIGHTS, limited_first_moment, ml_eval_matrix)
from .state import g_value

_OMEGA1 = GL_WEIGHTS[0]          # 1/12, the corner Gauss-Lobatto weight


@dataclass
class TroubleMap:
    """Per-cell troubled flags; in 2D the flag is the OR of the axis flags."""

    flags: np.ndarray
    x_flags: np.ndarray | None = None
    y_flags: np.ndarray | None = None


@dataclass
class PcpLimiterRecord:
    """Blend factors and the anchor state produced by the PCP limiter."""

    theta_d: np.ndarray
    theta_g: np.ndarray
    activated: np.ndarray
    anchor: np.ndarray


# --- KXRCF troubled-cell indicator -------------------------------------------

def kxrcf_flag_1d(face_self, face_nbr, inflow_left, inflow_right, norms, dx,
                  cfg: KxrcfConfig | None = None):
    """Jump indicator on the inflow part of each cell boundary.

    face_self[..., 0/1]: this cell's reconstruction at its left/right face for
    each indicator variable (last axis); face_nbr: the neighbors' values at
    the same faces. `norms` is the per-cell magnitude used for normalization.
    """
    cfg = cfg or KxrcfConfig()
    jump_l = np.abs(face_self[..., 0, :] - face_nbr[..., 0, :])
    jump_r = np.abs(face_self[..., 1, :] - face_nbr[..., 1, :])
    num = (np.where(inflow_left[..., None], jump_l, 0.0)
           + np.where(inflow_right[..., None], jump_r, 0.0))
    nfaces = inflow_left.astype(np.float64) + inflow_right.astype(np.float64)
    denom = dx ** cfg.exponent * np.maximum(nfaces, 1.0)[..., None] \
        * np.maximum(np.abs(norms), 1e-300)
    ratio = np.where(nfaces[..., None] > 0, num / denom, 0.0)
    return np.any(ratio > cfg.ck, axis=-1)


# --- first-order moment limiting ---------------------------------------------

def limit_first_moments_1d(stencils, dx, params: WenoParams | None = None):
    """Replacement first moments for troubled cells; stencils (..., 6) per
    scalar channel (see reconstruct1d for the layout)."""
    return limited_first_moment(stencils, dx, params)


# --- PCP limiters --------------------------------------------------------------

def _theta(avg_minus_eps, avg_minus_min):
    # |.| form with the 0/0 -> 1 convention when the average attains the min
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.abs(avg_minus_eps) / np.abs(avg_minus_min)
    ratio = np.where(avg_minus_min == 0.0, 1.0, ratio)
    return np.minimum(ratio, 1.0)


def pcp_limit_1d(points, avg, eps_d, eps_g):
    """Enforce admissibility of the four Gauss-Lobatto values of each cell.

    points: (..., 4, dof) reconstructed values; avg: (..., dof) admissible
    cell averages. Returns (limited points, PcpLimiterRecord). Raises if any
    average is itself inadmissible: the scheme's invariant was already broken
    upstream of the limiter.
    """
    points = np.asarray(points, dtype=np.float64)
    avg = np.asarray(avg, dtype=np.float64)
    g_avg = g_value(avg)
    bad = ~((avg[..., 0] > 0) & (g_avg > 0))
    if np.any(bad):
        idx = np.argwhere(np.atleast_1d(bad))[0]
        raise InadmissibleStateError(
            f"PCP limiter requires admissible cell averages (cell {tuple(idx)})",
            index=tuple(idx))

    d_avg = avg[..., 0]
    # density step: anchor uses the two face values (corner GL weights)
    d_pts = points[..., 0]
    d_anchor = (d_avg - _OMEGA1 * (d_pts[..., 0] + d_pts[..., 3])) / (1 - 2 * _OMEGA1)
    d_min = np.minimum(np.min(d_pts, axis=-1), d_anchor)
    theta_d = _theta(d_avg - eps_d, d_avg - d_min)
    limited = points.copy()
    limited[..., 0] = (theta_d[..., None] * (d_pts - d_avg[..., None])
                       + d_avg[..., None])

    # g step on the density-corrected states, full-vector blend
    g_pts = g_value(limited)
    anchor = (avg[..., None, :]
              - _OMEGA1 * (limited[..., 0:1, :] + limited[..., 3:4, :])) \
        / (1 - 2 * _OMEGA1)
    g_min = np.minimum(np.min(g_pts, axis=-1), g_value(anchor)[..., 0])
    theta_g = _theta(g_avg - eps_g, g_avg - g_min)
    limited = (theta_g[..., None, None] * (limited - avg[..., None, :])
               + avg[..., None, :])

    final_anchor = (avg - _OMEGA1 * (limited[..., 0, :] + limited[..., 3, :])) \
        / (1 - 2 * _OMEGA1)
    # round-off safeguard: the blend guarantees admissibility only in exact
    # arithmetic; where evaluated g still fails, collapse to the cell average
    theta_g = _roundoff_collapse(limited, avg, final_anchor, theta_g)
    activated = (theta_d < 1.0) | (theta_g < 1.0)
    return limited, PcpLimiterRecord(theta_d, theta_g, activated, final_anchor)


def _roundoff_collapse(limited, avg, anchor, theta_g):
    ok = np.all((limited[..., 0] > 0) & (g_value(limited) > 0), axis=-1)
    ok &= (anchor[..., 0] > 0) & (g_value(anchor) > 0)
    if np.all(ok):
        return theta_g
    bad = ~ok
    limited[bad] = avg[bad][..., None, :]
    anchor[bad] = avg[bad]
    return np.where(bad, 0.0, theta_g)


def _anchor_2d(avg, pts, mu1, mu2, face_slices):
    """Convex-decomposition anchor from the 12 face values.

    face_slices gives the index ranges of (x-, x+, y-, y+) face triples in the
    point axis; the Gauss weights enter through the quadrature sum.
    """
    from .reconstruct2d import GAUSS3_WEIGHTS

    xm, xp, ym, yp = face_slices
    wl = GAUSS3_WEIGHTS
    sx = sum(wl[k] * (pts[..., xp.start + k, :] + pts[..., xm.start + k, :])
             for k in range(3))
    sy = sum(wl[k] * (pts[..., yp.start + k, :] + pts[..., ym.start + k, :])
             for k in range(3))
    mu1e = mu1[..., None] if np.ndim(mu1) else mu1
    mu2e = mu2[..., None] if np.ndim(mu2) else mu2
    return (avg - _OMEGA1 * (mu1e * sx + mu2e * sy)) / (1 - 2 * _OMEGA1)


def pcp_limit_2d(points, avg, mu1, mu2, eps_d, eps_g, face_slices):
    """2D PCP limiter over the 9 interior and 12 face values of each cell.

    points: (..., 21, dof); mu1, mu2 are the direction weights
    lambda_i alpha_i / (lambda_1 alpha_1 + lambda_2 alpha_2), mu1 + mu2 = 1.
    """
    points = np.asarray(points, dtype=np.float64)
    avg = np.asarray(avg, dtype=np.float64)
    g_avg = g_value(avg)
    bad = ~((avg[..., 0] > 0) & (g_avg > 0))
    if np.any(bad):
        idx = np.argwhere(np.atleast_1d(bad))[0]
        raise InadmissibleStateError(
            f"PCP limiter requires admissible cell averages (cell {tuple(idx)})",
            index=tuple(idx))

    d_avg = avg[..., 0]
    d_pts = points[..., 0]
    d_anchor = _anchor_2d(avg[..., 0:1], points[..., 0:1], mu1, mu2,
                          face_slices)[..., 0]
    d_min = np.minimum(np.min(d_pts, axis=-1), d_anchor)
    theta_d = _theta(d_avg - eps_d, d_avg - d_min)
    limited = points.copy()
    limited[..., 0] = (theta_d[..., None] * (d_pts - d_avg[..., None])
                       + d_avg[..., None])

    g_pts = g_value(limited)
    anchor = _anchor_2d(avg, limited, mu1, mu2, face_slices)
    g_min = np.minimum(np.min(g_pts, axis=-1), g_value(anchor))
    theta_g = _theta(g_avg - eps_g, g_avg - g_min)
    limited = (theta_g[..., None, None] * (limited - avg[..., None, :])
               + avg[..., None, :])

    final_anchor = _anchor_2d(avg, limited, mu1, mu2, face_slices)
    theta_g = _roundoff_collapse(limited, avg, final_anchor, theta_g)
    activated = (theta_d < 1.0) | (theta_g < 1.0)
    return limited, PcpLimiterRecord(theta_d, theta_g, activated, final_anchor)


def pcp_floors(avgs):
    """Global floor values eps_D, eps_g: min over cells against 1e-13."""
    avgs = np.asarray(avgs, dtype=np.float64)
    eps_d = min(1e-13, float(np.min(avgs[..., 0])))
    eps_g = min(1e-13, float(np.min(g_value(avgs))))
    return eps_d, eps_g


def reconstruct_face_values_1d(stencils):
    """Linear face values (left, right) per cell for the KXRCF jumps;
    stencils (..., 6) per channel."""
    mat = ml_eval_matrix([-0.5, 0.5])
    return np.stack([stencils @ mat[0], stencils @ mat[1]], axis=-1)
