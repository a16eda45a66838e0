"""Simulation presets: initial data, boundaries, and defaults for each test.

Every preset provides the primitive state as a closed form so that initial
moments (and, for the smooth transport problems, reference solutions at any
time) are generated by the same Gauss quadratures the scheme itself uses.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError
from ..reconstruct1d import GL_NODES, GL_WEIGHTS
from ..reconstruct2d import GAUSS3_NODES, GAUSS3_WEIGHTS
from ..solver1d import Field1D, Grid1D, NG
from ..solver2d import Field2D, Grid2D
from ..state import prim_to_cons_packed


@dataclass
class ScenarioPreset:
    """A closed-form initial state plus everything needed to run it."""

    name: str
    dim: int
    domain: tuple                 # (x_lo, x_hi) or ((x_lo,x_hi),(y_lo,y_hi))
    gamma: float
    tfinal: float
    default_mesh: tuple
    bc: tuple
    state: callable               # state(x[, y], t=0) -> (rho, v, p)
    cylindrical: bool = False
    transported: bool = False     # exact solution is the advected profile
    cfl: float | None = None      # per-preset overrides for accuracy runs
    dt_exponent: float | None = None
    notes: str = ""


def _smooth1d_state(x, t=0.0):
    rho = 1.0 + 0.99999 * np.sin(x - 0.9999 * t)
    v = np.broadcast_to(np.array([0.9999]), x.shape + (1,))
    p = np.full_like(x, 1e-4)
    return rho, v, p


def _riemann1d_state(x, t=0.0):
    left = x <= 0.5
    rho = np.where(left, 10.0, 1.0)
    p = np.where(left, 40.0 / 3.0, 1e-6)
    v = np.zeros(x.shape + (1,))
    return rho, v, p


def _shockheating_state(x, t=0.0):
    rho = np.ones_like(x)
    v = np.broadcast_to(np.array([1.0 - 1e-10]), x.shape + (1,))
    p = np.full_like(x, 1e-4 / 3.0)
    return rho, v, p


_ALPHA_2D = np.pi / 6.0


def _smooth2d_state(x, y, t=0.0):
    vx = 0.9 / np.sqrt(2.0)
    vy = 0.9 / np.sqrt(2.0)
    phase = 2.0 * np.pi * ((x - vx * t) * np.cos(_ALPHA_2D)
                           + (y - vy * t) * np.sin(_ALPHA_2D))
    rho = 1.0 + 0.999 * np.sin(phase)
    v = np.broadcast_to(np.array([vx, vy]), x.shape + (2,))
    p = np.full_like(x, 1e-2)
    return rho, v, p


def _riemann2d_state(quadrants):
    """quadrants: states for (x>0,y>0), (x<0,y>0), (x<0,y<0), (x>0,y<0)."""
    q_pp, q_mp, q_mm, q_pm = [np.asarray(q, dtype=np.float64)
                              for q in quadrants]

    def state(x, y, t=0.0):
        sel = np.where(x > 0, np.where(y > 0, 0, 3), np.where(y > 0, 1, 2))
        table = np.stack([q_pp, q_mp, q_mm, q_pm])
        q = table[sel]
        return q[..., 0], q[..., 1:3], q[..., 3]

    return state


def _shockvortex_state(strength):
    g = 1.4
    w = 0.9
    Ww = 1.0 / np.sqrt(1.0 - w * w)
    alpha = (g - 1.0) / g / (8.0 * np.pi ** 2) * strength ** 2
    post = np.array([4.891497310766981, -0.388882958251919, 0.0,
                     11.894863258311670])

    def state(x, y, t=0.0):
        x0 = x * Ww
        y0 = y
        r2 = x0 * x0 + y0 * y0
        e = np.exp(1.0 - r2)
        rho_v = np.maximum(1.0 - alpha * e, 1e-300) ** (1.0 / (g - 1.0))
        p_v = rho_v ** g
        beta = 2.0 * g * alpha * e / (2.0 * g - 1.0 - g * alpha * e)
        f = np.sqrt(beta / (1.0 + beta * r2))
        v1_0 = -y0 * f
        v2_0 = x0 * f
        den = 1.0 - v1_0 * w
        v1 = (v1_0 - w) / den
        v2 = v2_0 / (Ww * den)
        shocked = x < -6.0
        rho = np.where(shocked, post[0], rho_v)
        p = np.where(shocked, post[3], p_v)
        v = np.stack([np.where(shocked, post[1], v1),
                      np.where(shocked, post[2], v2)], axis=-1)
        return rho, v, p

    return state


def _jet_state(x, y, t=0.0):
    rho = np.ones_like(x)
    v = np.zeros(x.shape + (2,))
    p = np.full_like(x, 1.70303e-4)
    return rho, v, p


_JET_BEAM = dict(rho=0.01, vz=0.99, p=1.70303e-4, radius=1.0)


def _jet_inlet(gamma, grid):
    """Low-z ghost fill: beam inflow through r <= 1, outflow elsewhere."""
    beam = prim_to_cons_packed(
        np.array(_JET_BEAM["rho"]), np.array([0.0, _JET_BEAM["vz"]]),
        np.array(_JET_BEAM["p"]), gamma)
    r = grid.x_lo + (np.arange(grid.nx + 2 * NG) - NG + 0.5) * grid.dx
    inlet = r <= _JET_BEAM["radius"]

    def fill(U, V, W, side):
        for A in (U, V, W):
            A[:, :NG] = A[:, NG][:, None]     # outflow default
        U[inlet, :NG] = beam
        V[inlet, :NG] = 0.0
        W[inlet, :NG] = 0.0

    return fill


def _presets():
    out = {}
    out["smooth1d"] = ScenarioPreset(
        "smooth1d", 1, (0.0, 2.0 * np.pi), 5.0 / 3.0, 2.0 * np.pi, (120,),
        ("periodic", "periodic"), _smooth1d_state, transported=True,
        cfl=0.4, dt_exponent=2.0,
        notes="ultra-relativistic smooth transport; order test")
    out["riemann1d"] = ScenarioPreset(
        "riemann1d", 1, (0.0, 1.0), 5.0 / 3.0, 0.4, (320,),
        ("outflow", "outflow"), _riemann1d_state,
        notes="blast wave: left shock, contact, right shock")
    heat_state = _shockheating_state
    out["shockheating"] = ScenarioPreset(
        "shockheating", 1, (0.0, 1.0), 4.0 / 3.0, 2.0, (256,),
        (("inflow", None), "reflect"), heat_state,
        notes="gas hitting a wall at v=1-1e-10; inflow state set at build")
    out["smooth2d"] = ScenarioPreset(
        "smooth2d", 2, ((0.0, 2.0 / np.sqrt(3.0)), (0.0, 2.0)), 5.0 / 3.0,
        0.05, (60, 60), ("periodic",) * 4, _smooth2d_state, transported=True,
        cfl=0.4, dt_exponent=5.0 / 3.0,
        notes="oblique smooth wave; 2D order test")
    out["riemann2d_1"] = ScenarioPreset(
        "riemann2d_1", 2, ((-0.5, 0.5), (-0.5, 0.5)), 5.0 / 3.0, 0.4,
        (400, 400), ("outflow",) * 4,
        _riemann2d_state([(0.1, 0, 0, 0.01), (0.1, 0.99, 0, 1),
                          (0.5, 0, 0, 1), (0.1, 0, 0.99, 1)]),
        notes="2D Riemann problem I")
    out["riemann2d_2"] = ScenarioPreset(
        "riemann2d_2", 2, ((-0.5, 0.5), (-0.5, 0.5)), 5.0 / 3.0, 0.4,
        (400, 400), ("outflow",) * 4,
        _riemann2d_state([(0.1, 0, 0, 20.0),
                          (0.00414329639576, 0.9946418833556542, 0, 0.05),
                          (0.01, 0, 0, 0.05),
                          (0.00414329639576, 0, 0.9946418833556542, 0.05)]),
        notes="ultra-relativistic 2D Riemann problem II")
    out["shockvortex_mild"] = ScenarioPreset(
        "shockvortex_mild", 2, ((-17.0, 3.0), (-5.0, 5.0)), 1.4, 19.0,
        (800, 400), (("outflow"), ("inflow", None), "reflect", "reflect"),
        _shockvortex_state(5.0),
        notes="vortex strength 5; inflow state set at build")
    out["shockvortex_strong"] = ScenarioPreset(
        "shockvortex_strong", 2, ((-17.0, 3.0), (-5.0, 5.0)), 1.4, 19.0,
        (800, 400), (("outflow"), ("inflow", None), "reflect", "reflect"),
        _shockvortex_state(10.0828),
        notes="vortex strength 10.0828 (near-vacuum core)")
    out["jet"] = ScenarioPreset(
        "jet", 2, ((0.0, 15.0), (0.0, 45.0)), 5.0 / 3.0, 60.0, (375, 1125),
        ("reflect", "outflow", ("custom", None), "outflow"), _jet_state,
        cylindrical=True,
        notes="axisymmetric relativistic jet, beam v=0.99 through r<=1")
    return out


SCENARIOS = _presets()


def get_scenario(name) -> ScenarioPreset:
    try:
        return SCENARIOS[name]
    except KeyError:
        raise ConfigError(
            f"unknown scenario '{name}'; available: {sorted(SCENARIOS)}") \
            from None


def _init_moments_1d(field: Field1D, state, t=0.0):
    grid = field.grid
    x = grid.centers()
    pts = x[:, None] + GL_NODES[None, :] * grid.dx
    rho, v, p = state(pts, t)
    U = prim_to_cons_packed(rho, v, p, field.gamma)
    field.U[NG:-NG] = np.einsum("l,cld->cd", GL_WEIGHTS, U)
    field.V[NG:-NG] = np.einsum("l,l,cld->cd", GL_WEIGHTS, GL_NODES, U)


def _init_moments_2d(field: Field2D, state, t=0.0):
    grid = field.grid
    xc, yc = grid.centers()
    bx = GAUSS3_NODES[:, None] * grid.dx
    by = GAUSS3_NODES[None, :] * grid.dy
    X = xc[:, None, None, None] + bx[None, None]
    Y = yc[None, :, None, None] + by[None, None]
    X, Y = np.broadcast_arrays(X, Y)
    rho, v, p = state(X, Y, t)
    U = prim_to_cons_packed(rho, v, p, field.gamma)
    w = GAUSS3_WEIGHTS
    field.U[NG:-NG, NG:-NG] = np.einsum("l,k,xylkd->xyd", w, w, U)
    field.V[NG:-NG, NG:-NG] = np.einsum(
        "l,k,l,xylkd->xyd", w, w, GAUSS3_NODES, U)
    field.W[NG:-NG, NG:-NG] = np.einsum(
        "l,k,k,xylkd->xyd", w, w, GAUSS3_NODES, U)


def build_field(preset: ScenarioPreset, mesh=None, t=0.0):
    """Field with quadrature-initialized moments at time t (t>0 only makes
    sense for the transported smooth presets, as a reference solution)."""
    mesh = tuple(mesh) if mesh is not None else preset.default_mesh
    if preset.dim == 1:
        grid = Grid1D(mesh[0], *preset.domain)
        bc = _resolve_bc_1d(preset, grid)
        field = Field1D.allocate(grid, bc, preset.gamma)
        _init_moments_1d(field, preset.state, t)
    else:
        (x0, x1), (y0, y1) = preset.domain
        nx, ny = mesh if len(mesh) == 2 else (mesh[0], mesh[0])
        grid = Grid2D(nx, ny, x0, x1, y0, y1)
        bc = _resolve_bc_2d(preset, grid)
        field = Field2D.allocate(grid, bc, preset.gamma, preset.cylindrical)
        _init_moments_2d(field, preset.state, t)
    return field


def _fixed_state_packed(preset, x, y=None):
    if preset.dim == 1:
        rho, v, p = preset.state(np.asarray(x))
    else:
        rho, v, p = preset.state(np.asarray(x), np.asarray(y))
    return prim_to_cons_packed(rho, v, p, preset.gamma)


def _resolve_bc_1d(preset, grid):
    bc = []
    for side, kind in enumerate(preset.bc):
        if isinstance(kind, tuple) and kind[0] == "inflow" and kind[1] is None:
            x = np.array(grid.x_lo if side == 0 else grid.x_hi)
            bc.append(("inflow", _fixed_state_packed(preset, x)))
        else:
            bc.append(kind)
    return tuple(bc)


def _resolve_bc_2d(preset, grid):
    bc = []
    xg = grid.x_lo + (np.arange(grid.nx + 2 * NG) - NG + 0.5) * grid.dx
    yg = grid.y_lo + (np.arange(grid.ny + 2 * NG) - NG + 0.5) * grid.dy
    for side, kind in enumerate(preset.bc):
        if isinstance(kind, tuple) and kind[0] == "custom" and kind[1] is None:
            bc.append(("custom", _jet_inlet(preset.gamma, grid)))
        elif isinstance(kind, tuple) and kind[0] == "inflow" and kind[1] is None:
            # fix the inflow profile from the initial state along that edge
            if side < 2:
                x = grid.x_lo if side == 0 else grid.x_hi
                q = _fixed_state_packed(preset, np.full_like(yg, x), yg)
            else:
                y = grid.y_lo if side == 2 else grid.y_hi
                q = _fixed_state_packed(preset, xg, np.full_like(xg, y))
            bc.append(("inflow", q))
        else:
            bc.append(kind)
    return tuple(bc)
