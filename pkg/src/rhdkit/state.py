"""States, ideal-gas EOS, fluxes, wave speeds, and characteristic systems.

Conserved vectors are packed as [D, m_1, ..., m_d, E] on the last axis; all
kernels broadcast over leading axes so a "state" may be a single vector or a
whole field. The velocity is normalized so the speed of light is 1.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EigensystemError, InadmissibleStateError


@dataclass(frozen=True)
class EosParams:
    """Ideal (Gamma-law) equation of state, e = p / ((gamma-1) rho)."""

    gamma: float

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=np.float64)
        if not np.all((g > 1.0) & (g <= 2.0)):
            raise DomainError("adiabatic index must satisfy 1 < gamma <= 2")

    def enthalpy(self, rho, p):
        g = self.gamma
        return 1.0 + g / (g - 1.0) * p / rho

    def internal_energy(self, rho, p):
        return p / ((self.gamma - 1.0) * rho)

    def sound_speed_sq(self, rho, p):
        return self.gamma * p / (rho * self.enthalpy(rho, p))


@dataclass
class PrimitiveState:
    """rho, velocity vector v (last axis, d in {1,2}) and pressure p."""

    rho: np.ndarray
    v: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=np.float64)
        self.v = np.atleast_1d(np.asarray(self.v, dtype=np.float64))
        self.p = np.asarray(self.p, dtype=np.float64)

    @property
    def dim(self):
        return self.v.shape[-1]

    def speed_sq(self):
        return np.sum(self.v * self.v, axis=-1)

    def lorentz(self):
        return 1.0 / np.sqrt(1.0 - self.speed_sq())

    def is_physical(self):
        return (self.rho > 0) & (self.p > 0) & (self.speed_sq() < 1.0)


@dataclass
class ConservedState:
    """Mass density D, momentum m (last axis) and total energy E.

    No invariants are enforced: arbitrary vectors must be representable so
    that admissibility can be *tested*.
    """

    D: np.ndarray
    m: np.ndarray
    E: np.ndarray

    def __post_init__(self):
        self.D = np.asarray(self.D, dtype=np.float64)
        self.m = np.atleast_1d(np.asarray(self.m, dtype=np.float64))
        self.E = np.asarray(self.E, dtype=np.float64)

    @property
    def dim(self):
        return self.m.shape[-1]

    def packed(self):
        return np.concatenate(
            [self.D[..., None], self.m, self.E[..., None]], axis=-1)

    @classmethod
    def from_packed(cls, u):
        u = np.asarray(u, dtype=np.float64)
        return cls(u[..., 0], u[..., 1:-1], u[..., -1])


@dataclass
class AdmissibilityReport:
    """Diagnostics for membership in the admissible set."""

    d_value: np.ndarray
    q_value: np.ndarray
    admissible: np.ndarray


def momentum_norm_sq(u):
    """|m|^2 of a packed conserved array."""
    return np.sum(u[..., 1:-1] ** 2, axis=-1)


def g_value(u):
    """g(U) = E - sqrt(D^2 + |m|^2); positive together with D>0 iff U is admissible."""
    u = np.asarray(u, dtype=np.float64)
    return u[..., -1] - np.sqrt(u[..., 0] ** 2 + momentum_norm_sq(u))


def admissibility(u):
    """Evaluate both admissibility diagnostics; never raises."""
    if isinstance(u, ConservedState):
        u = u.packed()
    u = np.asarray(u, dtype=np.float64)
    d = u[..., 0]
    q = g_value(u)
    return AdmissibilityReport(d, q, (d > 0) & (q > 0))


def prim_to_cons(q: PrimitiveState, eos: EosParams) -> ConservedState:
    """Map primitives to conserved variables D = rho W, m = D h W v, E = D h W - p."""
    if not np.all(q.is_physical()):
        raise DomainError("primitive state is not physical (rho>0, p>0, |v|<1)")
    W = q.lorentz()
    h = eos.enthalpy(q.rho, q.p)
    D = q.rho * W
    m = (D * h * W)[..., None] * q.v
    E = D * h * W - q.p
    return ConservedState(D, m, E)


def prim_to_cons_packed(rho, v, p, gamma):
    """Array version of prim_to_cons; v has the component axis last."""
    rho = np.asarray(rho, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    v2 = np.sum(v * v, axis=-1)
    if np.any(v2 >= 1.0):
        raise DomainError("|v| >= 1 in prim_to_cons")
    W = 1.0 / np.sqrt(1.0 - v2)
    h = 1.0 + gamma / (gamma - 1.0) * p / rho
    D = rho * W
    DhW = D * h * W
    return np.concatenate(
        [D[..., None], DhW[..., None] * v, (DhW - p)[..., None]], axis=-1)


def flux_packed(u, v, p, axis):
    """Physical flux along `axis` (0-based) from packed U and its primitives."""
    u = np.asarray(u, dtype=np.float64)
    d = u.shape[-1] - 2
    va = v[..., axis]
    f = np.empty_like(u)
    f[..., 0] = u[..., 0] * va
    for i in range(d):
        f[..., 1 + i] = u[..., 1 + i] * va
    f[..., 1 + axis] += p
    f[..., -1] = u[..., 1 + axis]
    return f


def flux(u: ConservedState, q: PrimitiveState, axis: int):
    """Flux vector for a conserved state whose recovered primitive is q."""
    return ConservedState.from_packed(
        flux_packed(u.packed(), q.v, q.p, axis))


def signal_speeds(v, cs2, axis):
    """Characteristic speeds (lambda-, v_a, lambda+) along `axis`.

    lambda_pm = [v_a (1-cs^2) +- cs sqrt((1-|v|^2)(1-|v|^2 cs^2 - v_a^2(1-cs^2)))]
                / (1 - |v|^2 cs^2)
    """
    v = np.asarray(v, dtype=np.float64)
    v2 = np.sum(v * v, axis=-1)
    va = v[..., axis]
    cs = np.sqrt(cs2)
    disc = (1.0 - v2) * (1.0 - v2 * cs2 - va * va * (1.0 - cs2))
    root = cs * np.sqrt(np.maximum(disc, 0.0))
    denom = 1.0 - v2 * cs2
    lam_m = (va * (1.0 - cs2) - root) / denom
    lam_p = (va * (1.0 - cs2) + root) / denom
    return lam_m, va, lam_p


def max_signal_speed(q: PrimitiveState, eos: EosParams, axis: int = 0):
    """Spectral radius of the flux Jacobian along `axis`; always < 1."""
    cs2 = eos.sound_speed_sq(q.rho, q.p)
    if np.any(cs2 <= 0.0) or np.any(cs2 >= 1.0):
        raise DomainError("sound speed squared must lie in (0,1)")
    lam_m, va, lam_p = signal_speeds(q.v, cs2, axis)
    return np.maximum(np.maximum(np.abs(lam_m), np.abs(lam_p)), np.abs(va))


def max_signal_speed_packed(rho, v, p, gamma, axis):
    """Spectral radius from bare primitive arrays (solver hot path)."""
    h = 1.0 + gamma / (gamma - 1.0) * p / rho
    cs2 = gamma * p / (rho * h)
    lam_m, va, lam_p = signal_speeds(v, cs2, axis)
    return np.maximum(np.maximum(np.abs(lam_m), np.abs(lam_p)), np.abs(va))


# --- flux Jacobian and characteristic decomposition -------------------------

def _dU_dQ(rho, v, p, gamma):
    """Jacobian of U(Q) with Q = (rho, v_1..v_d, p); batched on leading axes."""
    d = v.shape[-1]
    v2 = np.sum(v * v, axis=-1)
    W2 = 1.0 / (1.0 - v2)
    W = np.sqrt(W2)
    gp = gamma / (gamma - 1.0)
    H = (rho + gp * p) * W2
    n = d + 2
    J = np.zeros(v.shape[:-1] + (n, n))
    J[..., 0, 0] = W
    for j in range(d):
        J[..., 0, 1 + j] = rho * W * W2 * v[..., j]
    for i in range(d):
        J[..., 1 + i, 0] = W2 * v[..., i]
        for j in range(d):
            J[..., 1 + i, 1 + j] = H * ((i == j) + 2.0 * W2 * v[..., i] * v[..., j])
        J[..., 1 + i, n - 1] = gp * W2 * v[..., i]
    J[..., n - 1, 0] = W2
    for j in range(d):
        J[..., n - 1, 1 + j] = 2.0 * H * W2 * v[..., j]
    J[..., n - 1, n - 1] = gp * W2 - 1.0
    return J


def _dF_dQ(rho, v, p, gamma, axis):
    d = v.shape[-1]
    v2 = np.sum(v * v, axis=-1)
    W2 = 1.0 / (1.0 - v2)
    W = np.sqrt(W2)
    gp = gamma / (gamma - 1.0)
    H = (rho + gp * p) * W2
    va = v[..., axis]
    n = d + 2
    J = np.zeros(v.shape[:-1] + (n, n))
    J[..., 0, 0] = W * va
    for j in range(d):
        J[..., 0, 1 + j] = rho * W * W2 * v[..., j] * va
    J[..., 0, 1 + axis] += rho * W
    for i in range(d):
        J[..., 1 + i, 0] = W2 * v[..., i] * va
        for j in range(d):
            J[..., 1 + i, 1 + j] = H * ((i == j) * va + (axis == j) * v[..., i]
                                        + 2.0 * W2 * v[..., i] * v[..., j] * va)
        J[..., 1 + i, n - 1] = gp * W2 * v[..., i] * va + (i == axis)
    J[..., n - 1, 0] = W2 * va
    for j in range(d):
        J[..., n - 1, 1 + j] = H * ((axis == j) + 2.0 * W2 * va * v[..., j])
    J[..., n - 1, n - 1] = gp * W2 * va
    return J


def flux_jacobian(rho, v, p, gamma, axis):
    """dF_axis/dU evaluated at the primitive state, via the chain rule."""
    a = _dF_dQ(rho, v, p, gamma, axis)
    b = _dU_dQ(rho, v, p, gamma)
    # J = a @ b^{-1}  <=>  J b = a  <=>  b^T J^T = a^T
    swap = (-1, -2)
    return np.linalg.solve(np.swapaxes(b, *swap), np.swapaxes(a, *swap)).swapaxes(*swap)


@dataclass
class EigenSystem:
    """Right/left eigenvector matrices of the flux Jacobian at an interface.

    `right` has eigenvectors as columns, `left` is its inverse (rows are left
    eigenvectors), and `fallback` marks states where the decomposition was
    numerically defective and the identity was substituted.
    """

    right: np.ndarray
    left: np.ndarray
    eigenvalues: np.ndarray
    rescale_mode: str
    fallback: np.ndarray


def _rescale_pairs(R, L, mode):
    if mode == "none":
        return R, L
    ln = np.linalg.norm(L, axis=-1)                 # |l_k| per row
    if mode == "unit":
        c = ln
    elif mode == "match":
        rn = np.linalg.norm(R, axis=-2)             # |r_k| per column
        c = np.sqrt(ln / rn)
    else:
        raise ValueError(f"unknown rescale mode '{mode}'")
    R = R * c[..., None, :]
    L = L / c[..., :, None]
    return R, L


def eigensystem_at(rho, v, p, gamma, axis, mode="match", cond_limit=1e12):
    """Characteristic decomposition at given (batched) primitive states.

    Returns an EigenSystem with eigenvalues sorted ascending and eigenvectors
    sign-fixed for determinism. Defective or non-real decompositions fall back
    to the identity (flagged), so reconstruction degrades to componentwise.
    """
    rho = np.asarray(rho, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    J = flux_jacobian(rho, v, p, gamma, axis)
    n = J.shape[-1]
    lam, R = np.linalg.eig(J)
    bad = np.any(np.abs(lam.imag) > 1e-9 * (1.0 + np.abs(lam.real)), axis=-1)
    lam = lam.real
    R = R.real
    order = np.argsort(lam, axis=-1)
    lam = np.take_along_axis(lam, order, axis=-1)
    R = np.take_along_axis(R, order[..., None, :], axis=-1)
    # deterministic sign: largest-magnitude component of each column positive
    pick = np.argmax(np.abs(R), axis=-2)
    sign = np.sign(np.take_along_axis(R, pick[..., None, :], axis=-2))
    sign[sign == 0.0] = 1.0
    R = R * sign
    bad |= np.linalg.cond(R) > cond_limit
    eye = np.broadcast_to(np.eye(n), R.shape)
    R = np.where(bad[..., None, None], eye, R)
    L = np.linalg.inv(R)
    R, L = _rescale_pairs(R, L, mode)
    return EigenSystem(R, L, lam, mode, bad)


def eigensystem(uL, uR, eos: EosParams, axis: int = 0, mode: str = "match",
                cond_limit: float = 1e12):
    """Eigsystem of the flux Jacobian at the arithmetic average of the
    recovered primitives of uL and uR."""
    from .recovery import recover_primitives_packed

    packed = (uL.packed() if isinstance(uL, ConservedState) else np.asarray(uL),
              uR.packed() if isinstance(uR, ConservedState) else np.asarray(uR))
    rep = admissibility(packed[0])
    rep2 = admissibility(packed[1])
    if not (np.all(rep.admissible) and np.all(rep2.admissible)):
        raise InadmissibleStateError("eigensystem requires admissible input states")
    rhoL, vL, pL = recover_primitives_packed(packed[0], eos.gamma)
    rhoR, vR, pR = recover_primitives_packed(packed[1], eos.gamma)
    rho = 0.5 * (rhoL + rhoR)
    vv = 0.5 * (vL + vR)
    p = 0.5 * (pL + pR)
    if np.any(rho <= 0) or np.any(p <= 0) or np.any(np.sum(vv * vv, -1) >= 1):
        raise EigensystemError("average interface state is not physical")
    return eigensystem_at(rho, vv, p, eos.gamma, axis, mode, cond_limit)
