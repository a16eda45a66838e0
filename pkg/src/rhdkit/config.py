"""Runtime configuration: every knob the scheme leaves open, with defaults.

Configuration can be assembled programmatically or loaded from a flat INI file
with sections [scheme], [recovery], [scenario], [output]; see the README for
the full key list.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace

from .errors import ConfigError

RESCALE_MODES = ("none", "unit", "match")
RECOVERY_METHODS = ("nr1", "nr2", "hybrid", "analytical", "bisection")


@dataclass(frozen=True)
class RecoveryConfig:
    """Tolerances and switching thresholds for pressure recovery."""

    eps_target: float = 1e-14
    max_iter: int = 100
    eps1: float = 0.01      # hybrid: use the polynomial iteration only if gamma >= 1 + eps1
    eps2: float = 1e-4      # hybrid: ... and D^2/(E^2-|m|^2) >= eps2

    def __post_init__(self):
        if not self.eps_target > 0:
            raise ConfigError("eps_target must be positive")
        if not (0 < self.eps1 < 1 and 0 < self.eps2 < 1):
            raise ConfigError("eps1 and eps2 must lie in (0,1)")


@dataclass(frozen=True)
class WenoParams:
    """Linear weights and denominator guard for the nonlinear weights.

    epsilon only guards the exact-zero denominator; anything larger caps the
    smooth-candidate weights on small-scale data and breaks the
    scale-invariance of the weights, which shows up as quintic leakage into
    near-vacuum cells next to strong shocks.
    """

    gamma_lin: tuple = (0.98, 0.01, 0.01)
    epsilon: float = 1e-100

    def __post_init__(self):
        g = self.gamma_lin
        if any(x <= 0 for x in g) or abs(sum(g) - 1.0) > 1e-12:
            raise ConfigError("linear weights must be positive and sum to 1")


@dataclass(frozen=True)
class KxrcfConfig:
    """Troubled-cell indicator settings (indicator variables are D and E)."""

    ck: float = 1.0          # flag threshold
    exponent: float = 1.0    # h-power of the jump normalization
    v_tol: float = 1e-8      # below this speed both faces count as inflow
    dilate: int = 1          # grow the troubled set so stencils that touch a
                             # discontinuity reconstruct nonlinearly too


@dataclass(frozen=True)
class SchemeConfig:
    """All solver knobs: CFL, weights, limiter switches, recovery choice."""

    cfl: float = 0.6
    weno_1d: WenoParams = field(default_factory=WenoParams)
    weno_2d: WenoParams = field(
        default_factory=lambda: WenoParams((0.98, 0.005, 0.005, 0.005, 0.005)))
    kxrcf: KxrcfConfig = field(default_factory=KxrcfConfig)
    rescale: str = "match"          # eigenvector rescaling: none | unit | match
    pcp_limiter: bool = True
    strict_pcp: bool = False        # enforce the proof-backed dt bound
    retry_on_violation: bool = True  # halve dt and redo a step that left G
    max_retries: int = 12
    recovery: str = "hybrid"
    recovery_cfg: RecoveryConfig = field(default_factory=RecoveryConfig)
    dt_exponent: float = 1.0        # dt ~ (length scale)^exponent, >1 for accuracy tests
    eig_cond_limit: float = 1e12    # fall back to identity eigenvectors beyond this

    def __post_init__(self):
        if self.rescale not in RESCALE_MODES:
            raise ConfigError(f"rescale must be one of {RESCALE_MODES}")
        if self.recovery not in RECOVERY_METHODS:
            raise ConfigError(f"recovery must be one of {RECOVERY_METHODS}")
        if not self.cfl > 0:
            raise ConfigError("cfl must be positive")


_SCHEME_KEYS = {
    "cfl": float,
    "rescale": str,
    "pcp_limiter": None,
    "strict_pcp": None,
    "retry_on_violation": None,
    "dt_exponent": float,
    "weno_eps": float,
    "gamma_lin_1d": None,
    "gamma_lin_2d": None,
    "kxrcf_ck": float,
    "kxrcf_exponent": float,
}
_RECOVERY_KEYS = {"method": str, "eps_target": float, "max_iter": int,
                  "eps1": float, "eps2": float}


def _parse_bool(raw, key):
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"key '{key}': expected a boolean, got '{raw}'")


def _parse_weights(raw, key):
    try:
        return tuple(float(tok) for tok in raw.replace(",", " ").split())
    except ValueError as exc:
        raise ConfigError(f"key '{key}': expected numbers, got '{raw}'") from exc


def load_config_file(path):
    """Parse an INI config file into (SchemeConfig, scenario dict, output dict).

    Unknown keys are rejected with the offending section and key named.
    """
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")

    scheme_kwargs = {}
    weno_kwargs_1d = {}
    weno_kwargs_2d = {}
    kxrcf_kwargs = {}
    if parser.has_section("scheme"):
        for key, raw in parser.items("scheme"):
            if key not in _SCHEME_KEYS:
                raise ConfigError(f"[scheme] unknown key '{key}'")
            if key == "weno_eps":
                weno_kwargs_1d["epsilon"] = weno_kwargs_2d["epsilon"] = float(raw)
            elif key == "gamma_lin_1d":
                weno_kwargs_1d["gamma_lin"] = _parse_weights(raw, key)
            elif key == "gamma_lin_2d":
                weno_kwargs_2d["gamma_lin"] = _parse_weights(raw, key)
            elif key == "kxrcf_ck":
                kxrcf_kwargs["ck"] = float(raw)
            elif key == "kxrcf_exponent":
                kxrcf_kwargs["exponent"] = float(raw)
            elif _SCHEME_KEYS[key] is None:
                scheme_kwargs[key] = _parse_bool(raw, key)
            else:
                scheme_kwargs[key] = _SCHEME_KEYS[key](raw)

    rec_kwargs = {}
    if parser.has_section("recovery"):
        for key, raw in parser.items("recovery"):
            if key not in _RECOVERY_KEYS:
                raise ConfigError(f"[recovery] unknown key '{key}'")
            if key == "method":
                scheme_kwargs["recovery"] = raw.strip()
            else:
                rec_kwargs[key] = _RECOVERY_KEYS[key](raw)

    cfg = SchemeConfig(**scheme_kwargs)
    if weno_kwargs_1d:
        cfg = replace(cfg, weno_1d=replace(cfg.weno_1d, **weno_kwargs_1d))
    if weno_kwargs_2d:
        cfg = replace(cfg, weno_2d=replace(cfg.weno_2d, **weno_kwargs_2d))
    if kxrcf_kwargs:
        cfg = replace(cfg, kxrcf=replace(cfg.kxrcf, **kxrcf_kwargs))
    if rec_kwargs:
        cfg = replace(cfg, recovery_cfg=replace(cfg.recovery_cfg, **rec_kwargs))

    scenario = dict(parser.items("scenario")) if parser.has_section("scenario") else {}
    output = dict(parser.items("output")) if parser.has_section("output") else {}
    return cfg, scenario, output
