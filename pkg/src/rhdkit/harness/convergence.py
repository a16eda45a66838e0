"""Mesh-refinement studies against the transported exact profiles."""
from __future__ import annotations

from dataclasses import dataclass, replace as dc_replace
from dataclasses import replace

import numpy as np

from ..config import SchemeConfig
from ..recovery import recover_primitives_packed
from ..solver1d import NG, run_1d
from ..solver2d import run_2d
from .scenarios import ScenarioPreset, build_field


@dataclass
class ConvergenceReport:
    meshes: list
    errors: dict        # norm -> list of errors per mesh
    orders: dict        # norm -> list of pairwise orders

    def order_floor(self, norm="L1"):
        return min(self.orders[norm]) if self.orders[norm] else np.nan


def _density_errors(preset, mesh, cfg, tfinal):
    field = build_field(preset, mesh)
    if preset.dim == 1:
        res = run_1d(field, tfinal, cfg)
        num = res.field.U[NG:-NG]
        ref = build_field(preset, mesh, t=tfinal).U[NG:-NG]
    else:
        res = run_2d(field, tfinal, cfg)
        num = res.field.U[NG:-NG, NG:-NG]
        ref = build_field(preset, mesh, t=tfinal).U[NG:-NG, NG:-NG]
    rho_num, _, _ = recover_primitives_packed(num, preset.gamma)
    rho_ref, _, _ = recover_primitives_packed(ref, preset.gamma)
    e = np.abs(rho_num - rho_ref)
    return {"L1": float(e.mean()), "L2": float(np.sqrt((e ** 2).mean())),
            "Linf": float(e.max())}


def scheme_config_for(preset: ScenarioPreset, cfg: SchemeConfig | None = None):
    """Apply the preset's accuracy-mode overrides (CFL, dt scaling)."""
    cfg = cfg or SchemeConfig()
    kw = {}
    if preset.cfl is not None:
        kw["cfl"] = preset.cfl
    if preset.dt_exponent is not None:
        kw["dt_exponent"] = preset.dt_exponent
    return replace(cfg, **kw) if kw else cfg


def convergence_study(preset: ScenarioPreset, meshes,
                      cfg: SchemeConfig | None = None, tfinal=None):
    """Refinement sweep; orders are log(e_k/e_{k+1}) / log(N_{k+1}/N_k)."""
    if not preset.transported:
        raise ValueError("convergence_study needs a smooth transported preset")
    cfg = scheme_config_for(preset, cfg)
    tfinal = preset.tfinal if tfinal is None else tfinal
    errors = {"L1": [], "L2": [], "Linf": []}
    for mesh in meshes:
        mesh_t = (mesh,) * preset.dim if np.isscalar(mesh) else tuple(mesh)
        errs = _density_errors(preset, mesh_t, cfg, tfinal)
        for k, v in errs.items():
            errors[k].append(v)
    ns = [m if np.isscalar(m) else m[0] for m in meshes]
    orders = {k: [float(np.log(v[i - 1] / v[i]) / np.log(ns[i] / ns[i - 1]))
                  for i in range(1, len(v))]
              for k, v in errors.items()}
    return ConvergenceReport(list(meshes), errors, orders)
