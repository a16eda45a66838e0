"""CSV emission of fields and benchmark statistics, with metadata sidecars."""
from __future__ import annotations

import csv
import hashlib
import json

import numpy as np

from ..recovery import recover_primitives_packed
from ..solver1d import NG

_FMT = "%.17g"


def _config_hash(cfg):
    return hashlib.sha256(repr(cfg).encode()).hexdigest()[:16]


def emit_field(result, path, cfg=None, scenario=None, time=None):
    """Write one row per cell: coordinates, conserved and recovered primitive
    values, and the cumulative limiter/troubled activation counts."""
    field = result.field
    grid = field.grid
    dim = 1 if not hasattr(grid, "ny") else 2
    if dim == 1:
        U = field.U[NG:-NG]
        coords = [("x", grid.centers())]
        cons_cols = ["D", "m1", "E"]
    else:
        U = field.U[NG:-NG, NG:-NG]
        xc, yc = grid.centers()
        X, Y = np.meshgrid(xc, yc, indexing="ij")
        coords = [("x", X.ravel()), ("y", Y.ravel())]
        cons_cols = ["D", "m1", "m2", "E"]
    rho, v, p = recover_primitives_packed(U.reshape(-1, U.shape[-1]),
                                          field.gamma)
    limited = result.limited_map.ravel() if result.limited_map is not None \
        else np.zeros(rho.shape, dtype=np.int64)
    troubled = result.troubled_map.ravel() if result.troubled_map is not None \
        else np.zeros(rho.shape, dtype=np.int64)

    header = ([c for c, _ in coords] + cons_cols + ["rho"]
              + [f"v{i + 1}" for i in range(dim)] + ["p", "limited",
                                                     "troubled"])
    flat_U = U.reshape(-1, U.shape[-1])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(flat_U.shape[0]):
            row = [_FMT % c[1][i] for c in coords]
            row += [_FMT % x for x in flat_U[i]]
            row += [_FMT % rho[i]]
            row += [_FMT % v[i, d] for d in range(dim)]
            row += [_FMT % p[i], str(int(limited[i])), str(int(troubled[i]))]
            writer.writerow(row)

    meta = {
        "gamma": field.gamma,
        "time": time if time is not None else result.time,
        "mesh": {"nx": grid.n if dim == 1 else grid.nx,
                 "ny": None if dim == 1 else grid.ny},
        "domain": ([grid.x_lo, grid.x_hi] if dim == 1 else
                   [[grid.x_lo, grid.x_hi], [grid.y_lo, grid.y_hi]]),
        "config_hash": _config_hash(cfg) if cfg is not None else None,
        "scenario": scenario,
        "steps": len(result.reports),
    }
    with open(str(path) + ".meta.json", "w") as fh:
        json.dump(meta, fh, indent=1)
    return path


def read_field(path):
    """Read an emitted CSV back into a dict of named columns."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(x) for x in row] for row in reader]
    data = np.array(rows)
    return {name: data[:, k] for k, name in enumerate(header)}


def emit_stats(stats, path):
    """Benchmark statistics CSV: one row per method."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "max_err", "mean_err", "mean_iters",
                         "neg_count", "wall_ms"])
        for s in stats:
            writer.writerow([s.method, _FMT % s.max_err, _FMT % s.mean_err,
                             _FMT % s.mean_iters, s.neg_count,
                             _FMT % s.wall_ms])
    return path
