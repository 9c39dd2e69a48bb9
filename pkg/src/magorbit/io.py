"""Writers for trajectories, reports and matrices.

Floats are written with 17 significant digits so that files round-trip
exactly; every file carries the manifest hash of the run that produced it.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .dynamics import Trajectory

FLOAT_FMT = "%.17g"


def _fmt(v) -> str:
    return FLOAT_FMT % v


def trajectory_header(d: int) -> list[str]:
    return (["t"] + [f"x_{k}" for k in range(1, d + 1)] + [f"p_{k}" for k in range(1, d + 1)]
            + ["H", "res_orbit", "res_cotangent"])


def write_trajectory_csv(path, traj: Trajectory, config_hash: str | None = None) -> Path:
    """t, x_1..x_d, p_1..p_d, H, res_orbit, res_cotangent."""
    path = Path(path)
    d = traj.states.shape[1] // 2
    n = len(traj)
    cols = [traj.diagnostics.get(k, np.full(n, np.nan)) for k in ("H", "res_orbit", "res_cotangent")]
    with path.open("w", newline="") as fh:
        if config_hash:
            fh.write(f"# config_hash={config_hash}\n")
        w = csv.writer(fh)
        w.writerow(trajectory_header(d))
        for i in range(n):
            row = [traj.times[i], *traj.states[i], *(c[i] for c in cols)]
            w.writerow([_fmt(v) for v in row])
    return path


def write_semidirect_csv(path, traj: Trajectory, config_hash: str | None = None) -> Path:
    """t, xi_1..xi_d, eta_1..eta_d, h for a trajectory on g_theta."""
    path = Path(path)
    Z = np.asarray(traj.states)
    d = Z.shape[1]
    h = traj.diagnostics.get("h", np.full(len(traj), np.nan))
    with path.open("w", newline="") as fh:
        if config_hash:
            fh.write(f"# config_hash={config_hash}\n")
        w = csv.writer(fh)
        w.writerow(["t"] + [f"xi_{k}" for k in range(1, d + 1)]
                   + [f"eta_{k}" for k in range(1, d + 1)] + ["h"])
        for i in range(len(traj)):
            w.writerow([_fmt(v) for v in (traj.times[i], *Z[i].real, *Z[i].imag, h[i])])
    return path


def read_trajectory_csv(path) -> tuple[list[str], np.ndarray]:
    with Path(path).open() as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    return rows[0], np.array(rows[1:], dtype=float)


def write_rows_csv(path, rows: list[dict], config_hash: str | None = None) -> Path:
    path = Path(path)
    keys = list(rows[0]) if rows else []
    with path.open("w", newline="") as fh:
        if config_hash:
            fh.write(f"# config_hash={config_hash}\n")
        w = csv.DictWriter(fh, fieldnames=keys)
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(v) if isinstance(v, float) else v for k, v in r.items()})
    return path


def write_matrix_csv(path, M, config_hash: str | None = None) -> Path:
    path = Path(path)
    header = f"config_hash={config_hash}" if config_hash else ""
    np.savetxt(path, np.asarray(M, float), fmt=FLOAT_FMT, delimiter=",", header=header)
    return path


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if isinstance(o, Path):
        return str(o)
    if hasattr(o, "to_dict"):
        return o.to_dict()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _clean(o):
    # JSON has no inf/nan; write them as null
    if isinstance(o, float) and not np.isfinite(o):
        return None
    if isinstance(o, dict):
        return {k: _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v) for v in o]
    return o


def to_jsonable(obj):
    return _clean(json.loads(json.dumps(obj, default=_default)))


def write_json(path, obj, config_hash: str | None = None) -> Path:
    path = Path(path)
    doc = to_jsonable(obj)
    if config_hash and isinstance(doc, dict):
        doc = {"config_hash": config_hash, **doc}
    path.write_text(json.dumps(doc, indent=2, sort_keys=False, allow_nan=False) + "\n")
    return path


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())
