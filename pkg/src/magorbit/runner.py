"""Reproducible experiment runs and manifest comparison."""
from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .dynamics import (DIVERGENCE_LIMIT, MagneticSetup, exact_magnetic_geodesic, fit_circle,
                       simulate_pendulum, simulate_semidirect)
from .errors import ConfigurationError, ShapeError
from .integrals import (drift_report, family_semidirect, lax_pair, lax_spectrum,
                        spectrum_distance, theta_map)
from .io import (write_json, write_matrix_csv, write_rows_csv, write_semidirect_csv,
                 write_trajectory_csv)
from .orbit import KERNEL_TOL, OrbitContext, PhasePoint, cotangent_sample, random_phase_point
from .poisson import (RANK_TOL, completeness_report, condition_A1, condition_A2, orbit_seed_point,
                      pencil_form, rank_profile, tori_dimension)

log = logging.getLogger(__name__)

TOLERANCES = {"kernel_tol": KERNEL_TOL, "rank_tol": RANK_TOL, "divergence_limit": DIVERGENCE_LIMIT,
              "circle_fit_residual": 1e-4}


@dataclass
class RunResult:
    run_dir: Path
    manifest_path: Path
    manifest: dict


# -- setup helpers --------------------------------------------------------------

def _vector(values, d, name):
    v = np.asarray(values, float)
    if v.shape != (d,):
        raise ConfigurationError(f"{name}: expected {d} coordinates, got {v.size}")
    return v


def build_context(cfg: ExperimentConfig):
    alg = cfg.algebra.build()
    a = _vector(cfg.a, alg.dim, "a")
    b = None if cfg.b is None else _vector(cfg.b, alg.dim, "b")
    return alg, OrbitContext.create(alg, a), b


def _with_speed(ctx: OrbitContext, x, p, speed: float, witness=None) -> PhasePoint:
    alg = ctx.algebra
    v = alg.norm(alg.bracket(x, p))
    if v == 0:
        raise ConfigurationError("initial momentum is zero; choose another seed")
    return PhasePoint(x, p * (speed / v), witness)


def initial_point(ctx: OrbitContext, seed: int, speed: float) -> PhasePoint:
    """Random point of T*O(a) rescaled to |[x, p]| = speed."""
    pt = random_phase_point(ctx, seed)
    return _with_speed(ctx, pt.x, pt.p, speed, pt.witness)


def _rel_drift(values) -> float:
    v = np.asarray(values, float)
    return float(np.abs(v - v[0]).max() / max(abs(v[0]), 1e-12))


def _map(fn, items, threads: int):
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, items))
    return [fn(i) for i in items]


def _aggregate(per_seed: list[dict]) -> dict:
    keys = per_seed[0].keys()
    return {k: max(r[k] for r in per_seed) for k in keys}


def _circle_radius(traj):
    fit = fit_circle(traj.states[:, :3])
    if fit.residual > TOLERANCES["circle_fit_residual"]:
        raise ShapeError(f"trajectory is not a circle (fit residual {fit.residual:.2e})")
    return fit.radius


# -- kinds ----------------------------------------------------------------------

def _geodesic(cfg, ctx, b, run_dir, tag, threads):
    alg = ctx.algebra
    setup = MagneticSetup(cfg.epsilon)

    def one(seed):
        pt0 = initial_point(ctx, seed, cfg.speed)
        traj = simulate_pendulum(ctx, pt0, setup, cfg.t_end, cfg.h, cfg.project_every, cfg.record_every)
        exact = exact_magnetic_geodesic(ctx, pt0, cfg.epsilon, float(traj.times[-1]))
        d = alg.dim
        err = np.sqrt(alg.norm(traj.states[-1, :d] - exact.x) ** 2
                      + alg.norm(traj.states[-1, d:] - exact.p) ** 2)
        m = {"terminal_error": float(err), "H_drift_rel": _rel_drift(traj.diagnostics["H"]),
             "max_residual": float(traj.diagnostics["residual"].max())}
        if alg.dim == 3 and alg.name == "so(3)":
            m["radius"] = _circle_radius(traj)
        path = write_trajectory_csv(run_dir / f"trajectory-{tag}-seed{seed}.csv", traj, tag)
        return m, path

    res = _map(one, cfg.seeds, threads)
    return res


def _pendulum(cfg, ctx, b, run_dir, tag, threads):
    alg = ctx.algebra
    setup = MagneticSetup(cfg.epsilon, b, cfg.kappa)
    force = setup.force(alg.dim)
    family = family_semidirect(alg, force, cfg.lambda_grid, cfg.epsilon)

    def one(seed):
        pt0 = initial_point(ctx, seed, cfg.speed)
        traj = simulate_pendulum(ctx, pt0, setup, cfg.t_end, cfg.h, cfg.project_every, cfg.record_every)
        pts = traj.phase_points()
        rows = drift_report(family, pts)
        spectra0 = {lam: lax_spectrum(alg, pts[0], cfg.epsilon, force, lam) for lam in cfg.lax_lambdas}
        lax_drift = max(spectrum_distance(spectra0[lam], lax_spectrum(alg, q, cfg.epsilon, force, lam))
                        for q in pts for lam in cfg.lax_lambdas)
        write_trajectory_csv(run_dir / f"trajectory-{tag}-seed{seed}.csv", traj, tag)
        path = write_rows_csv(run_dir / f"drift-{tag}-seed{seed}.csv", rows, tag)
        write_json(run_dir / f"drift-{tag}-seed{seed}.json", {"members": rows}, tag)
        m = {"H_drift_rel": _rel_drift(traj.diagnostics["H"]),
             "family_max_drift_rel": max(r["max_drift_rel"] for r in rows),
             "lax_spectrum_drift": lax_drift,
             "max_residual": float(traj.diagnostics["residual"].max())}
        return m, path

    return _map(one, cfg.seeds, threads)


def _semidirect(cfg, ctx, b, run_dir, tag, threads):
    alg = ctx.algebra
    force = np.zeros(alg.dim) if b is None else cfg.kappa * b
    family = family_semidirect(alg, force, cfg.lambda_grid, cfg.epsilon)

    def one(seed):
        z0 = theta_map(alg, initial_point(ctx, seed, cfg.speed), cfg.epsilon)
        traj = simulate_semidirect(alg, z0, force, cfg.t_end, cfg.h, cfg.record_every)
        vals = np.array([[m.on_image(z) for m in family.members] for z in traj.states])
        dev = np.abs(vals - vals[0]).max(axis=0) / np.maximum(np.abs(vals[0]), 1e-12)
        path = write_semidirect_csv(run_dir / f"semidirect-{tag}-seed{seed}.csv", traj, tag)
        return {"h_drift_rel": _rel_drift(traj.diagnostics["h"]),
                "family_max_drift_rel": float(dev.max())}, path

    return _map(one, cfg.seeds, threads)


def _lax(cfg, ctx, b, run_dir, tag, threads):
    alg = ctx.algebra
    setup = MagneticSetup(cfg.epsilon, b, cfg.kappa)
    force = setup.force(alg.dim)

    def one(seed):
        pt0 = initial_point(ctx, seed, cfg.speed)
        traj = simulate_pendulum(ctx, pt0, setup, cfg.t_end, cfg.h, cfg.project_every, 1)
        pts = traj.phase_points()
        dt = traj.times[1] - traj.times[0]
        rows, fd = [], 0.0
        for lam in cfg.lax_lambdas:
            w0 = lax_spectrum(alg, pts[0], cfg.epsilon, force, lam)
            drift = max(spectrum_distance(w0, lax_spectrum(alg, q, cfg.epsilon, force, lam)) for q in pts)
            Ls = [lax_pair(alg, q, cfg.epsilon, force).L(lam) for q in pts]
            for k in range(1, len(pts) - 1, max(1, (len(pts) - 2) // 50)):
                lp = lax_pair(alg, pts[k], cfg.epsilon, force)
                L, A = Ls[k], lp.A(lam)
                res = np.abs((Ls[k + 1] - Ls[k - 1]) / (2 * dt) - (L @ A - A @ L)).max()
                fd = max(fd, float(res / max(1.0, np.abs(L).max())))
            rows.append({"lambda": lam, "spectrum_drift": drift,
                         **{f"re_w{i}": float(v.real) for i, v in enumerate(w0)},
                         **{f"im_w{i}": float(v.imag) for i, v in enumerate(w0)}})
        path = write_rows_csv(run_dir / f"lax-{tag}-seed{seed}.csv", rows, tag)
        return {"lax_spectrum_drift": max(r["spectrum_drift"] for r in rows),
                "lax_fd_residual": fd,
                "H_drift_rel": _rel_drift(traj.diagnostics["H"])}, path

    return _map(one, cfg.seeds, threads)


def _radius_scan(cfg, ctx, b, run_dir, tag, threads):
    alg = ctx.algebra
    seed = cfg.seeds[0]
    x0 = ctx.a.copy()
    p0 = cotangent_sample(ctx, x0, seed)
    pt0 = _with_speed(ctx, x0, p0, cfg.speed, np.eye(alg.dim))

    def one(eps):
        traj = simulate_pendulum(ctx, pt0, MagneticSetup(eps), cfg.t_end, cfg.h,
                                 cfg.project_every, cfg.record_every)
        measured = _circle_radius(traj)
        expected = float(np.arctan2(cfg.speed, abs(eps)))
        return {"epsilon": float(eps), "measured": measured, "expected": expected,
                "abs_error": abs(measured - expected)}

    rows = _map(one, list(cfg.epsilons), threads)
    path = write_rows_csv(run_dir / f"radius_scan-{tag}.csv", rows, tag)
    metrics = {f"radius_eps_{r['epsilon']:g}": r["measured"] for r in rows}
    metrics["radius_max_abs_error"] = max(r["abs_error"] for r in rows)
    return [(metrics, path)]


def _certify(cfg, ctx, b, run_dir, tag, threads):
    alg = ctx.algebra
    eps = cfg.epsilon
    family = family_semidirect(alg, b, cfg.lambda_grid, eps)
    report = completeness_report(family, ctx, eps, cfg.samples, seed=cfg.seeds[0], threads=threads)
    a1 = condition_A1(alg, ctx.a, b, eps)
    a2 = condition_A2(alg, ctx.a, b, eps)
    tori = tori_dimension(ctx, samples=cfg.samples, seed=cfg.seeds[0])
    mu = theta_map(alg, random_phase_point(ctx, cfg.seeds[0]), eps)
    profile = rank_profile(alg, mu, b, np.linspace(0.25, 2.5, 10))
    doc = {"completeness": report.to_dict(), "A1": a1.to_dict(), "A2": a2.to_dict(),
           "tori": tori.to_dict(),
           "rank_profile": [r.to_dict() for r in profile],
           "rank_constant": len({r.rank for r in profile}) == 1}
    path = write_json(run_dir / f"certify-{tag}.json", doc, tag)
    mu0 = orbit_seed_point(ctx.a, eps)
    for l1, l2 in ((1.0, 0.0), (-1.0, 1.0)):
        write_matrix_csv(run_dir / f"pencil-{tag}-{l1:g}_{l2:g}.csv",
                         pencil_form(alg, mu0, l1, l2, b).matrix, tag)
    metrics = {"ddim": report.ddim, "dind": report.dind, "phase_dim": report.phase_dim,
               "verdict": int(report.verdict), "A1_verdict": int(a1.verdict),
               "A1_min_gap": a1.min_gap, "A2_dim_K": a2.dim_K, "A2_verdict": int(a2.verdict),
               "tori_dimension": tori.dimension}
    return [(metrics, path)]


KIND_RUNNERS = {"geodesic": _geodesic, "pendulum": _pendulum, "semidirect": _semidirect,
                "lax": _lax, "radius_scan": _radius_scan, "certify": _certify}


def _fresh_dir(base: Path, name: str) -> Path:
    candidate, k = base / name, 1
    while candidate.exists():
        k += 1
        candidate = base / f"{name}-{k}"
    candidate.mkdir(parents=True)
    return candidate


def run(cfg: ExperimentConfig, out: str | Path | None = None, threads: int = 1) -> RunResult:
    """Execute one experiment into a new run directory and write its manifest."""
    tag = cfg.config_hash()
    alg, ctx, b = build_context(cfg)
    base = Path(out or cfg.out or "runs")
    run_dir = _fresh_dir(base, f"{cfg.kind}-{tag}")
    log.info("run %s -> %s", cfg.kind, run_dir)
    t0 = time.perf_counter()
    results = KIND_RUNNERS[cfg.kind](cfg, ctx, b, run_dir, tag, max(1, threads))
    wall = time.perf_counter() - t0
    per = [m for m, _ in results]
    manifest = {
        "toolkit": "magorbit", "version": __version__, "kind": cfg.kind,
        "config_hash": tag, "config": cfg.canonical(), "tolerances": TOLERANCES,
        "metrics": _aggregate(per), "per_seed": per if len(per) > 1 else None,
        "outputs": sorted(p.name for p in run_dir.iterdir()),
        "wall_time_s": wall,
    }
    mpath = write_json(run_dir / f"manifest-{tag}.json", manifest)
    log.info("metrics: %s", manifest["metrics"])
    return RunResult(run_dir, mpath, manifest)


# -- comparison -----------------------------------------------------------------

RATIO_MARKERS = ("error", "drift", "residual")


def compare(manifest_a: dict, manifest_b: dict, rtol: float = 0.0) -> dict:
    """Metrics that differ between two runs of the same kind.

    For error-like metrics (errors, drifts, residuals) the ratio a / b is
    reported, e.g. about 16 for a fourth-order method at h versus h / 2.
    """
    ka, kb = manifest_a.get("kind"), manifest_b.get("kind")
    if ka != kb:
        raise ConfigurationError(f"cannot compare runs of kind {ka!r} and {kb!r}")
    ma, mb = manifest_a.get("metrics", {}), manifest_b.get("metrics", {})
    rows = []
    for key in sorted(set(ma) | set(mb)):
        va, vb = ma.get(key), mb.get(key)
        if va == vb:
            continue
        row = {"metric": key, "a": va, "b": vb}
        if isinstance(va, (int, float)) and isinstance(vb, (int, float)) and va is not None:
            diff = vb - va
            if abs(diff) <= rtol * max(abs(va), abs(vb)):
                continue
            row["difference"] = diff
            if any(m in key for m in RATIO_MARKERS) and vb != 0:
                row["ratio"] = va / vb
        rows.append(row)
    return {"kind": ka, "config_hash_a": manifest_a.get("config_hash"),
            "config_hash_b": manifest_b.get("config_hash"), "rtol": rtol, "differences": rows}
