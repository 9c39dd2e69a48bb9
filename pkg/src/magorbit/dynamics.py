"""Vector fields and the fixed-step integrator for magnetic flows on T*O(a)."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DivergenceError, ShapeError, UnsupportedInputError
from .orbit import (OrbitContext, PhasePoint, cotangent_residual, orbit_residual,
                    project, project_phase_point, recover_p)

DIVERGENCE_LIMIT = 1e-4


@dataclass(frozen=True)
class MagneticSetup:
    """Magnetic strength epsilon and potential -kappa <b, x>; b = None means no potential."""
    epsilon: float = 0.0
    b: np.ndarray | None = None
    kappa: float = 1.0

    def force(self, d: int) -> np.ndarray:
        if self.b is None:
            return np.zeros(d)
        return self.kappa * np.asarray(self.b, float)

    @property
    def has_potential(self) -> bool:
        return self.b is not None and self.kappa != 0 and bool(np.any(self.b))


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    diagnostics: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise ValueError("times and states differ in length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def phase_points(self) -> list[PhasePoint]:
        return [PhasePoint.from_state(s) for s in self.states]

    def __len__(self):
        return len(self.times)


def geodesic_field(ctx: OrbitContext, pt: PhasePoint) -> tuple[np.ndarray, np.ndarray]:
    """Normal-metric geodesic flow: x' = [x, [p, x]], p' = [p, [p, x]]."""
    ad_x = ctx.algebra.ad_operator(pt.x)
    ad_p = ctx.algebra.ad_operator(pt.p)
    px = ad_p @ pt.x
    return ad_x @ px, ad_p @ px


def pendulum_field(ctx: OrbitContext, pt: PhasePoint, setup: MagneticSetup):
    """Magnetic pendulum: geodesic field plus eps [x, p] + b - pr_ann(x) b on p."""
    alg = ctx.algebra
    ad_x = alg.ad_operator(pt.x)
    ad_p = alg.ad_operator(pt.p)
    px = ad_p @ pt.x
    dx, dp = ad_x @ px, ad_p @ px
    if setup.epsilon != 0:
        dp = dp + setup.epsilon * (ad_x @ pt.p)
    if setup.has_potential:
        f = setup.force(ctx.algebra.dim)
        dp = dp + project(ctx.algebra, f, ctx.ann(pt.x).basis, onto_complement=True)
    return dx, dp


def semidirect_field(algebra, zeta, b) -> np.ndarray:
    """Flow of h = 1/2 <xi, xi> - <b, eta> on g_theta: (xi + i eta)' = [eta, b] + i [xi, eta]."""
    xi, eta = np.real(zeta), np.imag(zeta)
    b = np.zeros(algebra.dim) if b is None else np.asarray(b, float)
    return algebra.bracket(eta, b) + 1j * algebra.bracket(xi, eta)


def rk4_step(f: Callable, y: np.ndarray, h: float) -> np.ndarray:
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate(field: Callable, state0, t_end: float, h: float, project_every: int = 0,
              projector: Callable | None = None, diagnostics: Callable | None = None,
              residual_key: str | None = None, record_every: int = 1) -> Trajectory:
    """Classical RK4 with optional periodic re-projection.

    ``field`` maps a state array to its derivative.  ``diagnostics(state)``
    returns a dict of floats recorded at every stored step; if
    ``residual_key`` names one of them, exceeding DIVERGENCE_LIMIT raises
    DivergenceError.  The step is adjusted so that t_end is hit exactly.
    """
    if h <= 0 or t_end <= 0:
        raise ValueError("h and t_end must be positive")
    n = max(1, int(round(t_end / h)))
    h = t_end / n
    y = np.array(state0, copy=True)
    times, states = [0.0], [y.copy()]
    diag: dict[str, list] = {}

    def record(state):
        if diagnostics is None:
            return
        for k, v in diagnostics(state).items():
            diag.setdefault(k, []).append(v)

    record(y)
    for step in range(1, n + 1):
        y = rk4_step(field, y, h)
        if project_every and projector is not None and step % project_every == 0:
            y = projector(y)
        if step % record_every == 0 or step == n:
            times.append(step * h)
            states.append(y.copy())
            record(y)
            if residual_key is not None and diag[residual_key][-1] > DIVERGENCE_LIMIT:
                raise DivergenceError(step, diag[residual_key][-1], DIVERGENCE_LIMIT)
    return Trajectory(np.array(times), np.array(states),
                      {k: np.array(v) for k, v in diag.items()})


def _pendulum_energy(ctx, x, p, setup):
    alg = ctx.algebra
    m = alg.bracket(x, p)
    return 0.5 * alg.inner(m, m) - alg.inner(setup.force(alg.dim), x)


def simulate_pendulum(ctx: OrbitContext, pt0: PhasePoint, setup: MagneticSetup, t_end: float,
                      h: float, project_every: int = 10, record_every: int = 1) -> Trajectory:
    """Integrate the embedded pendulum equations with constraint diagnostics.

    Diagnostics: ``H`` (pendulum energy), ``res_orbit``, ``res_cotangent``
    and ``residual`` (their maximum, checked for divergence).
    """
    d = ctx.algebra.dim

    def f(y):
        dx, dp = pendulum_field(ctx, PhasePoint(y[:d], y[d:]), setup)
        return np.concatenate([dx, dp])

    def proj(y):
        x, p = project_phase_point(ctx, y[:d], y[d:])
        return np.concatenate([x, p])

    def diag(y):
        x, p = y[:d], y[d:]
        ro = orbit_residual(ctx, x)
        rc = cotangent_residual(ctx, x, p)
        return {"H": float(_pendulum_energy(ctx, x, p, setup)), "res_orbit": ro,
                "res_cotangent": rc, "residual": max(ro, rc)}

    return integrate(f, pt0.state, t_end, h, project_every, proj, diag, "residual",
                     record_every)


def simulate_semidirect(algebra, zeta0, b, t_end: float, h: float, record_every: int = 1) -> Trajectory:
    zeta0 = np.asarray(zeta0, complex)

    def diag(z):
        xi, eta = z.real, z.imag
        bb = np.zeros(algebra.dim) if b is None else np.asarray(b, float)
        return {"h": float(0.5 * algebra.inner(xi, xi) - algebra.inner(bb, eta))}

    return integrate(lambda z: semidirect_field(algebra, z, b), zeta0, t_end, h,
                     diagnostics=diag, record_every=record_every)


def exact_magnetic_geodesic(ctx: OrbitContext, pt0: PhasePoint, epsilon: float, t: float,
                            tol: float = 1e-8) -> PhasePoint:
    """Closed-form magnetic geodesic from the geodesic g0 exp((xi + eps a) t) of G.

    Needs ``pt0.witness`` (matrix of Ad_{g0}, x0 = Ad_{g0} a).  The velocity
    representative is xi = Ad_{g0}^{-1} [x0, p0]; p(t) is recovered from the
    conserved shifted momentum [x, p] + eps x.
    """
    if pt0.witness is None:
        raise UnsupportedInputError("exact_magnetic_geodesic needs the g0 witness of x0")
    alg = ctx.algebra
    g0 = np.asarray(pt0.witness)
    if alg.norm(g0 @ ctx.a - pt0.x) > tol * max(1.0, alg.norm(pt0.x)):
        raise UnsupportedInputError("witness does not map a to x0")
    if t == 0:
        return PhasePoint(pt0.x.copy(), pt0.p.copy(), g0)
    phi0 = alg.bracket(pt0.x, pt0.p)
    xi = np.linalg.solve(g0, phi0)
    body = xi + epsilon * ctx.a
    g_t = g0 @ alg.group_adjoint_matrix(body, t)
    x = g_t @ ctx.a
    phi_eps = phi0 + epsilon * pt0.x
    p = recover_p(ctx, x, phi_eps - epsilon * x, tol=1e-7)
    return PhasePoint(x, p, g_t)


@dataclass(frozen=True)
class CircleFit:
    radius: float          # intrinsic (great-circle) radius on the unit sphere
    chord_radius: float
    plane_offset: float
    normal: np.ndarray
    residual: float


def fit_circle(points: np.ndarray) -> CircleFit:
    """Total-least-squares plane through unit-sphere points and the circle it cuts."""
    P = np.asarray(points, float)
    P = P / np.linalg.norm(P, axis=1, keepdims=True)
    c = P.mean(axis=0)
    _, _, Vt = np.linalg.svd(P - c, full_matrices=False)
    n = Vt[-1]
    off = float(n @ c)
    if off < 0:
        n, off = -n, -off
    center = off * n
    rel = P - center
    plane_dev = np.abs(rel @ n)
    dists = np.linalg.norm(rel - np.outer(rel @ n, n), axis=1)
    rho = float(dists.mean())
    resid = float(max(plane_dev.max(), np.abs(dists - rho).max()))
    return CircleFit(float(np.arctan2(rho, off)), rho, off, n, resid)


def measure_circle_radius(traj: Trajectory, max_residual: float = 1e-4) -> float:
    """Intrinsic radius of the circle traced by x(t) on the so(3) unit sphere."""
    X = traj.states[:, :3]
    if traj.states.shape[1] != 6:
        raise UnsupportedInputError("circle radius is defined for so(3) trajectories only")
    fit = fit_circle(X)
    if fit.residual > max_residual:
        raise ShapeError(f"trajectory is not a circle (fit residual {fit.residual:.2e})")
    return fit.radius
