"""Adjoint orbits O(a) inside g and their cotangent bundles T*O(a) in g x g."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigurationError, InconsistentMomentumError
from .liealg import LieAlgebraSpec, algebra_from_dict, algebra_to_dict

KERNEL_TOL = 1e-9


@dataclass(frozen=True)
class Kernel:
    """Orthonormal (w.r.t. the invariant inner product) basis of ker ad_x."""
    basis: np.ndarray             # (d, k), columns
    singular_values: np.ndarray   # descending, in orthonormal coordinates
    gap: float
    ambiguous: bool

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


def _kernel_from_svd(algebra, A, tol, dim):
    # A is ad_x in orthonormal coordinates (antisymmetric there).
    _, s, Vt = np.linalg.svd(A)
    d = len(s)
    smax = s[0] if s[0] > 0 else 1.0
    k = int(np.sum(s <= tol * smax)) if dim is None else dim
    if 0 < k < d:
        gap = s[d - k - 1] / max(s[d - k], np.finfo(float).eps * smax)
    else:
        gap = np.inf
    ambiguous = False
    if dim is None:
        below = s[d - k] if k > 0 else 0.0
        above = s[d - k - 1] if k < d else np.inf
        ambiguous = bool(above < 10 * tol * smax or below > 0.1 * tol * smax)
    basis = algebra._chol_inv.T @ Vt[d - k:].T
    return Kernel(basis, s, float(gap), ambiguous)


def ann_basis(algebra: LieAlgebraSpec, x, tol: float = KERNEL_TOL, dim: int | None = None) -> Kernel:
    """Kernel of ad_x by relative singular-value threshold.

    With ``dim`` given, the ``dim`` smallest singular directions are taken
    instead (used along trajectories, where the dimension is known).
    """
    x = np.asarray(x, float)
    if not np.any(x) and dim is None:
        raise ConfigurationError("ann_basis requires x != 0")
    L = algebra._chol
    A = L.T @ algebra.ad_operator(x) @ algebra._chol_inv.T
    return _kernel_from_svd(algebra, A, tol, dim)


def project(algebra: LieAlgebraSpec, y, basis, onto_complement: bool = False) -> np.ndarray:
    """Orthogonal projection onto span(basis) or its orthogonal complement."""
    y = np.asarray(y)
    basis = np.asarray(basis)
    onto = basis @ (basis.T @ (algebra.gram @ y)) if basis.size else np.zeros_like(y)
    return y - onto if onto_complement else onto


@dataclass(frozen=True)
class PhasePoint:
    """Point (x, p) of T*O(a) embedded in g x g.

    ``witness`` optionally holds the matrix of Ad_{g0} with x = Ad_{g0} a.
    """
    x: np.ndarray
    p: np.ndarray
    witness: np.ndarray | None = field(default=None, compare=False, repr=False)

    @property
    def state(self) -> np.ndarray:
        return np.concatenate([self.x, self.p])

    @classmethod
    def from_state(cls, state, witness=None) -> "PhasePoint":
        d = len(state) // 2
        return cls(np.asarray(state[:d]), np.asarray(state[d:]), witness)


@dataclass(frozen=True)
class OrbitContext:
    algebra: LieAlgebraSpec
    a: np.ndarray
    ann_a: Kernel
    orbit_dim: int
    kernel_tol: float = KERNEL_TOL

    @classmethod
    def create(cls, algebra: LieAlgebraSpec, a, kernel_tol: float = KERNEL_TOL) -> "OrbitContext":
        a = np.asarray(a, float)
        algebra._check(a)
        ker = ann_basis(algebra, a, kernel_tol)
        orbit_dim = algebra.dim - ker.dim
        if orbit_dim % 2:
            raise ConfigurationError(f"orbit dimension {orbit_dim} is odd; check kernel_tol")
        a.setflags(write=False)
        return cls(algebra, a, ker, orbit_dim, kernel_tol)

    @property
    def ann_dim(self) -> int:
        return self.ann_a.dim

    @property
    def phase_dim(self) -> int:
        return 2 * self.orbit_dim

    def seed_invariants(self) -> np.ndarray:
        return self._seed_invariants.copy()

    @cached_property
    def _seed_invariants(self) -> np.ndarray:
        return self.algebra.poly_values(self.a).real

    def ann(self, x) -> Kernel:
        """ann(x) with the dimension fixed to dim ann(a)."""
        return ann_basis(self.algebra, x, self.kernel_tol, dim=self.ann_dim)


def sample_orbit_point(ctx: OrbitContext, rng_seed: int) -> tuple[np.ndarray, np.ndarray]:
    """x = Ad_{exp(xi)} a with xi ~ N(0, I); returns (x, matrix of Ad_{exp(xi)})."""
    rng = np.random.default_rng(rng_seed)
    xi = rng.standard_normal(ctx.algebra.dim)
    g = ctx.algebra.group_adjoint_matrix(xi)
    return g @ ctx.a, g


def random_orbit_point(ctx: OrbitContext, rng_seed: int) -> np.ndarray:
    return sample_orbit_point(ctx, rng_seed)[0]


def cotangent_sample(ctx: OrbitContext, x, rng_seed: int, vector=None) -> np.ndarray:
    """Gaussian vector (or ``vector``) projected onto ann(x)^perp."""
    if vector is None:
        vector = np.random.default_rng(rng_seed).standard_normal(ctx.algebra.dim)
    return project(ctx.algebra, vector, ctx.ann(x).basis, onto_complement=True)


def random_phase_point(ctx: OrbitContext, rng_seed: int, scale: float = 1.0) -> PhasePoint:
    x, g = sample_orbit_point(ctx, rng_seed)
    p = scale * cotangent_sample(ctx, x, rng_seed + 7919)
    return PhasePoint(x, p, g)


def recover_p(ctx: OrbitContext, x, m, tol: float = 1e-9) -> np.ndarray:
    """The unique p in ann(x)^perp with [x, p] = m."""
    alg = ctx.algebra
    m = np.asarray(m, float)
    ker = ctx.ann(x).basis
    along = project(alg, m, ker)
    if alg.norm(along) > tol * max(1.0, alg.norm(m)):
        raise InconsistentMomentumError(
            f"momentum has a component {alg.norm(along):.2e} along ann(x)")
    p = np.linalg.pinv(alg.ad_operator(x), rcond=1e-10) @ m
    return project(alg, p, ker, onto_complement=True)


def orbit_residual(ctx: OrbitContext, x) -> float:
    return float(np.abs(ctx.algebra.poly_values(x) - ctx._seed_invariants).max())


def cotangent_residual(ctx: OrbitContext, x, p) -> float:
    return ctx.algebra.norm(project(ctx.algebra, p, ctx.ann(x).basis))


def project_to_orbit(ctx: OrbitContext, x, steps: int = 1) -> np.ndarray:
    """Newton correction of the invariant residuals, moving x along ann(x).

    Gradients of invariant polynomials at x lie in ann(x), the normal space of
    the orbit, so the minimum-norm step stays normal to the orbit.
    """
    alg = ctx.algebra
    target = ctx._seed_invariants
    x = np.asarray(x, float)
    for _ in range(steps):
        res = alg.poly_values(x).real - target
        J = alg.poly_grads(x).real                       # partials, (r, d)
        grads = np.array([alg.gradient_from_partials(g) for g in J])
        M = J @ grads.T                                  # <grad_i, grad_j>
        c = np.linalg.lstsq(M, res, rcond=1e-10)[0]
        x = x - grads.T @ c
    return x


def project_phase_point(ctx: OrbitContext, x, p) -> tuple[np.ndarray, np.ndarray]:
    x = project_to_orbit(ctx, x)
    p = project(ctx.algebra, p, ctx.ann(x).basis, onto_complement=True)
    return x, p


def phase_point_to_dict(ctx: OrbitContext, pt: PhasePoint) -> dict:
    return {"algebra": ctx.algebra.name,
            "algebra_spec": algebra_to_dict(ctx.algebra),
            "x": [float(v) for v in pt.x],
            "p": [float(v) for v in pt.p],
            "seed_invariants": [float(v) for v in ctx.seed_invariants()]}


def phase_point_to_json(ctx: OrbitContext, pt: PhasePoint) -> str:
    return json.dumps(phase_point_to_dict(ctx, pt))


def phase_point_from_json(text: str) -> tuple[LieAlgebraSpec, PhasePoint, np.ndarray]:
    doc = json.loads(text)
    alg = algebra_from_dict(doc["algebra_spec"])
    return alg, PhasePoint(np.array(doc["x"]), np.array(doc["p"])), np.array(doc["seed_invariants"])
