"""Conserved quantities: momentum maps, Hamiltonians, argument-shift families and the Lax pair.

Every family member is a function on g_theta of ``(xi, eta)`` with an exact
gradient; on phase space it is evaluated through ``theta_map``
(xi = [x, p] + eps x, eta = x).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import NumericalError, UnsupportedInputError
from .liealg import LieAlgebraSpec
from .orbit import PhasePoint

FAMILY_KINDS = ("shift_Ac", "semidirect_B", "momentum_components", "hamiltonian", "s2_linear")


def momentum_map(algebra: LieAlgebraSpec, pt: PhasePoint, epsilon: float) -> np.ndarray:
    return algebra.bracket(pt.x, pt.p) + epsilon * pt.x


def normal_hamiltonian(algebra: LieAlgebraSpec, pt: PhasePoint) -> float:
    m = algebra.bracket(pt.x, pt.p)
    return float(0.5 * algebra.inner(m, m))


def pendulum_hamiltonian(algebra: LieAlgebraSpec, pt: PhasePoint, b=None, kappa: float = 1.0) -> float:
    h = normal_hamiltonian(algebra, pt)
    if b is None:
        return h
    return float(h - kappa * algebra.inner(np.asarray(b, float), pt.x))


def theta_map(algebra: LieAlgebraSpec, pt: PhasePoint, epsilon: float) -> np.ndarray:
    """Theta_eps(x, p) = Phi_eps(x, p) + i x, as a complex coordinate vector."""
    return momentum_map(algebra, pt, epsilon) + 1j * np.asarray(pt.x, float)


@dataclass(frozen=True)
class Member:
    """One scalar integral, a function of (xi, eta) on g_theta.

    ``grad_fn`` returns the coordinate partials (d/dxi, d/deta); ``None``
    means gradients are taken by finite differences.
    """
    algebra: LieAlgebraSpec
    epsilon: float
    value_fn: Callable[[np.ndarray, np.ndarray], float]
    grad_fn: Callable | None = None
    kind: str = "custom"
    j: int | None = None
    lam: float | None = None
    part: str | None = None

    def on_image(self, mu) -> float:
        mu = np.asarray(mu, complex)
        return float(self.value_fn(mu.real, mu.imag))

    def __call__(self, pt: PhasePoint) -> float:
        return self.on_image(theta_map(self.algebra, pt, self.epsilon))

    def partials(self, mu) -> tuple[np.ndarray, np.ndarray]:
        mu = np.asarray(mu, complex)
        if self.grad_fn is not None:
            gx, gy = self.grad_fn(mu.real, mu.imag)
            return np.asarray(gx, float), np.asarray(gy, float)
        return _fd_partials(self.value_fn, mu.real, mu.imag)

    def metadata(self) -> dict:
        return {"kind": self.kind, "j": self.j, "lambda": self.lam, "part": self.part}


@dataclass(frozen=True)
class IntegralFamily:
    members: tuple[Member, ...]
    kind: str
    lambda_grid: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if not self.members:
            raise ValueError("an integral family needs at least one member")

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def values(self, pt: PhasePoint) -> np.ndarray:
        return np.array([m(pt) for m in self.members])

    def subset(self, keep) -> "IntegralFamily":
        members = tuple(m for m in self.members if keep(m))
        lams = tuple(sorted({m.lam for m in members if m.lam is not None}))
        return IntegralFamily(members, self.kind, lams)

    def __add__(self, other: "IntegralFamily") -> "IntegralFamily":
        return IntegralFamily(self.members + other.members, f"{self.kind}+{other.kind}",
                              self.lambda_grid + other.lambda_grid)


def _fd_partials(f, xi, eta, step=1e-6):
    """Central differences with one Richardson extrapolation."""
    def d(vec_index, which):
        e = np.zeros(len(xi))
        e[vec_index] = 1.0

        def at(s):
            return f(xi + s * e, eta) if which == 0 else f(xi, eta + s * e)
        d1 = (at(step) - at(-step)) / (2 * step)
        d2 = (at(2 * step) - at(-2 * step)) / (4 * step)
        return (4 * d1 - d2) / 3
    n = len(xi)
    return (np.array([d(k, 0) for k in range(n)]), np.array([d(k, 1) for k in range(n)]))


def gradient(member: Member, mu) -> np.ndarray:
    """grad f = grad_xi f - i grad_eta f at mu, w.r.t. the invariant inner product."""
    alg = member.algebra
    gx, gy = member.partials(mu)
    return alg.gradient_from_partials(gx) - 1j * alg.gradient_from_partials(gy)


def default_lambda_grid(rank: int, lo: float = 0.2, hi: float = 2.0) -> tuple[float, ...]:
    """rank + 2 Chebyshev nodes on [lo, hi], ascending."""
    n = rank + 2
    k = np.arange(n)
    nodes = np.cos((2 * k + 1) * np.pi / (2 * n))[::-1]
    return tuple(float(v) for v in 0.5 * (lo + hi) + 0.5 * (hi - lo) * nodes)


# -- single members ----------------------------------------------------------

def hamiltonian_member(algebra: LieAlgebraSpec, epsilon: float, b=None, kappa: float = 1.0) -> Member:
    """Pendulum energy 1/2 <xi - eps eta, xi - eps eta> - kappa <b, eta>.

    On the image of Theta_eps, xi - eps eta = [x, p], so this is the pendulum
    (or, for b = None, the normal-metric) Hamiltonian.
    """
    f = np.zeros(algebra.dim) if b is None else kappa * np.asarray(b, float)
    G = algebra.gram

    def value(xi, eta):
        m = xi - epsilon * eta
        return 0.5 * m @ G @ m - f @ G @ eta

    def grad(xi, eta):
        gm = G @ (xi - epsilon * eta)
        return gm, -epsilon * gm - G @ f

    return Member(algebra, epsilon, value, grad, kind="hamiltonian")


def linear_member(algebra: LieAlgebraSpec, epsilon: float, c, kind="momentum_components") -> Member:
    """<c, xi>, i.e. <c, Phi_eps> on phase space."""
    Gc = algebra.gram @ np.asarray(c, float)
    zero = np.zeros(algebra.dim)
    return Member(algebra, epsilon, lambda xi, eta: Gc @ xi, lambda xi, eta: (Gc, zero), kind=kind)


def s2_linear_integral(algebra: LieAlgebraSpec, b, epsilon: float) -> Member:
    """f = <b, x cross p + eps x> on T*S^2."""
    if algebra.name != "so(3)":
        raise UnsupportedInputError("the linear integral is defined for so(3) only")
    return linear_member(algebra, epsilon, b, kind="s2_linear")


def momentum_components(algebra: LieAlgebraSpec, epsilon: float) -> IntegralFamily:
    return IntegralFamily(tuple(linear_member(algebra, epsilon, e) for e in np.eye(algebra.dim)),
                          "momentum_components")


# -- argument-shift families -------------------------------------------------

def _shift_member(algebra, epsilon, c, lam, j):
    def value(xi, eta):
        return float(algebra.poly_values(xi + lam * c)[j].real)

    def grad(xi, eta):
        return algebra.poly_grads(xi + lam * c)[j].real, np.zeros(algebra.dim)

    return Member(algebra, epsilon, value, grad, kind="shift_Ac", j=j + 1, lam=float(lam))


def family_shift(algebra: LieAlgebraSpec, c, lambda_grid=None, epsilon: float = 0.0) -> IntegralFamily:
    """p_j(Phi_eps + lam c) for every invariant p_j and every lam in the grid."""
    c = np.asarray(c, float)
    if not np.any(c):
        raise ValueError("shift direction c must be nonzero")
    grid = tuple(lambda_grid) if lambda_grid is not None else default_lambda_grid(algebra.rank)
    members = tuple(_shift_member(algebra, epsilon, c, lam, j)
                    for lam in grid for j in range(algebra.rank))
    return IntegralFamily(members, "shift_Ac", grid)


def _semidirect_member(algebra, epsilon, b, lam, j, part):
    take = np.real if part == "re" else np.imag

    def arg(xi, eta):
        return lam * xi + 1j * (eta + lam ** 2 * b)

    def value(xi, eta):
        return float(take(algebra.poly_values(arg(xi, eta))[j]))

    def grad(xi, eta):
        q = algebra.poly_grads(arg(xi, eta))[j]
        # d/dxi = lam q, d/deta = i q
        return take(lam * q), take(1j * q)

    return Member(algebra, epsilon, value, grad, kind="semidirect_B", j=j + 1,
                  lam=float(lam), part=part)


def family_semidirect(algebra: LieAlgebraSpec, b, lambda_grid=None, epsilon: float = 0.0) -> IntegralFamily:
    """Re and Im of p_j(lam xi + i (eta + lam^2 b)), pulled back by Theta_eps."""
    b = np.zeros(algebra.dim) if b is None else np.asarray(b, float)
    grid = tuple(lambda_grid) if lambda_grid is not None else default_lambda_grid(algebra.rank)
    if not grid:
        raise ValueError("lambda grid must be nonempty")
    members = tuple(_semidirect_member(algebra, epsilon, b, lam, j, part)
                    for lam in grid for j in range(algebra.rank) for part in ("re", "im"))
    return IntegralFamily(members, "semidirect_B", grid)


def shifted_casimir(algebra: LieAlgebraSpec, a, lam: float, j: int):
    """(value, gradient) callables for p_j(eta + lam a) on g (index j from 0)."""
    a = np.asarray(a, float)

    def value(eta):
        return float(algebra.poly_values(eta + lam * a)[j].real)

    def grad(eta):
        return algebra.gradient_from_partials(algebra.poly_grads(eta + lam * a)[j].real)

    return value, grad


# -- Lax pair -----------------------------------------------------------------

@dataclass(frozen=True)
class LaxPair:
    """L(lam) = lam Phi_eps + i (x + lam^2 b) and A(lam) in the defining representation.

    With the matrix commutator as Lie bracket the flow satisfies
    dL/dt = [L, A] for A(lam) = -(Phi_eps + i lam b); ``positive_sign=True``
    gives Phi_eps + i lam b, for which dL/dt = [A, L].
    """
    algebra: LieAlgebraSpec
    pt: PhasePoint
    epsilon: float
    b: np.ndarray
    positive_sign: bool = False

    def _phi(self):
        return momentum_map(self.algebra, self.pt, self.epsilon)

    def L(self, lam: float) -> np.ndarray:
        M = self.algebra.matrix
        return lam * M(self._phi().astype(complex)) + 1j * M((self.pt.x + lam ** 2 * self.b).astype(complex))

    def A(self, lam: float) -> np.ndarray:
        M = self.algebra.matrix
        A = M(self._phi().astype(complex)) + 1j * lam * M(self.b.astype(complex))
        return A if self.positive_sign else -A


def lax_pair(algebra, pt, epsilon, b, positive_sign=False) -> LaxPair:
    b = np.zeros(algebra.dim) if b is None else np.asarray(b, float)
    return LaxPair(algebra, pt, epsilon, b, positive_sign)


def sort_spectrum(w: np.ndarray) -> np.ndarray:
    return w[np.lexsort((w.imag, w.real))]


def lax_spectrum(algebra: LieAlgebraSpec, pt: PhasePoint, epsilon: float, b, lam: float) -> np.ndarray:
    """Eigenvalues of L(lam), sorted lexicographically by (re, im)."""
    L = lax_pair(algebra, pt, epsilon, b).L(lam)
    try:
        w = np.linalg.eigvals(L)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue solver failed: {exc}") from exc
    return sort_spectrum(w)


def spectrum_distance(w1: np.ndarray, w2: np.ndarray) -> float:
    """Max deviation under the optimal one-to-one matching of two spectra."""
    cost = np.abs(w1[:, None] - w2[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


# -- drift bookkeeping --------------------------------------------------------

def drift_report(family: IntegralFamily, points, floor: float = 1e-12) -> list[dict]:
    """Per-member drift along a sequence of phase points.

    Relative drift is max |f(t) - f(0)| / max(|f(0)|, floor).
    """
    vals = np.array([[m(pt) for m in family.members] for pt in points])
    v0 = vals[0]
    dev = np.abs(vals - v0).max(axis=0)
    rows = []
    for m, a0, dv in zip(family.members, v0, dev):
        row = m.metadata()
        row.update(value_t0=float(a0), max_drift_abs=float(dv),
                   max_drift_rel=float(dv / max(abs(a0), floor)))
        rows.append(row)
    return rows
