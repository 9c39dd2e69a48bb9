"""Compact matrix Lie algebras and the brackets built on them.

An algebra is given by a basis of (real or complex) matrices.  Elements of
``g`` are real coordinate vectors of length ``d``; elements of
``g_0 = g + i g`` (and of its contraction ``g_theta``) are complex coordinate
vectors ``xi + 1j*eta``.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import expm

from .errors import ConfigurationError, InputError

STRUCTURE_TOL = 1e-10
POISSON_KINDS = ("g0", "gtheta", "ib")


@dataclass(frozen=True)
class InvariantPolynomial:
    """Ad-invariant polynomial on g, extended complex-linearly to g^C.

    ``evaluator`` maps a complex matrix (defining representation) to a complex
    scalar.  For shipped families it is ``-(-i)^k`` times the k-th elementary
    symmetric function of the eigenvalues, which is real on g and positive
    definite for k = 2.
    """
    index: int
    degree: int
    evaluator: Callable[[np.ndarray], complex]

    def __call__(self, Z: np.ndarray) -> complex:
        return self.evaluator(Z)


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a)
    a.setflags(write=False)
    return a


def _phase(k: int) -> complex:
    return -((-1j) ** k)


def char_coefficients(Z: np.ndarray, kmax: int, with_grad: bool = False):
    """Elementary symmetric functions e_1..e_kmax of the eigenvalues of Z.

    Computed from power traces by Newton's identities so that the matrix
    gradient ``dE[k-1] = d e_k / d Z`` (entrywise, holomorphic) comes for free.
    """
    n = Z.shape[0]
    powers = [np.eye(n, dtype=complex)]
    for _ in range(kmax):
        powers.append(powers[-1] @ Z)
    s = [None] + [np.trace(powers[i]) for i in range(1, kmax + 1)]
    e = [1.0 + 0j]
    de = [np.zeros((n, n), dtype=complex)]
    for k in range(1, kmax + 1):
        acc = 0j
        dacc = np.zeros((n, n), dtype=complex)
        for i in range(1, k + 1):
            sign = 1.0 if i % 2 == 1 else -1.0
            acc += sign * e[k - i] * s[i]
            if with_grad:
                # d tr(Z^i) / dZ = i (Z^{i-1})^T
                dacc += sign * (de[k - i] * s[i] + e[k - i] * i * powers[i - 1].T)
        e.append(acc / k)
        de.append(dacc / k)
    if with_grad:
        return np.array(e[1:]), de[1:]
    return np.array(e[1:])


class LieAlgebraSpec:
    """A compact (semisimple) Lie algebra given by a matrix basis.

    Structure constants satisfy ``[e_i, e_j] = sum_k C[i, j, k] e_k`` and the
    invariant inner product is minus the Killing form, rescaled so that its
    smallest diagonal entry is 1.
    """

    def __init__(self, name: str, basis: Sequence[np.ndarray], gram=None,
                 evaluators: Sequence[Callable] | None = None):
        basis = np.array([np.asarray(E) for E in basis])
        if basis.ndim != 3 or basis.shape[1] != basis.shape[2]:
            raise ConfigurationError("basis must be a list of square matrices")
        self.name = name
        self.basis = _freeze(basis)
        self.dim = basis.shape[0]
        self.matrix_size = basis.shape[1]
        self._flat = np.concatenate([basis.reshape(self.dim, -1).real,
                                     basis.reshape(self.dim, -1).imag], axis=1).T
        if np.linalg.matrix_rank(self._flat) < self.dim:
            raise ConfigurationError(f"{name}: basis matrices are linearly dependent")
        self.structure_constants = _freeze(self._compute_structure_constants())
        self._C2 = self.structure_constants.reshape(self.dim, -1)      # (i, j*k)
        self._basis2 = self.basis.reshape(self.dim, -1)
        self.gram = _freeze(self._killing_gram() if gram is None else np.asarray(gram, float))
        self._check_gram()
        self._chol = np.linalg.cholesky(self.gram)       # gram = L L^T
        self._chol_inv = np.linalg.inv(self._chol)
        self._gram_inv = np.linalg.inv(self.gram)
        # T[i, j, k] = <e_i, [e_j, e_k]>
        self._triple = np.einsum("jkl,il->ijk", self.structure_constants, self.gram)
        self._user_evaluators = list(evaluators) if evaluators is not None else None

    # -- construction helpers -------------------------------------------------

    def _compute_structure_constants(self) -> np.ndarray:
        d = self.dim
        B = self.basis
        comms = np.einsum("iab,jbc->ijac", B, B) - np.einsum("jab,ibc->ijac", B, B)
        comms = comms.reshape(d * d, -1)
        rhs = np.concatenate([comms.real, comms.imag], axis=1).T
        coef, *_ = np.linalg.lstsq(self._flat, rhs, rcond=None)
        resid = np.abs(self._flat @ coef - rhs).max()
        scale = max(1.0, np.abs(rhs).max())
        if resid > STRUCTURE_TOL * scale:
            raise ConfigurationError(
                f"{self.name}: basis is not closed under commutators (residual {resid:.2e})")
        C = coef.T.reshape(d, d, d)
        C[np.abs(C) < 1e-15] = 0.0
        return C

    def _killing_gram(self) -> np.ndarray:
        ads = np.transpose(self.structure_constants, (0, 2, 1))   # ads[i] = ad(e_i)
        K = np.einsum("iab,jba->ij", ads, ads)
        neg = -K
        diag_min = np.diag(neg).min()
        if diag_min <= 0:
            raise ConfigurationError(
                f"{self.name}: Killing form is not negative definite; only compact "
                "semisimple algebras are supported")
        return neg / diag_min

    def _check_gram(self):
        G = self.gram
        if G.shape != (self.dim, self.dim) or not np.allclose(G, G.T, atol=1e-13):
            raise ConfigurationError(f"{self.name}: gram must be symmetric d x d")
        if np.linalg.eigvalsh(G).min() <= 0:
            raise ConfigurationError(f"{self.name}: gram is not positive definite")
        if self.ad_invariance_residual() > 1e-10:
            raise ConfigurationError(f"{self.name}: gram is not ad-invariant")

    # -- diagnostics ----------------------------------------------------------

    def jacobi_residual(self) -> float:
        C = self.structure_constants
        # [[e_i, e_j], e_k] + cyclic
        t = np.einsum("ijl,lkm->ijkm", C, C)
        cyc = t + np.transpose(t, (1, 2, 0, 3)) + np.transpose(t, (2, 0, 1, 3))
        return float(np.abs(cyc).max())

    def antisymmetry_residual(self) -> float:
        C = self.structure_constants
        return float(np.abs(C + np.transpose(C, (1, 0, 2))).max())

    def ad_invariance_residual(self) -> float:
        # <[e_z, e_x], e_y> + <e_x, [e_z, e_y]>
        CG = np.einsum("zxk,ky->zxy", self.structure_constants, self.gram)
        return float(np.abs(CG + np.transpose(CG, (0, 2, 1))).max())

    # -- elementary operations ------------------------------------------------

    def _check(self, *vs):
        for v in vs:
            if getattr(v, "shape", None) != (self.dim,) and np.shape(v) != (self.dim,):
                raise InputError(
                    f"{self.name}: expected a vector of length {self.dim}, got shape {np.shape(v)}")

    def bracket(self, x, y) -> np.ndarray:
        """[x, y]; complex inputs give the complex-linear bracket of g^C."""
        self._check(x, y)
        return y @ (x @ self._C2).reshape(self.dim, self.dim)

    def inner(self, x, y):
        """Invariant inner product (complex-bilinear on complex inputs)."""
        self._check(x, y)
        return x @ self.gram @ y

    def norm(self, x) -> float:
        return float(np.sqrt(abs(self.inner(x, x))))

    def ad_operator(self, x) -> np.ndarray:
        """Matrix of ad_x, so that ad_operator(x) @ y == bracket(x, y)."""
        self._check(x)
        return (x @ self._C2).reshape(self.dim, self.dim).T

    def group_adjoint_matrix(self, xi, t: float = 1.0) -> np.ndarray:
        """Matrix of Ad_{exp(t xi)} = exp(t ad_xi)."""
        return expm(t * self.ad_operator(xi))

    def group_adjoint(self, xi, t: float, y) -> np.ndarray:
        self._check(y)
        return self.group_adjoint_matrix(xi, t) @ y

    def matrix(self, v) -> np.ndarray:
        """Defining-representation matrix sum_m v_m E_m (complex v allowed)."""
        self._check(v)
        n = self.matrix_size
        return (v @ self._basis2).reshape(n, n)

    def coords(self, M: np.ndarray) -> np.ndarray:
        """Coordinates of a matrix of g by least-squares projection on the basis."""
        flat = np.concatenate([M.reshape(-1).real, M.reshape(-1).imag])
        c, *_ = np.linalg.lstsq(self._flat, flat, rcond=None)
        return c

    def gradient_from_partials(self, partials):
        """Inner-product gradient from coordinate partial derivatives."""
        return self._gram_inv @ partials

    def triple_matrix(self, v) -> np.ndarray:
        """S with S[j, k] = <v, [e_j, e_k]>."""
        return np.tensordot(v, self._triple, axes=1)

    # -- rank and invariant polynomials --------------------------------------

    @cached_property
    def rank(self) -> int:
        rng = np.random.default_rng(12345)
        dims = []
        for _ in range(3):
            A = self.ad_operator(rng.standard_normal(self.dim))
            s = np.linalg.svd(A, compute_uv=False)
            dims.append(int(np.sum(s <= 1e-9 * s[0])))
        return min(dims)

    @cached_property
    def invariant_polynomials(self) -> tuple[InvariantPolynomial, ...]:
        return tuple(invariant_polynomials(self))

    @cached_property
    def _poly_degrees(self) -> tuple[int, ...] | None:
        if self._user_evaluators is not None:
            return None
        return _select_degrees(self)

    def poly_values(self, z) -> np.ndarray:
        """(p_1(z), ..., p_r(z)) for real or complex coordinates z."""
        Z = self.matrix(np.asarray(z, dtype=complex))
        if self._poly_degrees is None:
            return np.array([f(Z) for f in self._user_evaluators], dtype=complex)
        degs = self._poly_degrees
        e = char_coefficients(Z, max(degs))
        return np.array([_phase(k) * e[k - 1] for k in degs])

    def poly_grads(self, z) -> np.ndarray:
        """Holomorphic coordinate partials dp_j/dz_m, shape (r, d)."""
        z = np.asarray(z, dtype=complex)
        if self._poly_degrees is None:
            return _fd_holomorphic_grad(lambda w: self.poly_values(w), z)
        Z = self.matrix(z)
        degs = self._poly_degrees
        _, de = char_coefficients(Z, max(degs), with_grad=True)
        return np.array([_phase(k) * np.einsum("ab,mab->m", de[k - 1], self.basis)
                         for k in degs])

    # -- complexification and contraction ------------------------------------

    def theta_bracket(self, z1, z2) -> np.ndarray:
        """Contraction bracket on g_theta = g (+)_ad i g."""
        x1, y1 = np.real(z1), np.imag(z1)
        x2, y2 = np.real(z2), np.imag(z2)
        return self.bracket(x1, x2) + 1j * (self.bracket(y1, x2) + self.bracket(x1, y2))

    def g0_bracket(self, z1, z2) -> np.ndarray:
        """Bracket of g_0 = g^C viewed as a real algebra."""
        return self.bracket(np.asarray(z1, complex), np.asarray(z2, complex))

    def pairing(self, z1, z2) -> float:
        """(xi1 + i eta1, xi2 + i eta2) = <xi1, xi2> - <eta1, eta2>."""
        return float(self.inner(np.real(z1), np.real(z2)) - self.inner(np.imag(z1), np.imag(z2)))

    def lie_poisson(self, kind: str, mu, gf, gg, b=None) -> float:
        """Lie-Poisson bracket value from gradients ``grad_xi f - 1j*grad_eta f``."""
        return float(self.lie_poisson_matrix(kind, mu, np.atleast_2d(gf),
                                             np.atleast_2d(gg), b)[0, 0])

    def lie_poisson_matrix(self, kind: str, mu, GF, GG, b=None) -> np.ndarray:
        """Batched lie_poisson: rows of GF against rows of GG."""
        if kind not in POISSON_KINDS:
            raise InputError(f"unknown bracket kind {kind!r}; expected one of {POISSON_KINDS}")
        GF = np.asarray(GF, complex)
        GG = np.asarray(GG, complex)
        Fx, Fy = GF.real, -GF.imag
        Gx, Gy = GG.real, -GG.imag
        if kind == "ib":
            if b is None:
                raise InputError("bracket kind 'ib' requires b")
            Sb = self.triple_matrix(np.asarray(b, float))
            return Fx @ Sb @ Gy.T + Fy @ Sb @ Gx.T
        mu = np.asarray(mu, complex)
        Sx = self.triple_matrix(mu.real)
        Sy = self.triple_matrix(mu.imag)
        out = Fx @ Sx @ Gx.T + Fx @ Sy @ Gy.T + Fy @ Sy @ Gx.T
        if kind == "g0":
            out = out - Fy @ Sx @ Gy.T
        return out

    def __repr__(self):
        return f"LieAlgebraSpec({self.name!r}, dim={self.dim})"


def _fd_holomorphic_grad(f, z, step=1e-6):
    z = np.asarray(z, complex)
    cols = []
    for m in range(z.size):
        dz = np.zeros_like(z)
        dz[m] = step
        d1 = (f(z + dz) - f(z - dz)) / (2 * step)
        d2 = (f(z + 2 * dz) - f(z - 2 * dz)) / (4 * step)
        cols.append((4 * d1 - d2) / 3)
    return np.array(cols).T


def _select_degrees(spec: LieAlgebraSpec) -> tuple[int, ...]:
    r = spec.rank
    rng = np.random.default_rng(2024)
    x = rng.standard_normal(spec.dim)
    Z = spec.matrix(x.astype(complex))
    n = spec.matrix_size
    _, de = char_coefficients(Z, n, with_grad=True)
    rows, degs = [], []
    for k in range(1, n + 1):
        g = np.einsum("ab,mab->m", de[k - 1], spec.basis)
        if np.abs(g).max() < 1e-10:
            continue
        trial = np.array(rows + [g])
        s = np.linalg.svd(trial, compute_uv=False)
        if np.sum(s > 1e-9 * s[0]) == len(trial):
            rows.append(g)
            degs.append(k)
        if len(degs) == r:
            return tuple(degs)
    raise ConfigurationError(
        f"{spec.name}: characteristic coefficients give only {len(degs)} of {r} "
        "independent invariants; supply evaluators")


def invariant_polynomials(spec: LieAlgebraSpec) -> list[InvariantPolynomial]:
    """The r basic invariant polynomials of ``spec`` (see InvariantPolynomial)."""
    if spec._user_evaluators is not None:
        if len(spec._user_evaluators) != spec.rank:
            raise ConfigurationError(
                f"{spec.name}: expected {spec.rank} evaluators, got {len(spec._user_evaluators)}")
        return [InvariantPolynomial(j + 1, 0, f) for j, f in enumerate(spec._user_evaluators)]
    out = []
    for j, k in enumerate(spec._poly_degrees):
        def ev(Z, k=k):
            return complex(_phase(k) * char_coefficients(np.asarray(Z, complex), k)[k - 1])
        out.append(InvariantPolynomial(j + 1, k, ev))
    return out


# -- shipped families ---------------------------------------------------------

def so(n: int) -> LieAlgebraSpec:
    """so(n), n >= 3.  For n = 3 the basis is the cross-product basis (hat map)."""
    if n < 3:
        raise ConfigurationError("so(n) is semisimple only for n >= 3")
    if n == 3:
        eps = np.zeros((3, 3, 3))
        for (i, j, k), sgn in (((0, 1, 2), 1), ((1, 2, 0), 1), ((2, 0, 1), 1),
                               ((0, 2, 1), -1), ((2, 1, 0), -1), ((1, 0, 2), -1)):
            eps[i, j, k] = sgn
        basis = [-eps[k] for k in range(3)]
    else:
        basis = []
        for i, j in itertools.combinations(range(n), 2):
            E = np.zeros((n, n))
            E[i, j], E[j, i] = -1.0, 1.0
            basis.append(E)
    return LieAlgebraSpec(f"so({n})", basis)


def gell_mann(n: int) -> list[np.ndarray]:
    """Generalized Gell-Mann matrices in the standard su(3) ordering."""
    mats = []
    for k in range(1, n):
        for j in range(k):
            S = np.zeros((n, n), complex)
            S[j, k] = S[k, j] = 1
            A = np.zeros((n, n), complex)
            A[j, k], A[k, j] = -1j, 1j
            mats += [S, A]
        D = np.zeros((n, n), complex)
        D[np.arange(k), np.arange(k)] = 1
        D[k, k] = -k
        mats.append(np.sqrt(2.0 / (k * (k + 1))) * D)
    return mats


def su(n: int) -> LieAlgebraSpec:
    """su(n), n >= 2, basis -i/2 times the generalized Gell-Mann matrices."""
    if n < 2:
        raise ConfigurationError("su(n) requires n >= 2")
    return LieAlgebraSpec(f"su({n})", [-0.5j * L for L in gell_mann(n)])


def _parse_entry(v):
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ConfigurationError("complex entries must be [re, im] pairs")
        return complex(v[0], v[1])
    return complex(v)


def algebra_from_dict(doc: dict) -> LieAlgebraSpec:
    """Build an algebra from ``{"family": "so"|"su", "n": n}`` or ``{"basis": [...]}``."""
    if "family" in doc:
        fam, n = doc["family"], doc.get("n")
        if not isinstance(n, int):
            raise ConfigurationError("algebra.n must be an integer")
        if fam == "so":
            return so(n)
        if fam == "su":
            return su(n)
        raise ConfigurationError(f"unsupported family {fam!r}")
    if "basis" in doc:
        basis = [np.array([[_parse_entry(v) for v in row] for row in M]) for M in doc["basis"]]
        if all(np.abs(M.imag).max() == 0 for M in basis):
            basis = [M.real for M in basis]
        return LieAlgebraSpec(doc.get("name", "custom"), basis)
    raise ConfigurationError("algebra document needs 'family' and 'n', or 'basis'")


def algebra_from_json(text: str) -> LieAlgebraSpec:
    return algebra_from_dict(json.loads(text))


def algebra_to_dict(spec: LieAlgebraSpec) -> dict:
    for fam in ("so", "su"):
        if spec.name.startswith(fam + "("):
            return {"family": fam, "n": spec.matrix_size}
    return {"name": spec.name,
            "basis": [[[[float(v.real), float(v.imag)] for v in row] for row in M]
                      for M in spec.basis]}
