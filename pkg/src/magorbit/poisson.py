"""Poisson pencils and numerical integrability certificates.

All rank decisions use a relative singular-value threshold and report the
singular-value gap at the cut, so genuine degeneracy can be told from noise.
"""
from __future__ import annotations

import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .integrals import IntegralFamily, theta_map
from .liealg import LieAlgebraSpec
from .orbit import OrbitContext, PhasePoint, ann_basis, project, random_phase_point

log = logging.getLogger(__name__)

RANK_TOL = 1e-8
AMBIGUOUS_GAP = 10.0


@dataclass(frozen=True)
class RankResult:
    rank: int
    gap: float
    singular_values: np.ndarray = field(repr=False)
    ambiguous: bool

    def to_dict(self) -> dict:
        return {"rank": self.rank, "gap": _finite(self.gap), "ambiguous": self.ambiguous}


def _finite(v):
    return float(v) if np.isfinite(v) else None


def numeric_rank(M: np.ndarray, tol: float = RANK_TOL, scale: float | None = None) -> RankResult:
    """Rank by singular values above ``tol * scale`` (scale defaults to the largest)."""
    M = np.atleast_2d(M)
    if M.size == 0:
        return RankResult(0, np.inf, np.zeros(0), False)
    s = np.linalg.svd(M, compute_uv=False)
    ref = s[0] if scale is None else scale
    if ref <= 0 or s[0] == 0:
        return RankResult(0, np.inf, s, False)
    cut = tol * ref
    rank = int(np.sum(s > cut))
    if 0 < rank < len(s):
        gap = s[rank - 1] / max(s[rank], np.finfo(float).eps * ref)
    else:
        gap = np.inf
    # also ambiguous when a singular value sits within a factor 10 of the cut
    near_cut = (rank > 0 and s[rank - 1] < AMBIGUOUS_GAP * cut) or \
        (rank < len(s) and s[rank] > cut / AMBIGUOUS_GAP)
    return RankResult(rank, float(gap), s, bool(gap < AMBIGUOUS_GAP or near_cut))


# -- pencil on g_theta --------------------------------------------------------

def coordinate_covectors(d: int) -> np.ndarray:
    """Basis xi_k and -i eta_k of g_theta, in the gradient convention xi - i eta."""
    eye = np.eye(d)
    return np.vstack([eye.astype(complex), -1j * eye])


@dataclass(frozen=True)
class PencilForm:
    mu: np.ndarray
    lam1: float
    lam2: float
    b: np.ndarray
    matrix: np.ndarray = field(repr=False)

    def antisymmetry_residual(self) -> float:
        return float(np.abs(self.matrix + self.matrix.T).max())


def pencil_form(algebra: LieAlgebraSpec, mu, lam1: float, lam2: float, b) -> PencilForm:
    """lam1 {,}_gtheta + lam2 ({,}_g0 + {,}_ib) at mu, on the coordinate basis of g_theta."""
    mu = np.asarray(mu, complex)
    b = np.asarray(b, float)
    U = coordinate_covectors(algebra.dim)
    M = np.zeros((len(U), len(U)))
    if lam1:
        M = M + lam1 * algebra.lie_poisson_matrix("gtheta", mu, U, U)
    if lam2:
        M = M + lam2 * (algebra.lie_poisson_matrix("g0", mu, U, U)
                        + algebra.lie_poisson_matrix("ib", mu, U, U, b))
    M = 0.5 * (M - M.T)       # exact antisymmetry; the raw sum is already skew up to rounding
    return PencilForm(mu, float(lam1), float(lam2), b, M)


def form_rank(form: PencilForm, tol: float = RANK_TOL) -> RankResult:
    return numeric_rank(form.matrix, tol)


def orbit_seed_point(a, epsilon: float) -> np.ndarray:
    """The point eps a + i a, image of (a, 0) under Theta_eps."""
    a = np.asarray(a, float)
    return epsilon * a + 1j * a


def default_a1_pairs(lambda_grid=(0.25, 0.5, 1.5, 2.0, 3.0), n_random: int = 4, seed: int = 7):
    pairs = [(-1.0, 1.0), (0.0, 1.0)] + [(1.0, float(l)) for l in lambda_grid]
    rng = np.random.default_rng(seed)
    while len(pairs) < 2 + len(lambda_grid) + n_random:
        l1, l2 = rng.uniform(-2, 2, size=2)
        if abs(l2) > 0.1 and abs(l1 + l2) > 0.1:
            pairs.append((float(l1), float(l2)))
    return pairs


@dataclass(frozen=True)
class ConditionA1:
    expected_rank: int
    entries: list
    verdict: bool
    min_gap: float

    def to_dict(self):
        return {"expected_rank": self.expected_rank, "verdict": self.verdict,
                "min_gap": _finite(self.min_gap), "entries": self.entries}


def condition_A1(algebra: LieAlgebraSpec, a, b, epsilon: float, pairs=None,
                 tol: float = RANK_TOL) -> ConditionA1:
    """rank Lambda_{l1,l2} = 2 dim g - 2r at eps a + i a for sampled (l1, l2) != (1, 0)."""
    mu = orbit_seed_point(a, epsilon)
    expected = 2 * algebra.dim - 2 * algebra.rank
    entries, ok, gaps = [], True, []
    for l1, l2 in (pairs or default_a1_pairs()):
        if (l1, l2) == (1.0, 0.0):
            continue
        rr = form_rank(pencil_form(algebra, mu, l1, l2, b), tol)
        entries.append({"lambda1": l1, "lambda2": l2, **rr.to_dict()})
        ok &= rr.rank == expected
        gaps.append(rr.gap)
    return ConditionA1(expected, entries, bool(ok), float(min(gaps)))


@dataclass(frozen=True)
class ConditionA2:
    dim_K: int
    expected: int
    dim_ker_10: int
    b_regular: bool
    verdict: bool
    gap_ker_10: float
    gap_K: float
    ambiguous: bool

    def to_dict(self):
        d = asdict(self)
        d["gap_ker_10"] = _finite(self.gap_ker_10)
        d["gap_K"] = _finite(self.gap_K)
        return d


def is_regular(algebra: LieAlgebraSpec, v, tol: float = 1e-9) -> bool:
    if not np.any(v):
        return False
    return ann_basis(algebra, v, tol).dim == algebra.rank


def condition_A2(algebra: LieAlgebraSpec, a, b, epsilon: float, tol: float = RANK_TOL) -> ConditionA2:
    """Dimension of {z in ker Lambda_{1,0} : Lambda_{0,1}(z, ker Lambda_{1,0}) = 0} at eps a + i a.

    The verdict also requires b to be regular, as the completeness argument
    assumes; with b = 0 the set K is all of ker Lambda_{1,0}.
    """
    mu = orbit_seed_point(a, epsilon)
    b = np.zeros(algebra.dim) if b is None else np.asarray(b, float)
    M10 = pencil_form(algebra, mu, 1.0, 0.0, b).matrix
    M01 = pencil_form(algebra, mu, 0.0, 1.0, b).matrix
    r10 = numeric_rank(M10, tol)
    _, _, Vt = np.linalg.svd(M10)
    N = Vt[r10.rank:].T                                   # ker Lambda_{1,0}
    restricted = N.T @ M01 @ N
    scale = np.linalg.norm(M01, 2)
    rK = numeric_rank(restricted, tol, scale=scale if scale > 0 else None)
    dim_K = N.shape[1] - rK.rank
    expected = 2 * algebra.rank
    b_reg = is_regular(algebra, b)
    return ConditionA2(dim_K, expected, N.shape[1], b_reg, bool(dim_K == expected and b_reg),
                       r10.gap, rK.gap, r10.ambiguous or rK.ambiguous)


def rank_profile(algebra: LieAlgebraSpec, mu, b, lambdas, tol: float = RANK_TOL) -> list[RankResult]:
    """Ranks of Lambda_{1,lam} at mu over a grid of lam."""
    return [form_rank(pencil_form(algebra, mu, 1.0, lam, b), tol) for lam in lambdas]


# -- brackets on v = ann(a)^perp ------------------------------------------------

def v_pencil_bracket(algebra: LieAlgebraSpec, eta, epsilon: float, a, gf, gg) -> float:
    """{f, g}^eps_v(eta) = -<eta + eps a, [grad f, grad g]>."""
    shifted = np.asarray(eta, float) + epsilon * np.asarray(a, float)
    return float(-algebra.inner(shifted, algebra.bracket(gf, gg)))


def a_bracket(algebra: LieAlgebraSpec, a, gf, gg) -> float:
    """{f, g}^a_v = -<a, [grad f, grad g]>, the eps-derivative of v_pencil_bracket."""
    return float(-algebra.inner(np.asarray(a, float), algebra.bracket(gf, gg)))


# -- differential dimension and index --------------------------------------------

def poisson_tensor(algebra: LieAlgebraSpec, mu) -> np.ndarray:
    """Pi with {f, g}_gtheta = df . Pi . dg in (xi, eta) coordinate partials."""
    Gi = np.linalg.inv(algebra.gram)
    R = np.vstack([Gi.astype(complex), -1j * Gi])
    return algebra.lie_poisson_matrix("gtheta", np.asarray(mu, complex), R, R)


def differentials(family: IntegralFamily, mu) -> np.ndarray:
    rows = []
    for m in family.members:
        gx, gy = m.partials(mu)
        rows.append(np.concatenate([gx, gy]))
    return np.array(rows)


@dataclass(frozen=True)
class DdimDind:
    ddim: int
    dind: int
    ddim_rank: RankResult
    bracket_rank: RankResult

    @property
    def ambiguous(self) -> bool:
        return self.ddim_rank.ambiguous or self.bracket_rank.ambiguous


def ddim_dind_at(family: IntegralFamily, mu, tol: float = RANK_TOL) -> DdimDind:
    Pi = poisson_tensor(family.members[0].algebra, mu)
    D = differentials(family, mu)
    norms = np.linalg.norm(D, axis=1)
    Dn = D / np.where(norms > 0, norms, 1.0)[:, None]
    pnorm = np.linalg.norm(Pi, 2)
    dnorm = np.linalg.norm(Dn, 2)
    restricted = Dn @ Pi
    r1 = numeric_rank(restricted, tol, scale=max(dnorm * pnorm, 1e-300))
    B = restricted @ Dn.T
    r2 = numeric_rank(B, tol, scale=max(dnorm ** 2 * pnorm, 1e-300))
    return DdimDind(r1.rank, r1.rank - r2.rank, r1, r2)


def ddim_dind(family: IntegralFamily, pt: PhasePoint, epsilon: float, tol: float = RANK_TOL) -> DdimDind:
    """ddim: rank of the differentials on the tangent space of the symplectic
    leaf through Theta_eps(pt); dind: ddim minus the rank of the bracket matrix."""
    alg = family.members[0].algebra
    return ddim_dind_at(family, theta_map(alg, pt, epsilon), tol)


@dataclass
class CompletenessReport:
    ddim: int
    dind: int
    phase_dim: int
    corank: int
    verdict: bool
    samples: int
    tolerance: float
    min_ddim_gap: float | None
    min_bracket_gap: float | None
    outliers: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    family: str = ""
    n_members: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def completeness_report(family: IntegralFamily, ctx: OrbitContext, epsilon: float,
                        samples: int = 20, seed: int = 0, threads: int | None = None,
                        tol: float = RANK_TOL) -> CompletenessReport:
    """Modal (ddim, dind) over random phase points; complete when ddim + dind = dim T*O(a)."""
    seeds = [seed + 1000 * k for k in range(samples)]

    def one(s):
        return ddim_dind(family, random_phase_point(ctx, s), epsilon, tol)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(one, seeds))
    else:
        results = [one(s) for s in seeds]
    counts = Counter((r.ddim, r.dind) for r in results)
    (ddim, dind), _ = counts.most_common(1)[0]
    outliers = [s for s, r in zip(seeds, results) if (r.ddim, r.dind) != (ddim, dind)]
    warnings = []
    if outliers:
        warnings.append(f"non-constant ranks at {len(outliers)} of {samples} samples: seeds {outliers}")
        log.warning(warnings[-1])
    if any(r.ambiguous for r in results):
        warnings.append("ambiguous rank decision (singular-value gap < 10) at some samples")
    gaps1 = [r.ddim_rank.gap for r in results if np.isfinite(r.ddim_rank.gap)]
    gaps2 = [r.bracket_rank.gap for r in results if np.isfinite(r.bracket_rank.gap)]
    phase_dim = ctx.phase_dim
    return CompletenessReport(
        ddim=ddim, dind=dind, phase_dim=phase_dim, corank=0,
        verdict=bool(ddim + dind == phase_dim), samples=samples, tolerance=tol,
        min_ddim_gap=min(gaps1) if gaps1 else None,
        min_bracket_gap=min(gaps2) if gaps2 else None,
        outliers=outliers, warnings=warnings, family=family.kind, n_members=len(family))


# -- invariant tori ---------------------------------------------------------------

def _intersection_dim(U: np.ndarray, W: np.ndarray) -> int:
    if U.shape[1] == 0 or W.shape[1] == 0:
        return 0
    both = numeric_rank(np.hstack([U, W]), 1e-9).rank
    return U.shape[1] + W.shape[1] - both


def tori_dimension_at(ctx: OrbitContext, eta) -> tuple[int, bool]:
    """dim ann(eta) - dim(ann(a) cap ann(eta)); flags eta outside ann(a)^perp as non-generic."""
    alg = ctx.algebra
    eta = np.asarray(eta, float)
    ker = ann_basis(alg, eta, ctx.kernel_tol)
    dim = ker.dim - _intersection_dim(ctx.ann_a.basis, ker.basis)
    along = alg.norm(project(alg, eta, ctx.ann_a.basis))
    generic = along <= 1e-9 * max(1.0, alg.norm(eta)) and ker.dim == alg.rank and not ker.ambiguous
    return dim, bool(generic)


@dataclass
class ToriReport:
    dimension: int
    per_sample: list
    eps_values: list
    eps_independent: bool
    outliers: list

    def to_dict(self):
        return asdict(self)


def tori_dimension(ctx: OrbitContext, eps_values=(0.0, 0.5, 1.0, 2.0), samples: int = 20,
                   seed: int = 0) -> ToriReport:
    """Predicted dimension of the invariant isotropic tori of the magnetic geodesic flow.

    Also checks dim ann(eta + eps a) = dim ann(eta) for the given eps values.
    """
    alg = ctx.algebra
    rng = np.random.default_rng(seed)
    dims, indep = [], True
    for _ in range(samples):
        eta = project(alg, rng.standard_normal(alg.dim), ctx.ann_a.basis, onto_complement=True)
        dim, _ = tori_dimension_at(ctx, eta)
        dims.append(dim)
        base = ann_basis(alg, eta, ctx.kernel_tol).dim
        for e in eps_values:
            indep &= ann_basis(alg, eta + e * ctx.a, ctx.kernel_tol).dim == base
    mode = Counter(dims).most_common(1)[0][0]
    outliers = [k for k, v in enumerate(dims) if v != mode]
    return ToriReport(mode, dims, list(eps_values), bool(indep), outliers)
