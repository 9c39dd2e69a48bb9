import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from magorbit.errors import ConfigurationError, InputError
from magorbit.liealg import (LieAlgebraSpec, algebra_from_dict, algebra_from_json, algebra_to_dict,
                             char_coefficients, so, su)

SHIPPED = [("so", 3), ("so", 4), ("so", 5), ("su", 2), ("su", 3), ("su", 4)]
RANKS = {("so", 3): 1, ("so", 4): 2, ("so", 5): 2, ("su", 2): 1, ("su", 3): 2, ("su", 4): 3}


def build(fam, n):
    return so(n) if fam == "so" else su(n)


@pytest.fixture(scope="module", params=SHIPPED, ids=lambda p: f"{p[0]}{p[1]}")
def alg(request):
    return build(*request.param)


def test_structure_residuals(alg):
    assert alg.jacobi_residual() < 1e-12
    assert alg.antisymmetry_residual() == 0 or alg.antisymmetry_residual() < 1e-15
    assert alg.ad_invariance_residual() < 1e-12


def test_gram_is_spd_with_unit_min_diagonal(alg):
    G = alg.gram
    assert np.allclose(G, G.T)
    assert np.linalg.eigvalsh(G).min() > 0
    assert np.isclose(np.diag(G).min(), 1.0)


@pytest.mark.parametrize("key,r", sorted(RANKS.items()))
def test_rank(key, r):
    assert build(*key).rank == r


def test_so3_cross_product(so3):
    e = np.eye(3)
    assert np.allclose(so3.bracket(e[0], e[1]), e[2])
    x, y = np.array([0.3, -1.2, 0.7]), np.array([2.0, 0.1, -0.4])
    assert np.allclose(so3.bracket(x, y), np.cross(x, y), atol=1e-15)
    assert so3.inner(e[0], e[0]) == pytest.approx(1.0)


def test_bracket_matches_matrix_commutator(alg, rng):
    worst = 0.0
    for _ in range(1000):
        x, y = rng.standard_normal((2, alg.dim))
        X, Y = alg.matrix(x), alg.matrix(y)
        worst = max(worst, np.abs(alg.bracket(x, y) - alg.coords(X @ Y - Y @ X)).max())
    assert worst < 1e-12


def test_bracket_dimension_mismatch(su3):
    with pytest.raises(InputError):
        su3.bracket(np.ones(3), np.ones(8))


def test_inner_ad_invariant(alg, rng):
    for _ in range(20):
        x, y, z = rng.standard_normal((3, alg.dim))
        lhs = alg.inner(alg.bracket(z, x), y) + alg.inner(x, alg.bracket(z, y))
        assert abs(lhs) < 1e-12
        assert alg.inner(x, x) > 0


def test_ad_operator(alg, rng):
    assert not np.any(alg.ad_operator(np.zeros(alg.dim)))
    x, y = rng.standard_normal((2, alg.dim))
    assert np.allclose(alg.ad_operator(x) @ y, alg.bracket(x, y), atol=1e-14)
    assert abs(np.trace(alg.ad_operator(x))) < 1e-13
    E = np.eye(alg.dim)
    A = alg.ad_operator(x)
    for k in range(alg.dim):
        assert np.allclose(A[:, k], alg.bracket(x, E[k]), atol=1e-15)


def test_so3_ad_kernel(so3):
    s = np.linalg.svd(so3.ad_operator(np.array([0, 0, 1.0])))
    assert np.allclose(np.abs(s[2][-1]), [0, 0, 1])


def test_group_adjoint(so3, alg, rng):
    e = np.eye(3)
    assert np.allclose(so3.group_adjoint(e[2], np.pi / 2, e[0]), e[1], atol=1e-12)
    xi, y = rng.standard_normal((2, alg.dim))
    assert np.array_equal(alg.group_adjoint(xi, 0.0, y), y)
    z = alg.group_adjoint(xi, 0.8, y)
    assert alg.inner(z, z) == pytest.approx(alg.inner(y, y), abs=1e-12)
    assert np.abs(alg.poly_values(z) - alg.poly_values(y)).max() < 1e-10


def test_invariant_polynomials(alg, rng):
    polys = alg.invariant_polynomials
    assert len(polys) == alg.rank
    x, xi = rng.standard_normal((2, alg.dim))
    z = alg.group_adjoint(xi, 1.0, x)
    assert np.abs(alg.poly_values(x) - alg.poly_values(z)).max() < 1e-10
    J = alg.poly_grads(x).real
    assert np.linalg.matrix_rank(J, tol=1e-9 * np.abs(J).max()) == alg.rank


def test_degrees():
    assert [p.degree for p in so(3).invariant_polynomials] == [2]
    assert [p.degree for p in su(3).invariant_polynomials] == [2, 3]


def test_so3_quadratic_invariant_is_norm(so3, rng):
    x = rng.standard_normal(3)
    unit = so3.poly_values(np.array([1.0, 0, 0]))[0].real
    assert so3.poly_values(x)[0].real == pytest.approx(unit * so3.inner(x, x), rel=1e-13)


def test_exact_poly_gradients_match_fd(alg, rng):
    z = rng.standard_normal(alg.dim) + 1j * rng.standard_normal(alg.dim)
    G = alg.poly_grads(z)
    h = 1e-6
    for m in range(alg.dim):
        dz = np.zeros(alg.dim)
        dz[m] = h
        fd = (alg.poly_values(z + dz) - alg.poly_values(z - dz)) / (2 * h)
        assert np.abs(fd - G[:, m]).max() < 1e-7 * max(1, np.abs(G).max())


def test_char_coefficients_small():
    Z = np.diag([1.0, 2.0, 3.0]).astype(complex)
    assert np.allclose(char_coefficients(Z, 3), [6, 11, 6])


def test_theta_bracket(su3, rng):
    xi1, eta1, xi2, eta2 = rng.standard_normal((4, 8))
    z1, z2 = xi1 + 1j * eta1, xi2 + 1j * eta2
    out = su3.theta_bracket(z1, z2)
    assert np.array_equal(out.real, su3.bracket(xi1, xi2))
    assert np.allclose(out.imag, su3.bracket(eta1, xi2) + su3.bracket(xi1, eta2))
    assert not np.any(su3.theta_bracket(1j * eta1, 1j * eta2))
    assert np.abs(su3.theta_bracket(z1, z1)).max() < 1e-15


def test_lie_poisson_kinds(su3, rng):
    mu = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    gf = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    gg = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    b = rng.standard_normal(8)
    for kind in ("g0", "gtheta", "ib"):
        assert abs(su3.lie_poisson(kind, mu, gf, gf, b)) < 1e-14
        assert su3.lie_poisson(kind, mu, gf, gg, b) == pytest.approx(-su3.lie_poisson(kind, mu, gg, gf, b))
    # functions of eta only: gradient -i grad_eta
    assert abs(su3.lie_poisson("gtheta", mu, -1j * gf.imag, -1j * gg.imag)) < 1e-14
    diff = su3.lie_poisson("g0", mu, gf, gg) - su3.lie_poisson("gtheta", mu, gf, gg)
    Fy, Gy = -gf.imag, -gg.imag
    assert diff == pytest.approx(-su3.inner(mu.real, su3.bracket(Fy, Gy)), abs=1e-12)
    with pytest.raises(InputError):
        su3.lie_poisson("ib", mu, gf, gg)


def _quadratic(d, rng):
    Q = rng.standard_normal((2 * d, 2 * d))
    Q = Q + Q.T
    c = rng.standard_normal(2 * d)

    def f(v):
        return 0.5 * v @ Q @ v + c @ v

    def grad(v):
        g = Q @ v + c
        return g[:d] - 1j * g[d:]
    return f, grad


def test_gtheta_jacobi_identity(su3, rng):
    d = su3.dim
    fs = [_quadratic(d, rng) for _ in range(3)]

    def pb(F, G):
        def val(v):
            mu = v[:d] + 1j * v[d:]
            # partials -> gradient (gram is the identity for shipped bases)
            return su3.lie_poisson("gtheta", mu, F[1](v), G[1](v))

        def grad(v, h=1e-4):
            out = np.zeros(2 * d)
            for k in range(2 * d):
                e = np.zeros(2 * d)
                e[k] = h
                d1 = (val(v + e) - val(v - e)) / (2 * h)
                d2 = (val(v + 2 * e) - val(v - 2 * e)) / (4 * h)
                out[k] = (4 * d1 - d2) / 3
            return out[:d] - 1j * out[d:]
        return val, grad

    v = rng.standard_normal(2 * d)
    mu = v[:d] + 1j * v[d:]
    total = 0.0
    for A, B, C in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        BC = pb(fs[B], fs[C])
        total += su3.lie_poisson("gtheta", mu, fs[A][1](v), BC[1](v))
    assert abs(total) < 1e-8


def test_invalid_basis_rejected():
    S = [np.array([[1.0, 0], [0, -1]]), np.array([[0, 1.0], [1, 0]])]
    with pytest.raises(ConfigurationError):
        LieAlgebraSpec("bad", S)


def test_algebra_json_round_trip(su3):
    assert algebra_from_dict({"family": "su", "n": 3}).dim == 8
    doc = {"basis": [[[[float(v.real), float(v.imag)] for v in row] for row in M] for M in su3.basis]}
    custom = algebra_from_dict(doc)
    assert np.allclose(custom.structure_constants, su3.structure_constants)
    assert algebra_from_json('{"family": "so", "n": 4}').dim == 6
    assert algebra_to_dict(su3) == {"family": "su", "n": 3}
    with pytest.raises(ConfigurationError):
        algebra_from_dict({"family": "sp", "n": 2})


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=6, max_size=6))
def test_bracket_antisymmetric_property(vals):
    alg = so(3)
    x, y = np.array(vals[:3]), np.array(vals[3:])
    assert np.allclose(alg.bracket(x, y), -alg.bracket(y, x), atol=1e-13)
    assert np.abs(alg.bracket(x, x)).max() <= 1e-14 * (1 + x @ x)
