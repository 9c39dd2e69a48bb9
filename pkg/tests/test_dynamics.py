import numpy as np
import pytest

from magorbit.dynamics import (MagneticSetup, Trajectory, exact_magnetic_geodesic, fit_circle,
                               geodesic_field, integrate, measure_circle_radius, pendulum_field,
                               semidirect_field, simulate_pendulum, simulate_semidirect)
from magorbit.errors import DivergenceError, ShapeError, UnsupportedInputError
from magorbit.integrals import momentum_map, normal_hamiltonian, theta_map
from magorbit.orbit import PhasePoint, project, random_phase_point

from conftest import SU3_REGULAR_B


def test_geodesic_field_basics(su3_ctx):
    pt = random_phase_point(su3_ctx, 3)
    dx, dp = geodesic_field(su3_ctx, PhasePoint(pt.x, np.zeros(8)))
    assert not np.any(dx) and not np.any(dp)
    dx, dp = geodesic_field(su3_ctx, pt)
    ker = su3_ctx.ann(pt.x).basis
    assert su3_ctx.algebra.norm(project(su3_ctx.algebra, dx, ker)) < 1e-12


def test_pendulum_reduces_bitwise(su3_ctx):
    pt = random_phase_point(su3_ctx, 4)
    g = geodesic_field(su3_ctx, pt)
    f = pendulum_field(su3_ctx, pt, MagneticSetup(0.0, None))
    assert np.array_equal(g[0], f[0]) and np.array_equal(g[1], f[1])
    f0 = pendulum_field(su3_ctx, pt, MagneticSetup(0.0, np.zeros(8)))
    assert np.array_equal(g[1], f0[1])


def test_so3_cross_product_oracle(so3_ctx, rng):
    b = rng.standard_normal(3)
    eps, kappa = 0.6, 1.3
    pt = random_phase_point(so3_ctx, 8)
    x, p = pt.x, pt.p
    dx, dp = pendulum_field(so3_ctx, pt, MagneticSetup(eps, b, kappa))
    lam = -(p @ p) - kappa * (b @ x)      # multiplier keeping p tangent
    assert np.abs(dx - p).max() < 1e-10
    assert np.abs(dp - (kappa * b + eps * np.cross(x, p) + lam * x)).max() < 1e-10


def test_tangency_of_fields(su3_ctx):
    alg = su3_ctx.algebra
    pt = random_phase_point(su3_ctx, 21)
    dx, dp = pendulum_field(su3_ctx, pt, MagneticSetup(0.7, SU3_REGULAR_B))
    ker = su3_ctx.ann(pt.x).basis
    assert alg.norm(project(alg, dx, ker)) < 1e-10
    # d/dt <p, v(x)> = 0 for v in ann(x): <dp, v> + <p, [dx-direction] v> with v transported by ad
    # v(t) = Ad_{exp(t w)} v, where dx = [w, x]; pick w = [p, x] (dx = [x, [p, x]] = [-[p,x], x])
    w = -alg.bracket(pt.p, pt.x)
    for v in ker.T:
        dv = alg.bracket(w, v)
        assert abs(alg.inner(dp, v) + alg.inner(pt.p, dv)) < 1e-10


def test_momentum_law_field_level(su3_ctx):
    alg = su3_ctx.algebra
    pt = random_phase_point(su3_ctx, 6)
    eps = 0.7
    dx, dp = pendulum_field(su3_ctx, pt, MagneticSetup(eps, SU3_REGULAR_B))
    dphi = alg.bracket(dx, pt.p) + alg.bracket(pt.x, dp) + eps * dx
    assert np.abs(dphi - alg.bracket(pt.x, SU3_REGULAR_B)).max() < 1e-12


def test_semidirect_field(su3):
    xi = np.arange(8.0)
    assert not np.any(semidirect_field(su3, xi + 0j, SU3_REGULAR_B))


def test_semidirect_energy_conserved(su3_ctx):
    z0 = theta_map(su3_ctx.algebra, random_phase_point(su3_ctx, 2), 0.7)
    traj = simulate_semidirect(su3_ctx.algebra, z0, SU3_REGULAR_B, 10.0, 1e-3, record_every=100)
    h = traj.diagnostics["h"]
    assert np.abs(h - h[0]).max() < 1e-9


def test_integrate_zero_field_and_exact_end():
    traj = integrate(lambda y: np.zeros_like(y), np.ones(4), 1.0, 0.3)
    assert np.all(traj.states == 1.0)
    assert traj.times[-1] == pytest.approx(1.0)


def test_integrate_divergence_reports_step():
    with pytest.raises(DivergenceError) as info:
        integrate(lambda y: np.ones_like(y), np.zeros(2), 1.0, 0.1,
                  diagnostics=lambda y: {"r": float(y[0])}, residual_key="r")
    assert info.value.step == 1


def test_trajectory_validation():
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0, 0.0]), np.zeros((2, 2)))


def test_su3_constraints_and_energy(su3_pendulum_run):
    _, _, traj = su3_pendulum_run
    assert traj.diagnostics["residual"].max() < 1e-8
    H = traj.diagnostics["H"]
    assert np.abs(H - H[0]).max() / abs(H[0]) < 1e-8


def test_geodesic_energy_so3(so3_ctx):
    pt = random_phase_point(so3_ctx, 1)
    traj = simulate_pendulum(so3_ctx, pt, MagneticSetup(0.0), 10.0, 1e-3, record_every=50)
    H0 = [normal_hamiltonian(so3_ctx.algebra, q) for q in traj.phase_points()]
    assert np.ptp(H0) < 1e-8


def test_exact_geodesic_oracle(su3_ctx):
    alg = su3_ctx.algebra
    pt = random_phase_point(su3_ctx, 13)
    same = exact_magnetic_geodesic(su3_ctx, pt, 0.9, 0.0)
    assert np.array_equal(same.x, pt.x) and np.array_equal(same.p, pt.p)
    phi0 = momentum_map(alg, pt, 0.9)
    for t in (0.5, 2.0, 7.0):
        q = exact_magnetic_geodesic(su3_ctx, pt, 0.9, t)
        assert np.abs(momentum_map(alg, q, 0.9) - phi0).max() < 1e-10
    with pytest.raises(UnsupportedInputError):
        exact_magnetic_geodesic(su3_ctx, PhasePoint(pt.x, pt.p), 0.9, 1.0)


def test_great_circle_radius(so3_ctx):
    pt = PhasePoint(np.array([0.0, 0, 1]), np.array([1.0, 0, 0]), np.eye(3))
    traj = simulate_pendulum(so3_ctx, pt, MagneticSetup(0.0), 20.0, 1e-3, record_every=10)
    assert measure_circle_radius(traj) == pytest.approx(np.pi / 2, abs=1e-6)


def test_circle_fit_synthetic():
    t = np.linspace(0, 2 * np.pi, 200)
    r = 0.3
    P = np.c_[np.sin(r) * np.cos(t), np.sin(r) * np.sin(t), np.full_like(t, np.cos(r))]
    fit = fit_circle(P)
    assert fit.radius == pytest.approx(r, abs=1e-12)
    assert fit.residual < 1e-12


def test_non_circle_is_rejected(so3_ctx):
    pt = PhasePoint(np.array([1.0, 0, 0]), np.array([0, 1.0, 0]))
    traj = simulate_pendulum(so3_ctx, pt, MagneticSetup(0.3, np.array([0, 0, -2.0])), 10.0, 1e-2,
                             record_every=5)
    with pytest.raises(ShapeError):
        measure_circle_radius(traj)
