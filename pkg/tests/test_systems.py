"""Model definitions: Jacobians, exact solutions, eigenstructure."""

import numpy as np
import pytest

from aderfv.systems import (
    conserved_to_primitive,
    euler_ideal_gas,
    leveque_yee,
    linear_ck_matrices,
    linear_system,
    noncons_system,
    primitive_to_conserved,
    scalar_advection_reaction,
)

ALL_FACTORIES = [
    scalar_advection_reaction,
    leveque_yee,
    linear_system,
    noncons_system,
    euler_ideal_gas,
]


def _random_states(system, rng, count):
    """Draw admissible states roughly centred on the system's initial data."""
    x = rng.uniform(0.0, 1.0, size=count)
    base = system.initial_condition(x)
    states = base * (1.0 + 0.2 * rng.standard_normal(base.shape))
    if system.admissible is not None:
        keep = np.array([system.admissible(q) for q in states])
        states = states[keep]
    return states


@pytest.mark.parametrize("factory", ALL_FACTORIES)
def test_source_jacobian_matches_finite_differences(factory):
    system = factory()
    rng = np.random.default_rng(42)
    states = _random_states(system, rng, 140)[:100]
    assert len(states) >= 80
    h = 1e-7
    for q in states:
        jac = system.source_jacobian(q)
        fd = np.empty((system.m, system.m))
        for j in range(system.m):
            dq = np.zeros(system.m)
            dq[j] = h * (1.0 + abs(q[j]))
            fd[:, j] = (system.source(q + dq) - system.source(q - dq)) / (2 * dq[j])
        scale = 1.0 + np.max(np.abs(jac))
        assert np.max(np.abs(jac - fd)) / scale < 1e-6


@pytest.mark.parametrize("factory", ALL_FACTORIES)
def test_matrix_rows_agree_with_matrix(factory):
    system = factory()
    if system.matrix_rows is None:
        pytest.skip("no row callbacks registered")
    rng = np.random.default_rng(3)
    for q in _random_states(system, rng, 10):
        a = system.matrix(q)
        rows = np.array(system.matrix_rows(q), dtype=float)
        np.testing.assert_allclose(rows, a, atol=1e-13)


@pytest.mark.parametrize("factory", [scalar_advection_reaction, linear_system, euler_ideal_gas])
def test_flux_jacobian_is_matrix(factory):
    # For the conservative models the quasilinear matrix must be dF/dq.
    system = factory()
    assert system.flux_terms is not None
    rng = np.random.default_rng(7)
    h = 1e-7
    for q in _random_states(system, rng, 20):
        a = system.matrix(q)
        fd = np.empty((system.m, system.m))
        for j in range(system.m):
            dq = np.zeros(system.m)
            dq[j] = h * (1.0 + abs(q[j]))
            fp = np.array([t for t in system.flux_terms(q + dq)], dtype=float)
            fm = np.array([t for t in system.flux_terms(q - dq)], dtype=float)
            fd[:, j] = (fp - fm) / (2 * dq[j])
        assert np.max(np.abs(a - fd)) / (1.0 + np.max(np.abs(a))) < 1e-6


def _pde_residual(system, x, t, h):
    """Central-difference residual of q_t + A(q) q_x - S(q) at one point."""

    def q(xx, tt):
        return system.exact_solution(np.array([xx]), tt)[0]

    qt = (q(x, t + h) - q(x, t - h)) / (2 * h)
    qx = (q(x + h, t) - q(x - h, t)) / (2 * h)
    q0 = q(x, t)
    return qt + system.matrix(q0) @ qx - system.source(q0)


@pytest.mark.parametrize(
    "factory", [scalar_advection_reaction, linear_system, noncons_system, euler_ideal_gas]
)
def test_exact_solution_satisfies_pde(factory):
    # Residual of the registered exact solution must vanish at O(h^2).
    system = factory()
    pts = [(0.13, 0.21), (0.41, 0.05), (0.77, 0.33)]
    for x, t in pts:
        r1 = np.max(np.abs(_pde_residual(system, x, t, 1e-4)))
        r2 = np.max(np.abs(_pde_residual(system, x, t, 5e-5)))
        assert r1 < 1e-5
        # halving h must shrink the residual about fourfold (unless it is
        # already at roundoff, as for constant-velocity profiles)
        assert r2 < max(0.4 * r1, 5e-12)


@pytest.mark.parametrize("factory", ALL_FACTORIES)
def test_exact_solution_matches_initial_condition(factory):
    system = factory()
    if system.exact_solution is None:
        pytest.skip("no exact solution registered")
    x = np.linspace(0.0, 1.0, 17)
    np.testing.assert_allclose(
        system.exact_solution(x, 0.0), system.initial_condition(x), atol=1e-13
    )


def test_euler_eigenvalues():
    system = euler_ideal_gas(gamma=1.4)
    rng = np.random.default_rng(11)
    for q in _random_states(system, rng, 30):
        lam = np.sort(system.eigenvalues(q))
        ref = np.sort(np.linalg.eigvals(system.matrix(q)).real)
        np.testing.assert_allclose(lam, ref, atol=1e-12, rtol=1e-12)
        rho, u, p = conserved_to_primitive(q, 1.4)
        a = np.sqrt(1.4 * p / rho)
        np.testing.assert_allclose(lam, np.sort([u - a, u, u + a]), atol=1e-12)


def test_primitive_conserved_roundtrip():
    rng = np.random.default_rng(5)
    rho = rng.uniform(0.1, 3.0, size=50)
    u = rng.uniform(-2.0, 2.0, size=50)
    p = rng.uniform(0.1, 5.0, size=50)
    q = primitive_to_conserved(rho, u, p, gamma=1.4)
    back = conserved_to_primitive(q, gamma=1.4)
    np.testing.assert_allclose(back, np.stack([rho, u, p], axis=-1), rtol=1e-13)


def test_stiff_source_shape():
    # beta q (q - 1) (q - 1/2) with beta = -1000: equilibria at 0, 1/2, 1 and
    # a push toward 1 from above the unstable middle state.
    system = leveque_yee(beta=-1000.0)
    for q0 in (0.0, 0.5, 1.0):
        assert system.source(np.array([q0]))[0] == pytest.approx(0.0, abs=1e-12)
    assert system.source(np.array([0.75]))[0] == pytest.approx(46.875)
    assert system.source(np.array([0.25]))[0] < 0.0


def test_leveque_yee_initial_step():
    system = leveque_yee(step_position=0.3)
    x = np.array([0.0, 0.29, 0.31, 1.0])
    np.testing.assert_allclose(system.initial_condition(x)[:, 0], [1.0, 1.0, 0.0, 0.0])


def test_noncons_admissibility_guard():
    system = noncons_system()
    assert system.admissible(np.array([1.0, 2.0]))
    assert not system.admissible(np.array([-0.1, 2.0]))


def test_max_wave_speed():
    scalar = scalar_advection_reaction(lam=2.5)
    g = np.linspace(0.0, 1.0, 9)
    states = scalar.initial_condition(g)
    assert scalar.max_wave_speed(states) == pytest.approx(2.5)

    euler = euler_ideal_gas()
    q = primitive_to_conserved(1.0, 1.0, 1.0, gamma=1.4)
    assert euler.max_wave_speed(q[None, :]) == pytest.approx(1.0 + np.sqrt(1.4))


def _time_derivative_tables_oracle(a, b, order):
    """Spatial-derivative chains of d_t^k q for q_t = b q - a q_x.

    Row recursion on symbols: if G holds the spatial derivatives of
    d_t^(k) q then the next level is G'_j = b G_j - a G_(j+1).
    """
    m = a.shape[0]
    # coeffs[k][j] multiplies the j-th spatial derivative of q
    coeffs = [{0: np.eye(m)}]
    for _ in range(order):
        nxt = {}
        for j, mat in coeffs[-1].items():
            nxt[j] = nxt.get(j, 0) + b @ mat
            nxt[j + 1] = nxt.get(j + 1, 0) - a @ mat
        coeffs.append(nxt)
    return coeffs


def test_linear_ck_matrix_recursion():
    rng = np.random.default_rng(17)
    a = rng.standard_normal((3, 3))
    b = rng.standard_normal((3, 3))  # deliberately non-commuting
    order = 4
    mats = linear_ck_matrices(a, b, order)
    oracle = _time_derivative_tables_oracle(a, b, order)
    for k in range(1, order + 1):
        for j in range(k + 1):
            np.testing.assert_allclose(mats[k - 1, j], oracle[k][j], atol=1e-12)
