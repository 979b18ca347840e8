import numpy as np
import pytest
import scipy.linalg as la
from hypothesis import given, settings, strategies as st

from hlsim import (
    ContractViolation,
    ConvergenceError,
    ModelSpec,
    SectorOperator,
    SingularMatrixError,
    banded_solve,
    deflated_solve,
    dense_liouvillian,
    factorize,
    null_vector,
    sector_generator,
    slowest_eigenvalue,
    steady_distribution,
)
from hlsim.observables import stationary
from hlsim.sectors import sector_positions


def test_diagonal_system():
    op = SectorOperator.from_diagonals(0, {0: np.array([2.0, 4.0, 8.0])}, 3)
    sol = banded_solve(op, np.array([2.0, 2.0, 2.0]))
    np.testing.assert_allclose(sol.x, [1.0, 0.5, 0.25], rtol=1e-15)
    assert sol.residual == 0.0


def test_hand_tridiagonal():
    op = SectorOperator.from_dense(0, np.array([[4.0, 1, 0], [1, 4, 1], [0, 1, 4]]), 1, 1)
    np.testing.assert_allclose(banded_solve(op, np.array([5.0, 6, 5])).x, [1, 1, 1], rtol=1e-15)
    op2 = SectorOperator.from_dense(0, np.array([[2.0, 1, 0], [0, 3, 1], [1, 0, 1]]), 2, 1)
    # [[2,1,0],[0,3,1],[1,0,1]] x = [3,4,2] has x = [1,1,1]
    np.testing.assert_allclose(banded_solve(op2, np.array([3.0, 4, 2])).x, [1, 1, 1], rtol=1e-14)


def test_loss_seeded_sector1_residual():
    laser = stationary(ModelSpec.lam(0.0, 8))
    A, b = laser.sector1, laser.field_seed
    x = banded_solve(A, b, refine=2).x
    assert np.max(np.abs(A @ x - b)) / np.max(np.abs(b)) <= 1e-10


def test_solve_is_bitwise_deterministic():
    A = sector_generator(ModelSpec.q(-0.5, 300), 1)
    b = np.linspace(1.0, 2.0, A.size)
    x1 = banded_solve(A, b).x
    x2 = banded_solve(A, b).x
    assert x1.tobytes() == x2.tobytes()


def test_factorization_reproduces_products(rng):
    A = sector_generator(ModelSpec.q(0.4, 40), 2)
    fact = factorize(A)
    x = rng.standard_normal(A.size)
    assert fact.size == A.size and fact.bandwidth == 2
    np.testing.assert_allclose(fact.solve(A @ x).x, x, rtol=1e-10)


def test_complex_right_hand_side():
    A = sector_generator(ModelSpec.lam(0.3, 30), 1).shifted(0.2j)
    b = np.ones(A.size, dtype=complex)
    sol = banded_solve(A, b)
    np.testing.assert_allclose(A.todense() @ sol.x, b, atol=1e-10)


def test_singular_matrix_reports_pivot():
    op = SectorOperator.from_dense(0, np.array([[1.0, 2.0], [2.0, 4.0]]), 1, 1)
    with pytest.raises(SingularMatrixError) as err:
        factorize(op)
    assert err.value.pivot == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(SingularMatrixError):
        factorize(sector_generator(ModelSpec.lam(0.0, 3), 0))


@pytest.mark.parametrize("lam", [0.0, 0.25, 0.5, 1.0])
def test_null_vector_recovers_ansatz(lam):
    A = sector_generator(ModelSpec.lam(lam, 100), 0)
    v = null_vector(A, seed=np.ones(100))
    np.testing.assert_allclose(v, steady_distribution(100).probs, rtol=0, atol=1e-10)
    assert v.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.max(np.abs(A @ v)) <= 1e-10 * A.norm_inf() * np.max(np.abs(v))


def test_null_vector_q_zero():
    v = null_vector(sector_generator(ModelSpec.q(0.0, 64), 0))
    np.testing.assert_allclose(v, steady_distribution(64).probs, atol=1e-10)


def test_null_vector_q_family_approaches_ansatz():
    distances = []
    for dim in (50, 100, 200):
        v = null_vector(sector_generator(ModelSpec.q(-0.5, dim), 0), seed=steady_distribution(dim).probs)
        distances.append(np.abs(v - steady_distribution(dim).probs).sum())
    # recorded: about 2.6e-2, 1.3e-2, 6.6e-3
    assert distances[0] < 0.05
    assert distances[2] < distances[1] < distances[0]


def test_null_vector_reports_non_convergence():
    A = sector_generator(ModelSpec.q(0.5, 100), 0)
    with pytest.raises(ConvergenceError) as err:
        null_vector(A, seed=np.eye(100)[0], shift_scale=0.5, maxiter=3)
    assert err.value.iterations == 3 and err.value.residual > 0


def test_deflated_zero_rhs():
    laser = stationary(ModelSpec.lam(0.0, 8))
    sol = deflated_solve(laser.sector0, np.zeros(8), laser.rho)
    np.testing.assert_array_equal(sol.x, np.zeros(8))


def _counting_rhs(laser):
    return laser.jump(laser.rho) - laser.flux * laser.rho


def test_deflated_matches_dense_pseudo_inverse():
    model = ModelSpec.lam(0.0, 8)
    laser = stationary(model)
    b = _counting_rhs(laser)
    z = deflated_solve(laser.sector0, b, laser.rho).x
    full = dense_liouvillian(model)
    pos = sector_positions(8, 0)
    rhs = np.zeros(64)
    rhs[pos] = b
    zd = (np.linalg.pinv(full) @ rhs)[pos]
    zd = zd - zd.sum() * laser.rho
    np.testing.assert_allclose(z, zd, rtol=0, atol=1e-8 * np.max(np.abs(zd)))
    assert abs(z.sum()) <= 1e-14 * np.abs(z).sum()


@pytest.mark.parametrize("model", [ModelSpec.lam(0.5, 200), ModelSpec.q(-0.5, 300)])
def test_deflated_residual_contract(model):
    laser = stationary(model)
    sol = deflated_solve(laser.sector0, _counting_rhs(laser), laser.rho)
    assert sol.residual <= 1e-9


def test_deflated_shift_invariance():
    laser = stationary(ModelSpec.lam(0.25, 40))
    b = _counting_rhs(laser)
    A = laser.sector0
    z1 = deflated_solve(A, b, laser.rho).x
    z2 = deflated_solve(A, b + 3.0 * (A @ laser.rho), laser.rho).x
    np.testing.assert_allclose(z2, z1, atol=1e-9 * np.max(np.abs(z1)))


def test_deflated_rejects_trace():
    laser = stationary(ModelSpec.lam(0.0, 8))
    with pytest.raises(ContractViolation):
        deflated_solve(laser.sector0, laser.rho, laser.rho)


def test_slowest_eigenvalue_dense_oracle():
    A = sector_generator(ModelSpec.lam(0.0, 8), 1)
    ref = la.eigvals(A.todense())
    ref = ref[np.argmax(ref.real)]
    assert abs(slowest_eigenvalue(A) - ref) <= 1e-9 * max(1.0, abs(ref))


def test_slowest_eigenvalue_hand_2x2():
    op = SectorOperator.from_dense(1, np.array([[-1.0, 0.5], [0.0, -3.0]]), 0, 1)
    assert slowest_eigenvalue(op) == pytest.approx(-1.0, rel=1e-12)


def test_slowest_eigenvalue_non_convergence():
    with pytest.raises(ConvergenceError):
        slowest_eigenvalue(sector_generator(ModelSpec.lam(0.0, 200), 1), maxiter=2)


def test_condition_grows_with_dimension():
    conds, residuals = [], []
    for dim in (50, 100, 200, 400):
        laser = stationary(ModelSpec.lam(0.0, dim))
        conds.append(laser.fact1.condition_estimate())
        residuals.append(laser.fact1.solve(laser.field_seed).residual)
    assert all(b > a for a, b in zip(conds, conds[1:])), conds
    assert max(residuals) <= 1e-9


@settings(max_examples=40, deadline=None)
@given(dim=st.integers(8, 300), lam=st.floats(0.0, 1.0))
def test_slowest_eigenvalue_is_negative(dim, lam):
    assert slowest_eigenvalue(sector_generator(ModelSpec.lam(lam, dim), 1)).real < 0
