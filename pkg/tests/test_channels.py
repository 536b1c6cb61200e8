import warnings

import numpy as np
import pytest
from helpers import random_channel
from hypothesis import given
from hypothesis import strategies as st

from grouprb.channels import (
    NOISE_KINDS,
    DeltaCovariant,
    DepolarizeToState,
    IdentityNoise,
    RandomIsometry,
    Superoperator,
    UnitaryConjugation,
    adjoint_channel,
    apply,
    average_fidelity,
    basis_state,
    check_density,
    choi,
    entanglement_fidelity,
    entanglement_fidelity_choi,
    haar_unitary,
    make_noise,
    max_entangled,
    random_density,
    random_isometry,
    sequence_fidelity,
    superop_compose,
    superop_power,
    unvec,
    vec,
)
from grouprb.errors import InfeasibleSizeError
from grouprb.groups import mu_sample_uniform
from grouprb.twirl import depolarizing_channel


def completely_depolarizing(d):
    return depolarizing_channel(d, 0.0)


def test_vec_is_column_stacking():
    x = np.arange(6).reshape(2, 3)[:, :2]
    np.testing.assert_array_equal(vec(x), [0, 3, 1, 4])
    np.testing.assert_array_equal(unvec(vec(x), 2), x)


def test_vec_identity_for_products(rng):
    a, x, b = (rng.standard_normal((3, 3)) for _ in range(3))
    np.testing.assert_allclose(vec(a @ x @ b), np.kron(b.T, a) @ vec(x), atol=1e-12)


# --- states ------------------------------------------------------------------


def test_max_entangled_qubit():
    omega = max_entangled(2)
    expected = np.zeros((4, 4))
    for i in (0, 3):
        for j in (0, 3):
            expected[i, j] = 0.5
    np.testing.assert_allclose(omega, expected)


@pytest.mark.parametrize("d", [2, 3, 5])
def test_max_entangled_is_pure(d):
    omega = max_entangled(d)
    assert abs(np.trace(omega) - 1) < 1e-12
    assert abs(np.trace(omega @ omega) - 1) < 1e-12


def test_random_density_valid_and_seeded():
    for d in (2, 3, 6):
        check_density(random_density(d, np.random.default_rng(d)))
    a = random_density(4, np.random.default_rng(1))
    b = random_density(4, np.random.default_rng(1))
    np.testing.assert_array_equal(a, b)


def test_random_density_mean_is_maximally_mixed():
    rng = np.random.default_rng(99)
    d, n = 3, 10_000
    draws = np.stack([random_density(d, rng) for _ in range(n)])
    mean = draws.mean(axis=0)
    se = np.sqrt(draws.real.var(axis=0) / n) + 1j * np.sqrt(draws.imag.var(axis=0) / n)
    target = np.eye(d) / d
    assert np.all(np.abs((mean - target).real) <= 5 * se.real + 1e-15)
    assert np.all(np.abs((mean - target).imag) <= 5 * se.imag + 1e-15)


def test_check_density_rejects():
    with pytest.raises(ValueError):
        check_density(np.eye(2))
    with pytest.raises(ValueError):
        check_density(np.array([[1.5, 0], [0, -0.5]]))


def test_random_isometry_orthonormal(rng):
    v = random_isometry(3, rng)
    assert v.shape == (9, 3)
    assert np.max(np.abs(v.conj().T @ v - np.eye(3))) < 1e-12


# --- Choi and fidelities -----------------------------------------------------


def test_choi_identity_is_max_entangled():
    np.testing.assert_allclose(choi(Superoperator.identity(3)), max_entangled(3), atol=1e-15)


def test_choi_completely_depolarizing():
    d = 3
    np.testing.assert_allclose(choi(completely_depolarizing(d)), np.eye(d * d) / d**2, atol=1e-15)


def test_choi_depolarize_to_state(rng):
    d, p = 3, 0.7
    sigma = random_density(d, rng)
    expected = p * max_entangled(d) + (1 - p) * np.kron(sigma, np.eye(d) / d)
    np.testing.assert_allclose(choi(DepolarizeToState(p, sigma)), expected, atol=1e-12)


def test_choi_by_definition(rng):
    # (T x id) applied column by column to |Omega><Omega|
    d = 2
    t = random_channel(d, rng)
    out = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            eij = np.zeros((d, d))
            eij[i, j] = 1
            out += np.kron(t.apply(eij), eij) / d
    np.testing.assert_allclose(choi(t), out, atol=1e-12)


def test_choi_warns_on_non_channel():
    with pytest.warns(UserWarning):
        choi(Superoperator(2 * np.eye(4), 2))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        choi(Superoperator.identity(2))


def test_entanglement_fidelity_examples(rng):
    assert entanglement_fidelity(Superoperator.identity(4)) == pytest.approx(1, abs=1e-15)
    d, p = 3, 0.8
    f = entanglement_fidelity(DepolarizeToState(p, random_density(d, rng)))
    assert f == pytest.approx((p * (d * d - 1) + 1) / d**2, abs=1e-12)
    assert entanglement_fidelity(completely_depolarizing(5)) == pytest.approx(1 / 25, abs=1e-12)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_entanglement_fidelity_two_routes(d):
    """tr(S)/d^2 against <Omega|Choi|Omega> on 100 random channels."""
    rng = np.random.default_rng(d)
    for _ in range(100):
        t = random_channel(d, rng)
        assert abs(entanglement_fidelity(t) - entanglement_fidelity_choi(t)) < 1e-10


def test_unitary_entanglement_fidelity(rng):
    for d in (2, 3, 4):
        u = haar_unitary(d, rng)
        assert entanglement_fidelity(UnitaryConjugation(u)) == pytest.approx(
            abs(np.trace(u)) ** 2 / d**2, abs=1e-12
        )


def test_average_fidelity():
    assert average_fidelity(1.0, 2) == 1
    assert average_fidelity(0.925, 2) == pytest.approx(0.95, abs=1e-15)
    assert average_fidelity(1 / 100**2, 100) == pytest.approx(1 / 100, rel=2e-2)


# --- superoperator algebra ---------------------------------------------------


def test_power_zero_is_identity(rng):
    t = random_channel(2, rng)
    np.testing.assert_array_equal(superop_power(t, 0).matrix, np.eye(4))
    np.testing.assert_allclose(t.power(3).matrix, (t @ t @ t).matrix, atol=1e-12)
    with pytest.raises(ValueError):
        superop_power(t, -1)


def test_compose_dimension_mismatch():
    with pytest.raises(ValueError):
        superop_compose(Superoperator.identity(2), Superoperator.identity(3))


def test_compose_order(rng):
    a, b = random_channel(2, rng), random_channel(2, rng)
    rho = random_density(2, rng)
    np.testing.assert_allclose((a @ b).apply(rho), a.apply(b.apply(rho)), atol=1e-12)


def test_adjoint_channel(rng):
    g = mu_sample_uniform(3, 8, rng)
    u = g.to_unitary()
    rho = random_density(3, rng)
    fwd, back = adjoint_channel(g, "forward"), adjoint_channel(g, "adjoint")
    np.testing.assert_allclose(apply(fwd, rho), u @ rho @ u.conj().T, atol=1e-12)
    np.testing.assert_allclose((back @ fwd).matrix, np.eye(9), atol=1e-10)
    with pytest.raises(ValueError):
        adjoint_channel(g, "sideways")


def test_dense_cap():
    with pytest.raises(InfeasibleSizeError):
        IdentityNoise(65).superoperator()


# --- noise models ------------------------------------------------------------


def test_depolarize_spectrum():
    s = DepolarizeToState(0.9, np.eye(2) / 2).superoperator()
    ev = np.sort(np.linalg.eigvals(s.matrix).real)
    np.testing.assert_allclose(ev, [0.9, 0.9, 0.9, 1.0], atol=1e-12)


def test_delta_zero_is_covariant_part(rng):
    tc = DepolarizeToState(0.8, np.eye(3) / 3)
    tn = RandomIsometry(0.1, random_isometry(3, rng))
    np.testing.assert_array_equal(DeltaCovariant(0.0, tc, tn).superoperator().matrix, tc.superoperator().matrix)


def test_noise_parameter_checks(rng):
    with pytest.raises(ValueError):
        DepolarizeToState(1.2, np.eye(2) / 2)
    with pytest.raises(ValueError):
        RandomIsometry(-0.1, random_isometry(2, rng))
    with pytest.raises(ValueError):
        RandomIsometry(0.5, np.ones((4, 2)))
    with pytest.raises(ValueError):
        make_noise("random_isometry", 2, rng, p=2.0)
    with pytest.raises(ValueError):
        make_noise("delta_covariant", 2, rng, delta=-1)
    with pytest.raises(ValueError):
        make_noise("bogus", 2, rng)
    with pytest.raises(ValueError):
        make_noise("x_rotation", 3, rng)


@pytest.mark.parametrize("kind", NOISE_KINDS)
@pytest.mark.parametrize("d", [2, 4])
def test_every_noise_is_a_channel(kind, d):
    rng = np.random.default_rng(5)
    for _ in range(5):
        noise = make_noise(kind, d, rng, p=rng.uniform(), delta=rng.uniform(), a=0.4)
        s = noise.superoperator()
        assert s.is_trace_preserving() and s.is_completely_positive()


@pytest.mark.parametrize("kind", NOISE_KINDS)
def test_state_path_matches_superoperator(kind):
    rng = np.random.default_rng(11)
    noise = make_noise(kind, 4, rng, p=0.7, delta=0.3, a=0.3)
    rhos = np.stack([random_density(4, rng) for _ in range(3)])
    np.testing.assert_allclose(noise.apply(rhos), noise.superoperator().apply(rhos), atol=1e-10)


def test_make_noise_deterministic():
    a = make_noise("random_isometry", 3, np.random.default_rng(4), p=0.9)
    b = make_noise("random_isometry", 3, np.random.default_rng(4), p=0.9)
    np.testing.assert_array_equal(a.isometry, b.isometry)


# --- sequence fidelity -------------------------------------------------------


def test_sequence_fidelity_examples():
    e0 = basis_state(2)
    assert sequence_fidelity(e0, e0, []) == 1
    assert sequence_fidelity(e0, e0, [completely_depolarizing(2)]) == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(ValueError):
        sequence_fidelity(e0, e0, [Superoperator.identity(3)])


@given(st.integers(0, 2**32 - 1), st.integers(2, 4), st.integers(0, 5))
def test_sequence_fidelity_two_routes(seed, d, length):
    rng = np.random.default_rng(seed)
    rho = random_density(d, rng)
    effect = random_density(d, rng)
    effect = effect / np.linalg.eigvalsh(effect).max()
    ops = [random_channel(d, rng) for _ in range(length)]
    total = Superoperator.identity(d)
    for op in ops:
        total = op @ total
    direct = np.real(vec(effect.T) @ total.matrix @ vec(rho))
    value = sequence_fidelity(rho, effect, ops)
    assert abs(value - direct) < 1e-10
    assert -1e-9 <= value <= 1 + 1e-9
