import math

import numpy as np
import pytest
from helpers import random_channel

from grouprb.channels import (
    NOISE_KINDS,
    DepolarizeToState,
    IdentityNoise,
    basis_state,
    make_noise,
    random_density,
)
from grouprb.errors import UnsupportedSamplingError
from grouprb.fitting import fit_decay, samples_from_arrays
from grouprb.groups import (
    PHASE,
    CliffordGroup,
    GeneratorSet,
    MonomialElement,
    MonomialGroup,
    cl_canonicalize,
)
from grouprb.rb import (
    RBConfig,
    exact_expectation_curve,
    hoeffding_bound,
    run_approx_rb,
    run_generator_rb,
    run_rb,
    run_standard_rb,
    twirl_closed_form,
)
from grouprb.twirl import exact_twirl, isolating_direction

MU28 = MonomialGroup(2, 8)
MU24 = MonomialGroup(2, 4)
C1 = CliffordGroup(1)


def oracle_gap(run, curve):
    """Largest deviation of the Monte-Carlo means in units of their standard error."""
    return float(np.max(np.abs(run.means - curve) / np.maximum(run.std_errs, 1e-15)))


@pytest.mark.parametrize("sampling", ["exact_haar", "walk", "generator"])
@pytest.mark.parametrize("group", [MU24, C1, MonomialGroup(3, 4)], ids=repr)
def test_identity_noise_gives_one(group, sampling):
    cfg = RBConfig(group, IdentityNoise(group.d), [1, 3, 7], 50, sampling=sampling, walk_length=4, burn_in=3)
    run = run_rb(cfg)
    np.testing.assert_allclose(run.fidelities, 1.0, atol=1e-12)


def test_identity_noise_telescopes_for_any_state(rng):
    rho = random_density(3, rng)
    effect = np.diag([0.2, 0.9, 0.5]).astype(complex)
    cfg = RBConfig(MonomialGroup(3, 4), IdentityNoise(3), [2, 5], 40, rho=rho, effect=effect)
    np.testing.assert_allclose(run_rb(cfg).fidelities, np.trace(rho @ effect).real, atol=1e-12)


def test_standard_rb_matches_depolarizing_formula():
    """MU(2,8), depolarizing to I/2: means follow 1/2 + 0.9^(m+1)/2."""
    ms = list(range(1, 11))
    cfg = RBConfig(MU28, DepolarizeToState(0.9, np.eye(2) / 2), ms, 10_000, master_seed=3)
    run = run_standard_rb(cfg)
    expected = 0.5 + 0.9 ** (np.array(ms) + 1) / 2
    # this noise is covariant, every sequence gives the same value
    np.testing.assert_allclose(run.means, expected, atol=1e-12)


@pytest.mark.parametrize("kind", NOISE_KINDS)
def test_oracle_every_noise_kind(kind):
    rng = np.random.default_rng(NOISE_KINDS.index(kind))
    noise = make_noise(kind, 2, rng, p=0.85, delta=0.2, a=0.4)
    ms = [1, 2, 5, 10, 20]
    for group in (MU24, C1):
        run = run_standard_rb(RBConfig(group, noise, ms, 2000, master_seed=11))
        curve = exact_expectation_curve(noise, group, basis_state(2), basis_state(2), ms)
        if np.all(run.std_errs < 1e-14):
            np.testing.assert_allclose(run.means, curve, atol=1e-10)
        else:
            assert oracle_gap(run, curve) < 5


def test_thread_count_independence():
    noise = make_noise("random_isometry", 2, np.random.default_rng(0), p=0.9)
    for group in (MU28, C1):
        base = dict(group=group, noise=noise, m_values=[1, 4, 9], M=600, master_seed=5)
        one = run_rb(RBConfig(**base, workers=1))
        four = run_rb(RBConfig(**base, workers=4))
        np.testing.assert_array_equal(one.fidelities, four.fidelities)


def test_seed_determinism_and_sensitivity():
    noise = make_noise("random_isometry", 2, np.random.default_rng(0), p=0.9)
    a = run_rb(RBConfig(C1, noise, [3], 100, master_seed=1))
    b = run_rb(RBConfig(C1, noise, [3], 100, master_seed=1))
    c = run_rb(RBConfig(C1, noise, [3], 100, master_seed=2))
    np.testing.assert_array_equal(a.fidelities, b.fidelities)
    assert not np.array_equal(a.fidelities, c.fidelities)


def test_fidelities_in_unit_interval():
    noise = make_noise("random_isometry", 2, np.random.default_rng(4), p=0.5)
    run = run_rb(RBConfig(C1, noise, [1, 5, 20], 300, sampling="walk", walk_length=3))
    assert run.fidelities.min() >= -1e-9 and run.fidelities.max() <= 1 + 1e-9
    np.testing.assert_allclose(run.means, run.fidelities.mean(axis=1))


def test_singleton_identity_walk(rng):
    noise = random_channel(2, rng)
    e = MonomialElement.identity_of(2, 4)
    gens = GeneratorSet.from_elements([e], lazy=False)
    ms = [0, 1, 2, 5]
    run = run_approx_rb(RBConfig(MU24, noise, ms, 5, sampling="walk", walk_length=1, generators=gens))
    rho = effect = basis_state(2)
    expected = [np.trace(noise.power(m + 1).apply(rho) @ effect).real for m in ms]
    np.testing.assert_allclose(run.fidelities, np.array(expected)[:, None] * np.ones((1, 5)), atol=1e-12)


def test_generator_rb_needs_inverse_closure():
    s = cl_canonicalize(PHASE)
    gens = GeneratorSet([s], closed_under_inversion=False)
    with pytest.raises(ValueError, match="inversion"):
        RBConfig(C1, IdentityNoise(2), [1], 10, sampling="generator", generators=gens)


def test_generator_rb_oracle_for_covariant_noise():
    # depolarizing noise commutes with every gate, so generator RB is exact
    noise = DepolarizeToState(0.9, np.eye(2) / 2)
    ms, burn_in = [1, 2, 3, 4, 5], 5
    run = run_generator_rb(RBConfig(C1, noise, ms, 20, sampling="generator", burn_in=burn_in))
    # the burn-in gates carry noise too, shifting the curve by burn_in steps
    curve = exact_expectation_curve(noise, C1, basis_state(2), basis_state(2), [m + burn_in for m in ms])
    np.testing.assert_allclose(run.means, curve, atol=1e-12)


def test_protocol_entry_points_check_mode():
    cfg = RBConfig(MU24, IdentityNoise(2), [1], 2)
    with pytest.raises(ValueError):
        run_approx_rb(cfg)
    with pytest.raises(ValueError):
        run_generator_rb(cfg)
    with pytest.raises(ValueError):
        run_standard_rb(RBConfig(MU24, IdentityNoise(2), [1], 2, sampling="walk"))


def test_config_validation():
    with pytest.raises(ValueError):
        RBConfig(MU24, IdentityNoise(3), [1], 2)
    with pytest.raises(ValueError):
        RBConfig(MU24, IdentityNoise(2), [], 2)
    with pytest.raises(ValueError):
        RBConfig(MU24, IdentityNoise(2), [1], 0)
    with pytest.raises(ValueError):
        RBConfig(MU24, IdentityNoise(2), [1], 2, sampling="psychic")


def test_clifford_exact_sampling_unsupported_beyond_two_qubits():
    cfg = RBConfig(CliffordGroup(3), IdentityNoise(8), [1], 2)
    with pytest.raises(UnsupportedSamplingError, match="walk"):
        run_standard_rb(cfg)


# --- oracle ------------------------------------------------------------------


def test_curve_identity_noise(rng):
    rho, effect = random_density(2, rng), basis_state(2, 1)
    curve = exact_expectation_curve(IdentityNoise(2), MU24, rho, effect, [0, 1, 5])
    np.testing.assert_allclose(curve, np.trace(rho @ effect).real, atol=1e-12)


def test_curve_at_zero_length(rng):
    t = random_channel(2, rng)
    rho = effect = basis_state(2)
    assert exact_expectation_curve(t, C1, rho, effect, [0])[0] == pytest.approx(
        np.trace(t.apply(rho) @ effect).real, abs=1e-12
    )


@pytest.mark.parametrize("group", [MU24, C1, MonomialGroup(3, 3)], ids=repr)
def test_closed_form_matches_enumeration(group):
    rng = np.random.default_rng(6)
    t = random_channel(group.d, rng)
    np.testing.assert_allclose(twirl_closed_form(t, group).matrix, exact_twirl(t, group).matrix, atol=1e-9)
    rho = random_density(group.d, rng)
    effect = basis_state(group.d)
    a = exact_expectation_curve(t, group, rho, effect, range(6))
    b = exact_expectation_curve(t, group, rho, effect, range(6), enumerate_group=True)
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_exact_curve_has_decay_form(rng):
    ms = np.arange(1, 21)
    for group, order in ((C1, 1), (MonomialGroup(3, 4), 2)):
        t = random_channel(group.d, rng, p=0.6)
        # weight in both MU sectors so neither amplitude is negligible
        both = isolating_direction("off_diag", group.d) + isolating_direction("diag", group.d)
        rho = np.eye(group.d) / group.d + 0.1 * both
        effect = (np.eye(group.d) + 0.5 * both) / 2
        curve = exact_expectation_curve(t, group, rho, effect, ms)
        fit = fit_decay(samples_from_arrays(ms, curve), order=order)
        assert fit.residual_rms < 1e-9


# --- Hoeffding ---------------------------------------------------------------


def test_hoeffding_examples():
    assert abs(hoeffding_bound(1000, 0.05) - math.exp(-5)) < 1e-12
    assert hoeffding_bound(10, 1e-9) == pytest.approx(1.0, abs=1e-12)
    assert hoeffding_bound(150_000_000, 1e-4) == pytest.approx(0.0498, abs=1e-4)
    with pytest.raises(ValueError):
        hoeffding_bound(0, 0.1)
