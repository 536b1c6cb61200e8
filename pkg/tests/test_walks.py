import math

import numpy as np
import pytest
from helpers import CyclicTwo, random_channel

from grouprb.errors import GroupTooLargeError, NonConvergenceError
from grouprb.groups import (
    GeneratorSet,
    MonomialElement,
    MonomialGroup,
    mu_generator_set,
)
from grouprb.twirl import approximate_twirl_power, exact_twirl
from grouprb.walks import (
    approx_twirl_bound,
    exact_walk_distribution,
    mixing_time,
    point_mass,
    product_law,
    relative_entropy,
    sequence_law,
    start_walk,
    t_mix,
    transition_matrix,
    tv_distance,
    tv_profile,
    uniform,
    walk_sample,
    walk_step,
)

MU24 = MonomialGroup(2, 4)
E = CyclicTwo(0)
A = CyclicTwo(1)
Z2 = [E, A]


@pytest.fixture(scope="module")
def mu24():
    return MU24.enumerate(), mu_generator_set(2, 4)


# --- stepping ----------------------------------------------------------------


def test_identity_generator_never_moves(rng):
    e = MonomialElement.identity_of(2, 4)
    state = start_walk([e], rng)
    for _ in range(10):
        state = walk_step(state)
    assert state.current == e and state.steps_taken == 10


def test_step_multiplies_on_the_left(rng):
    gens = mu_generator_set(2, 4, lazy=False)
    start = gens.elements[1]
    state = walk_step(start_walk(gens, np.random.default_rng(0), start))
    # replay the draw to recover the generator used
    a = gens.elements[int(np.random.default_rng(0).integers(len(gens)))]
    assert state.current == a @ start


def test_lazy_z2_one_step_is_uniform():
    law = exact_walk_distribution([E, A], E, 1, Z2)
    np.testing.assert_array_equal(law, [0.5, 0.5])


def test_walk_seeded():
    gens = mu_generator_set(3, 4)
    a = walk_sample(gens, 20, np.random.default_rng(9))
    b = walk_sample(gens, 20, np.random.default_rng(9))
    assert a == b


# --- exact laws --------------------------------------------------------------


def test_zero_steps_is_point_mass(mu24):
    elements, gens = mu24
    start = elements[5]
    np.testing.assert_array_equal(exact_walk_distribution(gens, start, 0, elements), point_mass(elements, start))


def test_mu24_law_converges(mu24):
    elements, gens = mu24
    for start in elements[::7]:
        law = exact_walk_distribution(gens, start, 50, elements)
        assert tv_distance(law, uniform(len(elements))) < 1e-6
        assert abs(law.sum() - 1) < 1e-12


def test_transition_matrix_doubly_stochastic(mu24):
    elements, gens = mu24
    p = transition_matrix(gens, elements).toarray()
    np.testing.assert_allclose(p.sum(axis=0), 1, atol=1e-12)
    np.testing.assert_allclose(p.sum(axis=1), 1, atol=1e-12)


def test_exact_law_cap(mu24):
    elements, gens = mu24
    with pytest.raises(GroupTooLargeError):
        exact_walk_distribution(gens, elements[0], 3, elements, cap=10)


def test_empirical_frequencies_match_exact_law():
    """10^5 three-step walks on MU(2,4) against the exact three-step law."""
    elements = MU24.enumerate()
    gens = mu_generator_set(2, 4)
    index = {g: i for i, g in enumerate(elements)}
    rng = np.random.default_rng(17)
    draws = 100_000
    counts = np.zeros(len(elements))
    for _ in range(draws):
        counts[index[walk_sample(gens, 3, rng)]] += 1
    law = exact_walk_distribution(gens, elements[0].identity(), 3, elements)
    se = np.sqrt(law * (1 - law) / draws)
    freq = counts / draws
    assert np.all(np.abs(freq - law) <= 5 * se + 1e-12)


# --- distances ---------------------------------------------------------------


def test_tv_examples():
    u = uniform(24)
    assert tv_distance(u, u) == 0
    assert tv_distance(point_mass(list(range(24)), 0), u) == pytest.approx(23 / 24, abs=1e-15)
    a = np.random.default_rng(0).dirichlet(np.ones(24))
    assert tv_distance(a, u) == tv_distance(u, a)
    with pytest.raises(ValueError):
        tv_distance(u, uniform(23))


def test_relative_entropy_examples():
    u = uniform(24)
    assert relative_entropy(u, u) == 0
    assert relative_entropy(point_mass(list(range(24)), 3), u) == pytest.approx(math.log(24), abs=1e-12)
    assert relative_entropy(uniform(2), np.array([1.0, 0.0])) == math.inf


def test_relative_entropy_additivity():
    rng = np.random.default_rng(4)
    mu, mu2 = rng.dirichlet(np.ones(4)), rng.dirichlet(np.ones(3))
    nu, nu2 = rng.dirichlet(np.ones(4)), rng.dirichlet(np.ones(3))
    joint = relative_entropy(np.outer(mu, mu2).ravel(), np.outer(nu, nu2).ravel())
    assert joint == pytest.approx(relative_entropy(mu, nu) + relative_entropy(mu2, nu2), abs=1e-12)
    # n-fold tensor power
    power = relative_entropy(product_law([mu] * 3).ravel(), product_law([nu] * 3).ravel())
    assert power == pytest.approx(3 * relative_entropy(mu, nu), abs=1e-12)


# --- mixing ------------------------------------------------------------------


def test_lazy_z2_mixing_time():
    for eps in (0.0, 0.1, 0.49):
        assert mixing_time([E, A], Z2, eps) == 1
    # the point mass already sits at TV 1/2
    assert mixing_time([E, A], Z2, 0.5) == 0


def test_non_lazy_z2_never_mixes():
    with pytest.raises(NonConvergenceError, match="lazy"):
        mixing_time([A], Z2, 0.25, step_cap=200)


def test_mixing_time_monotone_and_doubling(mu24):
    elements, gens = mu24
    tm = t_mix(gens, elements)
    eps_values = [2.0**-k for k in range(1, 11)]
    times = [mixing_time(gens, elements, eps) for eps in eps_values]
    assert times == sorted(times)
    for eps, t in zip(eps_values, times):
        assert t <= math.ceil(math.log2(1 / eps)) * tm


def test_identity_start_is_worst_case(mu24):
    elements, gens = mu24
    for eps in (0.5, 0.25, 0.01):
        assert mixing_time(gens, elements, eps) == mixing_time(gens, elements, eps, all_starts=True)
    np.testing.assert_allclose(tv_profile(gens, elements, 12), tv_profile(gens, elements, 12, all_starts=True),
                               atol=1e-14)


# --- approximate twirls ------------------------------------------------------


def test_approx_twirl_bound_examples():
    assert approx_twirl_bound([0.0] * 5, 24) == 0
    expected = 4 * math.sqrt(math.log(24) / (23 / 24) * 0.1)
    assert approx_twirl_bound([0.01] * 10, 24) == pytest.approx(expected, abs=1e-12)
    assert approx_twirl_bound([0.01] * 10, 24) == pytest.approx(2.304, abs=1e-3)
    base = [0.01, 0.02, 0.03]
    for k in range(3):
        bumped = list(base)
        bumped[k] += 0.01
        assert approx_twirl_bound(bumped, 32) > approx_twirl_bound(base, 32)
    with pytest.raises(ValueError):
        approx_twirl_bound([-0.1], 24)


def test_bijection_invariance(mu24):
    """TV of the partial-product law equals TV of the product of increment laws (m=2)."""
    elements, gens = mu24
    size = len(elements)
    start = elements[0].identity()
    laws = [exact_walk_distribution(gens, start, k, elements) for k in (1, 2)]
    joint = sequence_law(laws, elements)
    prod = product_law(laws)
    target = product_law([uniform(size)] * 2)
    assert joint.shape == (size, size)
    assert abs(joint.sum() - 1) < 1e-12
    assert tv_distance(joint.ravel(), target.ravel()) == pytest.approx(
        tv_distance(prod.ravel(), target.ravel()), abs=1e-12
    )


@pytest.mark.parametrize("steps", [1, 2, 3])
def test_pinsker_chain(mu24, steps):
    elements, gens = mu24
    rng = np.random.default_rng(steps)
    start = elements[0].identity()
    law = exact_walk_distribution(gens, start, steps, elements)
    eps_k = tv_distance(law, uniform(len(elements)))
    for m in (1, 2, 3):
        t = random_channel(2, rng)
        approx = approximate_twirl_power(t, [law] * m, elements)
        target = exact_twirl(t, elements).power(m)
        gap = np.max(np.abs(approx.matrix - target.matrix))
        assert gap <= approx_twirl_bound([eps_k] * m, len(elements))


def test_uniform_laws_give_exact_twirl_power(mu24):
    elements, _ = mu24
    t = random_channel(2, np.random.default_rng(1))
    u = uniform(len(elements))
    approx = approximate_twirl_power(t, [u] * 3, elements)
    np.testing.assert_allclose(approx.matrix, exact_twirl(t, elements).power(3).matrix, atol=1e-12)


def test_generator_set_container():
    gens = GeneratorSet.from_elements([A], lazy=True)
    assert len(gens) == 2 and gens.closed_under_inversion
