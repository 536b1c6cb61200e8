"""Random walks on finite groups.

The walk multiplies on the left: ``X_{k+1} = a X_k`` with ``a`` uniform over
the generator set, so ``P(X_{k+1} = h | X_k = g) = nu(h g^-1)``. Distances
between laws are total variation ``(1/2) sum |mu - nu|`` and relative entropy
with the natural logarithm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy import sparse

from .errors import GroupTooLargeError, NonConvergenceError

DEFAULT_STEP_CAP = 10000


@dataclass(frozen=True)
class WalkState:
    current: object
    steps_taken: int
    generators: object
    rng: np.random.Generator


def start_walk(generators, rng: np.random.Generator, start=None) -> WalkState:
    gens = list(generators)
    start = gens[0].identity() if start is None else start
    return WalkState(start, 0, generators, rng)


def walk_step(state: WalkState) -> WalkState:
    gens = state.generators.elements if hasattr(state.generators, "elements") else state.generators
    a = gens[int(state.rng.integers(len(gens)))]
    return replace(state, current=a @ state.current, steps_taken=state.steps_taken + 1)


def walk_sample(generators, length: int, rng: np.random.Generator, start=None):
    """Endpoint of a fresh ``length``-step walk (from the identity by default)."""
    state = start_walk(generators, rng, start)
    for _ in range(length):
        state = walk_step(state)
    return state.current


def _index(elements: list) -> dict:
    return {g: i for i, g in enumerate(elements)}


def transition_matrix(generators, elements: list) -> sparse.csr_matrix:
    """Row-stochastic ``pi[g, a g] += 1/|A|`` over an enumerated group."""
    index = _index(elements)
    gens = list(generators)
    size = len(elements)
    rows, cols = [], []
    for i, g in enumerate(elements):
        for a in gens:
            h = a @ g
            if h not in index:
                raise ValueError("element list is not closed under the generators")
            rows.append(i)
            cols.append(index[h])
    vals = np.full(len(rows), 1.0 / len(gens))
    return sparse.csr_matrix((vals, (rows, cols)), shape=(size, size))


def point_mass(elements: list, g) -> np.ndarray:
    v = np.zeros(len(elements))
    v[_index(elements)[g]] = 1.0
    return v


def uniform(size: int) -> np.ndarray:
    return np.full(size, 1.0 / size)


def exact_walk_distribution(generators, start, steps: int, elements: list, cap: int = 200000) -> np.ndarray:
    """Law of the walk after ``steps`` steps from ``start``."""
    if len(elements) > cap:
        raise GroupTooLargeError(f"exact walk law over {len(elements)} elements exceeds cap={cap}", cap=cap)
    p = transition_matrix(generators, elements)
    nu = point_mass(elements, start)
    pt = p.T.tocsr()
    for _ in range(steps):
        nu = pt @ nu
    return nu


def tv_distance(mu, nu) -> float:
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if mu.shape != nu.shape:
        raise ValueError(f"distributions live on different index sets: {mu.shape} vs {nu.shape}")
    return 0.5 * float(np.sum(np.abs(mu - nu)))


def relative_entropy(mu, nu) -> float:
    """``D(mu || nu)`` in nats; infinite when mu charges a nu-null point."""
    mu = np.asarray(mu, dtype=float).ravel()
    nu = np.asarray(nu, dtype=float).ravel()
    if mu.shape != nu.shape:
        raise ValueError(f"distributions live on different index sets: {mu.shape} vs {nu.shape}")
    support = mu > 0
    if np.any(nu[support] == 0):
        return math.inf
    return float(np.sum(mu[support] * np.log(mu[support] / nu[support])))


def tv_profile(generators, elements: list, max_steps: int, all_starts: bool = False) -> np.ndarray:
    """Worst-case TV distance to uniform after 0..max_steps steps.

    For a left-multiplication walk the law from start ``s`` is the law from
    the identity translated on the right by ``s``, so every start gives the
    same distance; ``all_starts=True`` checks that by brute force.
    """
    size = len(elements)
    pt = transition_matrix(generators, elements).T.tocsr()
    mu = uniform(size)
    if all_starts:
        nu = np.eye(size)
    else:
        nu = point_mass(elements, elements[0].identity())[:, None]
    out = [0.5 * np.abs(nu - mu[:, None]).sum(axis=0).max()]
    for _ in range(max_steps):
        nu = pt @ nu
        out.append(0.5 * np.abs(nu - mu[:, None]).sum(axis=0).max())
    return np.array(out)


def mixing_time(generators, elements: list, eps: float = 0.25, step_cap: int = DEFAULT_STEP_CAP,
                all_starts: bool = False) -> int:
    """Smallest n with worst-case TV distance to uniform at most ``eps``.

    Scans step by step: each step is one sparse product, cheaper than the
    repeated powering a bisection would need.

    Raises:
        NonConvergenceError: when ``step_cap`` steps do not reach ``eps``, which
            is what a periodic (non-lazy) generator set produces.
    """
    if not 0 <= eps < 1:
        raise ValueError(f"eps must lie in [0, 1), got {eps}")
    size = len(elements)
    pt = transition_matrix(generators, elements).T.tocsr()
    mu = uniform(size)
    nu = np.eye(size) if all_starts else point_mass(elements, elements[0].identity())[:, None]
    for n in range(step_cap + 1):
        if 0.5 * np.abs(nu - mu[:, None]).sum(axis=0).max() <= eps + 1e-15:
            return n
        nu = pt @ nu
    raise NonConvergenceError(
        f"walk did not reach TV <= {eps} within {step_cap} steps; a periodic walk never "
        "converges, include the identity in the generator set (lazy walk)"
    )


def t_mix(generators, elements: list, **kw) -> int:
    return mixing_time(generators, elements, 0.25, **kw)


def approx_twirl_bound(epsilons: Sequence[float], group_size: int) -> float:
    """``4 sqrt(log|G| / (1 - 1/|G|) * sum eps_k)``."""
    eps = np.asarray(epsilons, dtype=float)
    if np.any(eps < 0):
        raise ValueError("epsilons must be non-negative")
    if group_size < 2:
        raise ValueError(f"group size must be at least 2, got {group_size}")
    return 4.0 * math.sqrt(math.log(group_size) / (1 - 1 / group_size) * float(eps.sum()))


def sequence_law(increment_laws: Sequence[np.ndarray], elements: list) -> np.ndarray:
    """Joint law of the partial products ``(D_1, ..., D_m)``, ``D_k = g_k ... g_1``.

    Returned as an array with one axis of length ``|G|`` per step. Only
    meant for tiny groups and small m.
    """
    index = _index(elements)
    size = len(elements)
    mult = np.array([[index[a @ h] for h in elements] for a in elements])
    law = np.asarray(increment_laws[0], dtype=float)
    for inc in increment_laws[1:]:
        inc = np.asarray(inc, dtype=float)
        new = np.zeros(law.shape + (size,))
        for i in np.flatnonzero(inc > 0):
            # last axis of law is D_k; D_{k+1} = g_i D_k
            prev = np.moveaxis(law, -1, 0)
            for h in range(size):
                new[..., h, mult[i, h]] += inc[i] * prev[h]
        law = new
    return law


def product_law(laws: Sequence[np.ndarray]) -> np.ndarray:
    out = np.asarray(laws[0], dtype=float)
    for law in laws[1:]:
        out = np.multiply.outer(out, np.asarray(law, dtype=float))
    return out
