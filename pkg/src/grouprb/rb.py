"""Randomized benchmarking protocols as Monte-Carlo simulations.

Every sequence applies the noise channel before each gate, the closing
inverse gate included::

    S = (U_{g_{L+1}} o T) o ... o (U_{g_1} o T)

so the first noise channel acts as state-preparation error and, with Haar
gates, ``E(S_m) = twirl(T)^m o T``. The three sampling modes differ only in
how the first gates are drawn:

``exact_haar``
    m i.i.d. uniform group elements.
``walk``
    m gates, each the endpoint of an independent ``walk_length``-step random
    walk from the identity.
``generator``
    ``burn_in + m`` i.i.d. uniform generators; the first ``burn_in`` of them
    are part of the state preparation.

Each sequence draws from its own generator seeded by
``(master_seed, m, sequence index)`` and sequences are processed in chunks of
fixed size, so a run does not depend on the number of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channels import Superoperator, as_superoperator, basis_state
from .errors import UnsupportedSamplingError
from .fitting import DecaySample
from .twirl import (
    clifford_depolarizing_param,
    depolarizing_channel,
    exact_twirl,
    mu_covariant_channel,
    mu_structure_params,
)

SAMPLING_MODES = ("exact_haar", "walk", "generator")
CHUNK = 256
# bound on the complex entries held per chunk of gate encodings
_CHUNK_BUDGET = 2**24


@dataclass
class RBConfig:
    group: object
    noise: object
    m_values: Sequence[int]
    M: int
    sampling: str = "exact_haar"
    rho: np.ndarray | None = None
    effect: np.ndarray | None = None
    walk_length: int = 1
    burn_in: int = 1
    generators: object = None
    master_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        d = self.group.d
        if self.rho is None:
            self.rho = basis_state(d)
        if self.effect is None:
            self.effect = basis_state(d)
        self.rho = np.asarray(self.rho, dtype=complex)
        self.effect = np.asarray(self.effect, dtype=complex)
        if self.rho.shape != (d, d) or self.effect.shape != (d, d):
            raise ValueError(f"state and effect must be {d}x{d}")
        if self.noise.dim != d:
            raise ValueError(f"noise acts on dimension {self.noise.dim}, group on {d}")
        self.m_values = [int(m) for m in self.m_values]
        if not self.m_values or min(self.m_values) < 0:
            raise ValueError("m_values must be a nonempty list of non-negative lengths")
        if self.M < 1:
            raise ValueError(f"M must be at least 1, got {self.M}")
        if self.sampling not in SAMPLING_MODES:
            raise ValueError(f"sampling must be one of {SAMPLING_MODES}, got {self.sampling!r}")
        if self.sampling == "walk" and self.walk_length < 1:
            raise ValueError(f"walk_length must be at least 1, got {self.walk_length}")
        if self.sampling == "generator" and self.burn_in < 0:
            raise ValueError(f"burn_in must be non-negative, got {self.burn_in}")
        if self.sampling in ("walk", "generator") and self.generators is None:
            self.generators = self.group.generators()
        if self.sampling == "generator" and not self.generators.closed_under_inversion:
            raise ValueError("generator RB needs a generator set closed under inversion")


@dataclass
class RBRun:
    m_values: list
    fidelities: np.ndarray  # (len(m_values), M)
    means: np.ndarray = field(init=False)
    std_errs: np.ndarray = field(init=False)

    def __post_init__(self):
        self.means = self.fidelities.mean(axis=1)
        M = self.fidelities.shape[1]
        if M > 1:
            self.std_errs = self.fidelities.std(axis=1, ddof=1) / math.sqrt(M)
        else:
            self.std_errs = np.zeros(len(self.m_values))

    @property
    def M(self) -> int:
        return self.fidelities.shape[1]

    def samples(self) -> list[DecaySample]:
        return [DecaySample(m, float(y), float(s), self.M)
                for m, y, s in zip(self.m_values, self.means, self.std_errs)]


# --------------------------------------------------------------------------
# batched gate arithmetic
# --------------------------------------------------------------------------


def _inv_perms(perms: np.ndarray) -> np.ndarray:
    inv = np.empty_like(perms)
    np.put_along_axis(inv, perms, np.broadcast_to(np.arange(perms.shape[-1]), perms.shape), axis=-1)
    return inv


class _MonomialBatch:
    """A batch of MU(d, n) gates acting in O(d^2) per state."""

    def __init__(self, perms, phases, n):
        self.perms, self.phases, self.n = perms, phases, n

    @classmethod
    def identity(cls, count, d, n):
        return cls(np.tile(np.arange(d), (count, 1)), np.zeros((count, d), dtype=np.int64), n)

    def apply(self, states):
        inv = _inv_perms(self.perms)
        c = np.arange(states.shape[0])[:, None, None]
        out = states[c, inv[:, :, None], inv[:, None, :]]
        w = np.exp(2j * np.pi * self.phases / self.n)
        return out * w[:, :, None] * w.conj()[:, None, :]

    def compose_left(self, other):
        """``other @ self`` for every batch entry."""
        inv_o = _inv_perms(other.perms)
        perms = np.take_along_axis(other.perms, self.perms, axis=-1)
        phases = (other.phases + np.take_along_axis(self.phases, inv_o, axis=-1)) % self.n
        return _MonomialBatch(perms, phases, self.n)

    def inverse(self):
        inv = _inv_perms(self.perms)
        phases = (-np.take_along_axis(self.phases, self.perms, axis=-1)) % self.n
        return _MonomialBatch(inv, phases, self.n)


class _DenseBatch:
    def __init__(self, u):
        self.u = u

    @classmethod
    def identity(cls, count, d):
        return cls(np.broadcast_to(np.eye(d, dtype=complex), (count, d, d)).copy())

    def apply(self, states):
        return self.u @ states @ self.u.conj().transpose(0, 2, 1)

    def compose_left(self, other):
        return _DenseBatch(other.u @ self.u)

    def inverse(self):
        return _DenseBatch(self.u.conj().transpose(0, 2, 1))


# --------------------------------------------------------------------------
# per-sequence gate draws
# --------------------------------------------------------------------------


def _sequence_rng(seed: int, m: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, m, index])


class _GateSource:
    """Draws the random part of each sequence and hands out gate batches per step."""

    def __init__(self, config: RBConfig):
        self.config = config
        self.group = config.group
        self.monomial = config.sampling == "exact_haar" and self.group.family == "mu"
        if config.sampling == "exact_haar" and not self.monomial:
            if not hasattr(self.group, "exact_table"):
                raise UnsupportedSamplingError(f"no exact sampler for {self.group!r}")
            self.table = self.group.exact_table()
        if config.generators is not None:
            self.gen_unitaries = config.generators.unitaries()

    def n_gates(self, m: int) -> int:
        if self.config.sampling == "generator":
            return self.config.burn_in + m
        return m

    def draw(self, rngs: list, m: int):
        """Encodings for a chunk of sequences, one generator per sequence."""
        cfg = self.config
        k = self.n_gates(m)
        if self.monomial:
            d, n = self.group.d, self.group.n
            perms = np.empty((len(rngs), k, d), dtype=np.int64)
            phases = np.empty((len(rngs), k, d), dtype=np.int64)
            base = np.tile(np.arange(d), (k, 1))
            for i, rng in enumerate(rngs):
                perms[i] = rng.permuted(base, axis=1)
                phases[i] = rng.integers(0, n, size=(k, d))
            return perms, phases
        if cfg.sampling == "exact_haar":
            return np.stack([rng.integers(0, self.table.shape[0], size=k) for rng in rngs])
        n_gens = self.gen_unitaries.shape[0]
        if cfg.sampling == "walk":
            return np.stack([rng.integers(0, n_gens, size=(k, cfg.walk_length)) for rng in rngs])
        return np.stack([rng.integers(0, n_gens, size=k) for rng in rngs])

    def gates(self, encoding, j: int):
        cfg = self.config
        if self.monomial:
            perms, phases = encoding
            return _MonomialBatch(perms[:, j], phases[:, j], self.group.n)
        if cfg.sampling == "exact_haar":
            return _DenseBatch(self.table[encoding[:, j]])
        if cfg.sampling == "walk":
            steps = encoding[:, j]
            u = self.gen_unitaries[steps[:, 0]]
            for s in range(1, steps.shape[1]):
                u = self.gen_unitaries[steps[:, s]] @ u  # left multiplication
            return _DenseBatch(u)
        return _DenseBatch(self.gen_unitaries[encoding[:, j]])

    def identity(self, count: int):
        if self.monomial:
            return _MonomialBatch.identity(count, self.group.d, self.group.n)
        return _DenseBatch.identity(count, self.group.d)


def _simulate_chunk(source: _GateSource, m: int, indices: range) -> np.ndarray:
    cfg = source.config
    rngs = [_sequence_rng(cfg.master_seed, m, i) for i in indices]
    enc = source.draw(rngs, m)
    count = len(indices)
    d = cfg.group.d
    states = np.broadcast_to(cfg.rho, (count, d, d)).copy()
    net = source.identity(count)
    for j in range(source.n_gates(m)):
        g = source.gates(enc, j)
        states = g.apply(cfg.noise.apply(states))
        net = net.compose_left(g)
    states = net.inverse().apply(cfg.noise.apply(states))
    # Re tr(rho E) = Re sum_ab rho_ab E_ba
    return np.einsum("cab,ba->c", states, cfg.effect).real


def _chunk_size(cfg: RBConfig, m: int) -> int:
    d = cfg.group.d
    per_seq = max(1, (m + cfg.burn_in + 1) * d * max(d, cfg.walk_length))
    return max(1, min(CHUNK, _CHUNK_BUDGET // per_seq))


def run_rb(config: RBConfig) -> RBRun:
    source = _GateSource(config)
    jobs = []
    for mi, m in enumerate(config.m_values):
        size = _chunk_size(config, m)
        for start in range(0, config.M, size):
            jobs.append((mi, m, range(start, min(start + size, config.M))))
    out = np.empty((len(config.m_values), config.M))

    def work(job):
        mi, m, idx = job
        return mi, idx, _simulate_chunk(source, m, idx)

    if config.workers > 1:
        with ThreadPoolExecutor(config.workers) as pool:
            results = list(pool.map(work, jobs))
    else:
        results = [work(job) for job in jobs]
    for mi, idx, vals in results:
        out[mi, idx.start:idx.stop] = vals
    return RBRun(list(config.m_values), out)


def run_standard_rb(config: RBConfig) -> RBRun:
    if config.sampling != "exact_haar":
        raise ValueError("standard RB uses exact_haar sampling")
    return run_rb(config)


def run_approx_rb(config: RBConfig) -> RBRun:
    if config.sampling != "walk":
        raise ValueError("approximate-sample RB uses walk sampling")
    return run_rb(config)


def run_generator_rb(config: RBConfig) -> RBRun:
    if config.sampling != "generator":
        raise ValueError("generator RB uses generator sampling")
    return run_rb(config)


# --------------------------------------------------------------------------
# oracles
# --------------------------------------------------------------------------


def twirl_closed_form(channel, group) -> Superoperator:
    """Exact twirl from the group's block structure, without enumeration.

    MU(d, n) with n >= 3 twirls onto ``Q_triv + a Q_off + b Q_diag``;
    the Clifford group onto a depolarizing channel.
    """
    if group.family == "mu":
        sp = mu_structure_params(channel, group.d, group.n)
        return mu_covariant_channel(group.d, sp["off_diagonal"], sp["diagonal"])
    if group.family == "clifford":
        p = clifford_depolarizing_param(channel, group.qubits)["traceless"]
        return depolarizing_channel(group.d, p)
    return exact_twirl(channel, group)


def exact_expectation_curve(noise, group, rho, effect, m_values, enumerate_group: bool = False) -> np.ndarray:
    """``tr((twirl(T)^m o T)(rho) E)`` for each m.

    With ``enumerate_group=True`` the twirl is the explicit group average
    (small groups only); otherwise the closed form is used.
    """
    s = as_superoperator(noise)
    tw = exact_twirl(s, group) if enumerate_group else twirl_closed_form(s, group)
    start = s.apply(np.asarray(rho, dtype=complex))
    out = []
    for m in m_values:
        state = tw.power(int(m)).apply(start)
        out.append(float(np.real(np.trace(state @ effect))))
    return np.array(out)


def hoeffding_bound(M: int, eps: float) -> float:
    """``P(|F - F_bar| >= eps) <= exp(-2 M eps^2)``."""
    if M < 1 or eps <= 0:
        raise ValueError("need M >= 1 and eps > 0")
    return math.exp(-2.0 * M * eps * eps)
