"""Twirls, covariant-channel structure and fidelity bounds.

The twirl of a channel T over a finite group is the average of
``U_g^* o T o U_g``. For MU(d, n) (n >= 3) the twirled channel is fixed by
two numbers, the eigenvalues on the off-diagonal and on the traceless
diagonal sectors; for the Clifford group it is fixed by one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .channels import DENSE_DIM_CAP, Superoperator, as_superoperator, vec
from .errors import GroupTooLargeError, NumericalInconsistencyError

DEFAULT_TWIRL_CAP = 20000
CLUSTER_TOL = 1e-7


@dataclass(frozen=True)
class IrrepBlock:
    dim: int
    multiplicity: int
    label: str


@dataclass(frozen=True)
class IrrepProfile:
    """Isotypic blocks of ``U (x) conj(U)``; the first block is the trivial one."""

    blocks: tuple

    def __post_init__(self):
        trivial = [b for b in self.blocks if b.label == "trivial"]
        if len(trivial) != 1 or trivial[0].dim != 1:
            raise ValueError("profile needs exactly one trivial block of dimension 1")

    @property
    def total(self) -> int:
        return sum(b.dim * b.multiplicity for b in self.blocks)

    @property
    def nontrivial(self) -> tuple:
        return tuple(b for b in self.blocks if b.label != "trivial")

    @property
    def max_multiplicity(self) -> int:
        return max(b.multiplicity for b in self.blocks)


def mu_profile(d: int) -> IrrepProfile:
    return IrrepProfile(
        (
            IrrepBlock(1, 1, "trivial"),
            IrrepBlock(d * d - d, 1, "off_diagonal"),
            IrrepBlock(d - 1, 1, "diagonal"),
        )
    )


def clifford_profile(qubits: int) -> IrrepProfile:
    d = 2**qubits
    return IrrepProfile((IrrepBlock(1, 1, "trivial"), IrrepBlock(d * d - 1, 1, "traceless")))


def profile_for(group) -> IrrepProfile:
    if group.family == "mu":
        return mu_profile(group.d)
    if group.family == "clifford":
        return clifford_profile(group.qubits)
    raise ValueError(f"no closed-form profile for {group!r}")


@dataclass(frozen=True)
class CovariantSpectrum:
    """Eigenvalue of a twirled channel on each block, keyed by block label."""

    eigenvalues: dict

    def __post_init__(self):
        for label, lam in self.eigenvalues.items():
            if abs(lam) > 1 + 1e-9:
                raise ValueError(f"eigenvalue {lam} on block {label!r} is outside the unit disc")

    def __getitem__(self, label: str) -> float:
        return self.eigenvalues[label]


# --------------------------------------------------------------------------
# twirls
# --------------------------------------------------------------------------


def _tree_sum(arrs: np.ndarray) -> np.ndarray:
    """Pairwise sum along axis 0, fixed association order."""
    while arrs.shape[0] > 1:
        if arrs.shape[0] % 2:
            arrs = np.concatenate([arrs[:-2], arrs[-2:-1] + arrs[-1:]])
        arrs = arrs[0::2] + arrs[1::2]
    return arrs[0]


def conjugation_superops(unitaries: np.ndarray) -> np.ndarray:
    """Stack of ``kron(conj(U), U)`` for a (k, d, d) array of unitaries."""
    u = np.asarray(unitaries, dtype=complex)
    k, d, _ = u.shape
    return np.einsum("kab,kcd->kacbd", u.conj(), u).reshape(k, d * d, d * d)


def _unitaries_of(elements) -> np.ndarray:
    if isinstance(elements, np.ndarray):
        return elements
    return np.stack([g.to_unitary() for g in elements])


def _twirl_terms(s: np.ndarray, conj: np.ndarray) -> np.ndarray:
    # U_g^* o T o U_g for every g
    return np.einsum("kba,bc,kcd->kad", conj.conj(), s, conj, optimize=True)


def exact_twirl(channel, group, cap: int = DEFAULT_TWIRL_CAP) -> Superoperator:
    """Uniform average of ``U_g^* o T o U_g`` over an enumerated group.

    Args:
        channel: channel-like object.
        group: list of elements, a (k, d, d) unitary stack, or a group family
            object with ``enumerate``.
        cap: largest group size accepted.
    """
    s = as_superoperator(channel)
    if hasattr(group, "enumerate"):
        group = group.enumerate(cap=cap)
    if len(group) > cap:
        raise GroupTooLargeError(
            f"exact twirl over {len(group)} elements exceeds cap={cap}; use mc_twirl",
            cap=cap,
        )
    us = _unitaries_of(group)
    if us.shape[-1] != s.dim:
        raise ValueError(f"group acts on dimension {us.shape[-1]}, channel on {s.dim}")
    chunk = 512
    partial = []
    for start in range(0, us.shape[0], chunk):
        conj = conjugation_superops(us[start:start + chunk])
        partial.append(_tree_sum(_twirl_terms(s.matrix, conj)))
    total = _tree_sum(np.stack(partial))
    return Superoperator(total / us.shape[0], s.dim)


def mc_twirl(channel, sampler: Callable, num: int, rng: np.random.Generator) -> Superoperator:
    """Monte-Carlo twirl from ``num`` draws of ``sampler(rng)``.

    ``sampler`` returns a group element or a unitary matrix.
    """
    if num < 1:
        raise ValueError(f"need at least one sample, got {num}")
    s = as_superoperator(channel)
    us = []
    for _ in range(num):
        g = sampler(rng)
        us.append(g.to_unitary() if hasattr(g, "to_unitary") else np.asarray(g))
    us = np.stack(us)
    partial = []
    for start in range(0, num, 512):
        partial.append(_tree_sum(_twirl_terms(s.matrix, conjugation_superops(us[start:start + 512]))))
    return Superoperator(_tree_sum(np.stack(partial)) / num, s.dim)


def approximate_twirl_power(channel, increment_laws: Sequence[np.ndarray], elements: list) -> Superoperator:
    """Exact expectation of ``(D_m^* T D_m) o ... o (D_1^* T D_1)``.

    ``D_k = g_k ... g_1`` with the increments ``g_k`` drawn independently from
    ``increment_laws[k]`` (probability vectors indexed like ``elements``).
    This is the average the RB sequence realizes when gates come from
    non-uniform samplers; for uniform laws it equals ``twirl(T)^m``.
    """
    s = as_superoperator(channel)
    index = {g: i for i, g in enumerate(elements)}
    conj = conjugation_superops(_unitaries_of(elements))
    terms = _twirl_terms(s.matrix, conj)  # terms[h] = U_h^* T U_h
    size = len(elements)
    # left-multiplication table: mult[a, h] = index(a h)
    mult = np.empty((size, size), dtype=np.int64)
    for i, a in enumerate(elements):
        for j, h in enumerate(elements):
            mult[i, j] = index[a @ h]
    # acc[h] = E[ partial composition ; D_k = h ]
    acc = np.asarray(increment_laws[0])[:, None, None] * terms
    for law in increment_laws[1:]:
        law = np.asarray(law)
        new = np.zeros_like(acc)
        for i in np.flatnonzero(law > 0):
            # D_{k+1} = g_i D_k
            np.add.at(new, mult[i], law[i] * acc)
        acc = np.einsum("hab,hbc->hac", terms, new)
    return Superoperator(_tree_sum(acc), s.dim)


# --------------------------------------------------------------------------
# closed-form structure
# --------------------------------------------------------------------------


def mu_projectors(d: int) -> tuple[Superoperator, Superoperator, Superoperator]:
    """Projectors onto span{I}, the off-diagonal sector and the traceless diagonal."""
    if d > DENSE_DIM_CAP:
        raise ValueError(f"dense projectors need d <= {DENSE_DIM_CAP}")
    v = vec(np.eye(d))
    q_triv = np.outer(v, v) / d
    dephase = np.diag(v)  # keeps the diagonal of X
    q_off = np.eye(d * d) - dephase
    q_diag = dephase - q_triv
    return (
        Superoperator(q_triv.astype(complex), d),
        Superoperator(q_off.astype(complex), d),
        Superoperator(q_diag.astype(complex), d),
    )


def mu_structure_params(channel, d: int, n: int = 3) -> CovariantSpectrum:
    """Eigenvalues of the MU(d, n)-twirl of a channel, one per sector.

    Read off as normalized traces against the projectors, which needs no
    group enumeration. Valid for n >= 3.
    """
    if d < 2 or n < 3:
        raise ValueError(f"need d >= 2 and n >= 3, got d={d}, n={n}")
    s = as_superoperator(channel).matrix
    _, q_off, q_diag = mu_projectors(d)
    off_rate = np.trace(q_off.matrix @ s).real / (d * d - d)
    diag_rate = np.trace(q_diag.matrix @ s).real / (d - 1)
    return CovariantSpectrum({"trivial": 1.0, "off_diagonal": float(off_rate), "diagonal": float(diag_rate)})


def mu_covariant_channel(d: int, off_rate: float, diag_rate: float) -> Superoperator:
    """``Q_triv + off_rate Q_off + diag_rate Q_diag``."""
    q_triv, q_off, q_diag = mu_projectors(d)
    return Superoperator(q_triv.matrix + off_rate * q_off.matrix + diag_rate * q_diag.matrix, d)


def clifford_depolarizing_param(channel, qubits: int) -> CovariantSpectrum:
    s = as_superoperator(channel)
    d = 2**qubits
    if s.dim != d:
        raise ValueError(f"channel dimension {s.dim} is not 2**{qubits}")
    p = (s.trace().real - 1) / (d * d - 1)
    return CovariantSpectrum({"trivial": 1.0, "traceless": float(p)})


def depolarizing_channel(d: int, p: float) -> Superoperator:
    """``X -> p X + (1 - p) tr(X) I/d``."""
    v = vec(np.eye(d))
    return Superoperator(p * np.eye(d * d) + (1 - p) * np.outer(v, v) / d, d)


def commutant_dimension(group, rep: Callable | None = None) -> int:
    """``(1/|G|) sum_g |tr U_g|^4``, the dimension of the commutant of ``U (x) conj(U)``."""
    if hasattr(group, "enumerate"):
        group = group.enumerate()
    rep = rep or (lambda g: g.to_unitary())
    traces = np.array([np.trace(rep(g)) for g in group])
    value = float(np.mean(np.abs(traces) ** 4))
    k = int(round(value))
    if abs(value - k) >= 1e-6:
        raise NumericalInconsistencyError(
            f"commutant dimension came out non-integer: {value!r}"
        )
    return k


def covariance_defect(channel, generators) -> float:
    """Largest entrywise ``|U_a o T - T o U_a|`` over the generators."""
    s = as_superoperator(channel).matrix
    conj = conjugation_superops(_unitaries_of(list(generators)))
    diff = np.einsum("kab,bc->kac", conj, s) - np.einsum("ab,kbc->kac", s, conj)
    return float(np.max(np.abs(diff)))


def eigenvalue_clusters(channel, tol: float = CLUSTER_TOL) -> list[tuple[complex, int]]:
    """Distinct eigenvalues (clustered at ``tol``) with their multiplicities.

    The fallback for groups without a closed-form profile.
    """
    ev = np.linalg.eigvals(as_superoperator(channel).matrix)
    ev = ev[np.lexsort((ev.imag, -ev.real))]
    clusters: list[list] = []
    for z in ev:
        for c in clusters:
            if abs(z - c[0]) < tol:
                c[1] += 1
                break
        else:
            clusters.append([z, 1])
    return [(complex(z), k) for z, k in clusters]


# --------------------------------------------------------------------------
# fidelity from estimated eigenvalues
# --------------------------------------------------------------------------


def fidelity_bounds(estimates: Sequence[float], profile: IrrepProfile) -> tuple[float, float]:
    """Smallest and largest entanglement fidelity compatible with unlabeled estimates.

    ``estimates`` lists the trivial eigenvalue 1 followed by one estimate per
    non-trivial block. Since the block of each estimate is unknown, the
    extreme pairings are taken: descending estimates against descending
    block dimensions give the maximum, against ascending dimensions the
    minimum.
    """
    blocks = profile.nontrivial
    if len(estimates) != len(blocks) + 1:
        raise ValueError(
            f"expected {len(blocks) + 1} estimates (trivial first), got {len(estimates)}"
        )
    lams = sorted((float(x) for x in estimates[1:]), reverse=True)
    dims_desc = sorted((b.dim * b.multiplicity for b in blocks), reverse=True)
    d2 = profile.total
    f_max = (1 + sum(a * b for a, b in zip(dims_desc, lams))) / d2
    f_min = (1 + sum(a * b for a, b in zip(dims_desc[::-1], lams))) / d2
    return f_min, f_max


def isolating_state(which: str, d: int, eps: float = 0.25) -> np.ndarray:
    """``I/d + eps X`` with X living in a single non-trivial MU sector.

    ``which="off_diag"`` uses ``X = |0><1| + |1><0|`` (off-diagonal sector),
    ``which="diag"`` uses ``X = |0><0| - |1><1|`` (diagonal sector). The
    profile labels ``off_diagonal`` and ``diagonal`` are accepted too.
    """
    x = isolating_direction(which, d)
    rho = np.eye(d, dtype=complex) / d + eps * x
    if eps <= 0 or np.linalg.eigvalsh(rho).min() < -1e-12:
        raise ValueError(f"eps={eps} does not give a valid state in dimension {d}")
    return rho


def isolating_direction(which: str, d: int) -> np.ndarray:
    if d < 2:
        raise ValueError(f"need d >= 2, got {d}")
    x = np.zeros((d, d), dtype=complex)
    if which in ("off_diag", "off_diagonal"):
        x[0, 1] = x[1, 0] = 1
    elif which in ("diag", "diagonal"):
        x[0, 0], x[1, 1] = 1, -1
    else:
        raise ValueError(f"which must be 'off_diag' or 'diag', got {which!r}")
    return x


def isolating_effect(which: str, d: int) -> np.ndarray:
    """POVM effect ``(I + X)/2`` that only sees the sector of ``X``.

    Its traceless part lies in one sector, so the measured curve is a single
    exponential in that sector's eigenvalue even though the first noise
    channel (acting as SPAM) leaks the prepared state into other sectors.
    """
    return (np.eye(d, dtype=complex) + isolating_direction(which, d)) / 2
