"""Finite matrix groups used for benchmarking.

Two families ship:

* ``MU(d, n)``: monomial unitaries ``U = D P`` whose nonzero entries are
  n-th roots of unity. An element is stored as a permutation plus a vector of
  phase exponents, so products and inverses cost O(d).
* ``C(n)``: the n-qubit Clifford group, stored as dense unitaries with the
  global phase fixed (see :func:`cl_canonicalize`).

Conventions
-----------
``P|j> = |perm[j]>`` and ``D = diag(omega**phases)`` with
``omega = exp(2 pi i / n)``, so ``U[i, j] = omega**phases[i]`` when
``i == perm[j]``.

Every element type implements the small contract the rest of the package
relies on: ``a @ b`` (group product), ``a.inverse()``, ``a.to_unitary()``,
``a.identity()``, hashing and equality.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import GroupTooLargeError, UnsupportedSamplingError

CLIFFORD_EQ_TOL = 1e-9
_KEY_DECIMALS = 8
DEFAULT_ENUM_CAP = 20000


# --------------------------------------------------------------------------
# MU(d, n)
# --------------------------------------------------------------------------


class MonomialElement:
    """Element of MU(d, n): a permutation and phase exponents mod n."""

    __slots__ = ("perm", "phases", "n")

    def __init__(self, perm, phases, n: int, check: bool = True):
        perm = np.array(perm, dtype=np.int64)
        phases = np.array(phases, dtype=np.int64)
        if check:
            d = perm.shape[0]
            if perm.ndim != 1 or phases.shape != (d,):
                raise ValueError("perm and phases must be 1-d arrays of equal length")
            if n < 1:
                raise ValueError(f"root order n must be positive, got {n}")
            if not np.array_equal(np.sort(perm), np.arange(d)):
                raise ValueError(f"perm is not a bijection on 0..{d - 1}: {perm.tolist()}")
            phases = phases % n
        perm.flags.writeable = False
        phases.flags.writeable = False
        self.perm = perm
        self.phases = phases
        self.n = int(n)

    @property
    def d(self) -> int:
        return self.perm.shape[0]

    @classmethod
    def identity_of(cls, d: int, n: int) -> "MonomialElement":
        return cls(np.arange(d), np.zeros(d, dtype=np.int64), n, check=False)

    def identity(self) -> "MonomialElement":
        return MonomialElement.identity_of(self.d, self.n)

    def __matmul__(self, other: "MonomialElement") -> "MonomialElement":
        return mu_multiply(self, other)

    def inverse(self) -> "MonomialElement":
        return mu_inverse(self)

    def to_unitary(self) -> np.ndarray:
        return mu_to_unitary(self)

    def _key(self):
        return (self.n, self.perm.tobytes(), self.phases.tobytes())

    def __eq__(self, other) -> bool:
        if not isinstance(other, MonomialElement):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    def __repr__(self) -> str:
        return (
            f"MonomialElement(perm={self.perm.tolist()}, "
            f"phases={self.phases.tolist()}, n={self.n})"
        )


def _check_same_mu(g: MonomialElement, h: MonomialElement) -> None:
    if g.d != h.d or g.n != h.n:
        raise ValueError(
            f"MU elements live in different groups: MU({g.d},{g.n}) vs MU({h.d},{h.n})"
        )


def _invert_perm(perm: np.ndarray) -> np.ndarray:
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.shape[-1])
    return inv


def mu_multiply(g: MonomialElement, h: MonomialElement) -> MonomialElement:
    """Product ``g h`` in O(d).

    ``perm = perm_g o perm_h`` and
    ``phases[i] = phases_g[i] + phases_h[perm_g^-1(i)] (mod n)``.
    """
    _check_same_mu(g, h)
    inv_g = _invert_perm(g.perm)
    perm = g.perm[h.perm]
    phases = (g.phases + h.phases[inv_g]) % g.n
    return MonomialElement(perm, phases, g.n, check=False)


def mu_inverse(g: MonomialElement) -> MonomialElement:
    inv = _invert_perm(g.perm)
    phases = (-g.phases[g.perm]) % g.n
    return MonomialElement(inv, phases, g.n, check=False)


def mu_sample_uniform(d: int, n: int, rng: np.random.Generator) -> MonomialElement:
    """Uniform element of MU(d, n): Fisher-Yates permutation, i.i.d. phases."""
    if d < 1 or n < 3:
        raise ValueError(f"need d >= 1 and n >= 3, got d={d}, n={n}")
    perm = rng.permutation(d)
    phases = rng.integers(0, n, size=d)
    return MonomialElement(perm, phases, n, check=False)


def mu_to_unitary(g: MonomialElement) -> np.ndarray:
    d = g.d
    u = np.zeros((d, d), dtype=complex)
    u[g.perm, np.arange(d)] = np.exp(2j * np.pi * g.phases[g.perm] / g.n)
    return u


def mu_unitaries(perms: np.ndarray, phases: np.ndarray, n: int) -> np.ndarray:
    """Dense unitaries for a batch of encodings with shape (..., d)."""
    d = perms.shape[-1]
    batch = perms.shape[:-1]
    out = np.zeros(batch + (d, d), dtype=complex)
    vals = np.exp(2j * np.pi * np.take_along_axis(phases, perms, axis=-1) / n)
    idx = np.indices(batch)
    cols = np.broadcast_to(np.arange(d), batch + (d,))
    out[(*[i[..., None] for i in idx], perms, cols)] = vals
    return out


# --------------------------------------------------------------------------
# Clifford group
# --------------------------------------------------------------------------


def _leading_phase(u: np.ndarray) -> complex:
    # first nonzero entry in column-major order
    flat = u.reshape(-1, order="F")
    nz = np.flatnonzero(np.abs(flat) > CLIFFORD_EQ_TOL)
    if nz.size == 0:
        raise ValueError("zero matrix has no canonical phase")
    z = flat[nz[0]]
    return z / abs(z)


class CliffordElement:
    """Clifford unitary on ``qubits`` qubits with canonical global phase."""

    __slots__ = ("matrix", "qubits", "_k")

    def __init__(self, matrix: np.ndarray, qubits: int):
        matrix = np.array(matrix, dtype=complex)
        matrix.flags.writeable = False
        self.matrix = matrix
        self.qubits = int(qubits)
        self._k = None

    @property
    def d(self) -> int:
        return self.matrix.shape[0]

    def identity(self) -> "CliffordElement":
        return CliffordElement(np.eye(self.d, dtype=complex), self.qubits)

    def __matmul__(self, other: "CliffordElement") -> "CliffordElement":
        return cl_multiply(self, other)

    def inverse(self) -> "CliffordElement":
        return cl_inverse(self)

    def to_unitary(self) -> np.ndarray:
        return np.array(self.matrix)

    def _key(self):
        if self._k is None:
            r = np.round(self.matrix, _KEY_DECIMALS) + (0.0 + 0.0j)
            self._k = (self.qubits, r.tobytes())
        return self._k

    def __eq__(self, other) -> bool:
        if not isinstance(other, CliffordElement):
            return NotImplemented
        if self.qubits != other.qubits:
            return False
        return bool(np.max(np.abs(self.matrix - other.matrix)) < CLIFFORD_EQ_TOL)

    def __hash__(self) -> int:
        return hash(self._key())

    def __repr__(self) -> str:
        return f"CliffordElement(qubits={self.qubits}, matrix={np.round(self.matrix, 4).tolist()})"


def cl_canonicalize(u: np.ndarray, qubits: int | None = None) -> CliffordElement:
    """Remove the global phase so the first nonzero column-major entry is real positive."""
    u = np.asarray(u, dtype=complex)
    d = u.shape[0]
    if u.shape != (d, d):
        raise ValueError(f"expected a square matrix, got shape {u.shape}")
    dev = np.max(np.abs(u.conj().T @ u - np.eye(d)))
    if dev > 1e-10:
        raise ValueError(f"matrix is not unitary (max |U^dag U - I| = {dev:.2e})")
    if qubits is None:
        qubits = int(round(math.log2(d)))
        if 2**qubits != d:
            raise ValueError(f"dimension {d} is not a power of two")
    return CliffordElement(u / _leading_phase(u), qubits)


def _canon_unchecked(u: np.ndarray, qubits: int) -> CliffordElement:
    return CliffordElement(u / _leading_phase(u), qubits)


def cl_multiply(g: CliffordElement, h: CliffordElement) -> CliffordElement:
    if g.qubits != h.qubits:
        raise ValueError(f"qubit counts differ: {g.qubits} vs {h.qubits}")
    return _canon_unchecked(g.matrix @ h.matrix, g.qubits)


def cl_inverse(g: CliffordElement) -> CliffordElement:
    return _canon_unchecked(g.matrix.conj().T, g.qubits)


HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PHASE = np.array([[1, 0], [0, 1j]], dtype=complex)


def _on_qubit(gate: np.ndarray, i: int, n: int) -> np.ndarray:
    # qubit 0 is the most significant tensor factor
    ops = [np.eye(2, dtype=complex)] * n
    ops[i] = gate
    out = ops[0]
    for op in ops[1:]:
        out = np.kron(out, op)
    return out


def _cnot(control: int, target: int, n: int) -> np.ndarray:
    d = 2**n
    u = np.zeros((d, d), dtype=complex)
    for j in range(d):
        bits = [(j >> (n - 1 - q)) & 1 for q in range(n)]
        if bits[control]:
            bits[target] ^= 1
        k = sum(b << (n - 1 - q) for q, b in enumerate(bits))
        u[k, j] = 1
    return u


# --------------------------------------------------------------------------
# Generator sets and enumeration
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GeneratorSet:
    """Generators of a finite group; the walk and generator RB draw from it uniformly."""

    elements: tuple
    closed_under_inversion: bool

    def __post_init__(self):
        if len(self.elements) == 0:
            raise ValueError("generator set must be nonempty")

    @classmethod
    def from_elements(cls, elements: Iterable, lazy: bool = True) -> "GeneratorSet":
        elems = []
        seen = set()
        for a in elements:
            if a not in seen:
                seen.add(a)
                elems.append(a)
        if lazy:
            e = elems[0].identity()
            if e not in seen:
                elems.insert(0, e)
                seen.add(e)
        closed = all(a.inverse() in seen for a in elems)
        return cls(tuple(elems), closed)

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def unitaries(self) -> np.ndarray:
        return np.stack([a.to_unitary() for a in self.elements])


def clifford_generator_set(n: int, lazy: bool = True) -> GeneratorSet:
    """H_i, pi_i, pi_i^-1 on every qubit and CNOT_{i,j} for every ordered pair."""
    if n < 1:
        raise ValueError(f"need at least one qubit, got {n}")
    gates = []
    for i in range(n):
        gates.append(_on_qubit(HADAMARD, i, n))
        gates.append(_on_qubit(PHASE, i, n))
        gates.append(_on_qubit(PHASE.conj().T, i, n))
    for i, j in itertools.permutations(range(n), 2):
        gates.append(_cnot(i, j, n))
    elems = [cl_canonicalize(g, n) for g in gates]
    if lazy:
        elems.insert(0, cl_canonicalize(np.eye(2**n), n))
    return GeneratorSet.from_elements(elems, lazy=lazy)


def mu_generator_set(d: int, n: int, lazy: bool = True) -> GeneratorSet:
    """Adjacent transpositions plus single-site phase steps of +1 and -1."""
    if d < 2 or n < 3:
        raise ValueError(f"need d >= 2 and n >= 3, got d={d}, n={n}")
    zeros = np.zeros(d, dtype=np.int64)
    elems = []
    for i in range(d - 1):
        perm = np.arange(d)
        perm[[i, i + 1]] = perm[[i + 1, i]]
        elems.append(MonomialElement(perm, zeros, n))
    for i in range(d):
        for s in (1, -1):
            ph = zeros.copy()
            ph[i] = s
            elems.append(MonomialElement(np.arange(d), ph, n))
    if lazy:
        elems.insert(0, MonomialElement.identity_of(d, n))
    return GeneratorSet.from_elements(elems, lazy=lazy)


def bfs_enumerate(generators: GeneratorSet | Sequence, cap: int = DEFAULT_ENUM_CAP) -> list:
    """Breadth-first closure of the identity under left multiplication by generators.

    Raises:
        GroupTooLargeError: if more than ``cap`` elements are found.
    """
    gens = list(generators)
    start = gens[0].identity()
    seen = {start}
    order = [start]
    queue = deque([start])
    while queue:
        g = queue.popleft()
        for a in gens:
            h = a @ g
            if h not in seen:
                if len(order) >= cap:
                    raise GroupTooLargeError(
                        f"group has more than cap={cap} elements; raise the cap or "
                        "use Monte-Carlo routines",
                        cap=cap,
                    )
                seen.add(h)
                order.append(h)
                queue.append(h)
    return order


# --------------------------------------------------------------------------
# Group families
# --------------------------------------------------------------------------


class MonomialGroup:
    """MU(d, n) as a benchmarking target."""

    family = "mu"

    def __init__(self, d: int, n: int):
        if d < 1 or n < 3:
            raise ValueError(f"MU(d, n) needs d >= 1 and n >= 3, got d={d}, n={n}")
        self.d = d
        self.n = n

    @property
    def order(self) -> int:
        return math.factorial(self.d) * self.n**self.d

    def __repr__(self) -> str:
        return f"MU({self.d},{self.n})"

    def identity(self) -> MonomialElement:
        return MonomialElement.identity_of(self.d, self.n)

    def generators(self, lazy: bool = True) -> GeneratorSet:
        return mu_generator_set(self.d, self.n, lazy=lazy)

    def enumerate(self, cap: int = DEFAULT_ENUM_CAP) -> list:
        if self.order > cap:
            raise GroupTooLargeError(
                f"{self!r} has {self.order} elements, above cap={cap}", cap=cap
            )
        return _mu_enumeration(self.d, self.n)

    def sample(self, rng: np.random.Generator) -> MonomialElement:
        return mu_sample_uniform(self.d, self.n, rng)

    def sample_unitaries(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """``count`` i.i.d. uniform elements as a (count, d, d) unitary stack."""
        perms = rng.permuted(np.tile(np.arange(self.d), (count, 1)), axis=1)
        phases = rng.integers(0, self.n, size=(count, self.d))
        return mu_unitaries(perms, phases, self.n)


@lru_cache(maxsize=None)
def _mu_enumeration(d: int, n: int) -> list:
    return bfs_enumerate(mu_generator_set(d, n), cap=math.factorial(d) * n**d) if d > 1 else [
        MonomialElement([0], [k], n) for k in range(n)
    ]


class CliffordGroup:
    """C(qubits) as a benchmarking target.

    Uniform sampling goes through the enumerated group and is therefore only
    available while the group fits under the enumeration cap (one or two
    qubits); larger registers must use the walk or generator protocols.
    """

    family = "clifford"

    def __init__(self, qubits: int):
        if qubits < 1:
            raise ValueError(f"need at least one qubit, got {qubits}")
        self.qubits = qubits
        self.d = 2**qubits

    @property
    def order(self) -> int:
        n = self.qubits
        size = 2 ** (n * n + 2 * n)
        for j in range(1, n + 1):
            size *= 4**j - 1
        return size

    def __repr__(self) -> str:
        return f"Clifford({self.qubits})"

    def identity(self) -> CliffordElement:
        return cl_canonicalize(np.eye(self.d), self.qubits)

    def generators(self, lazy: bool = True) -> GeneratorSet:
        return clifford_generator_set(self.qubits, lazy=lazy)

    def enumerate(self, cap: int = DEFAULT_ENUM_CAP) -> list:
        if self.order > cap:
            raise GroupTooLargeError(
                f"{self!r} has {self.order} elements (up to phase), above cap={cap}",
                cap=cap,
            )
        return _clifford_enumeration(self.qubits)

    def exact_table(self) -> np.ndarray:
        """All elements as a (|G|, d, d) unitary stack; the exact uniform sampler draws from it."""
        self._enumerated_or_raise()
        return _clifford_table(self.qubits)

    def sample(self, rng: np.random.Generator) -> CliffordElement:
        elems = self._enumerated_or_raise()
        return elems[int(rng.integers(len(elems)))]

    def sample_unitaries(self, rng: np.random.Generator, count: int) -> np.ndarray:
        table = self.exact_table()
        return table[rng.integers(0, table.shape[0], size=count)]

    def _enumerated_or_raise(self) -> list:
        try:
            return self.enumerate()
        except GroupTooLargeError as exc:
            raise UnsupportedSamplingError(
                f"exact uniform sampling of {self!r} is not available; use the walk "
                "protocol, whose approximate samples carry the total-variation "
                "stability guarantee"
            ) from exc


@lru_cache(maxsize=None)
def _clifford_enumeration(qubits: int) -> list:
    return bfs_enumerate(clifford_generator_set(qubits), cap=DEFAULT_ENUM_CAP)


@lru_cache(maxsize=None)
def _clifford_table(qubits: int) -> np.ndarray:
    return np.stack([g.matrix for g in _clifford_enumeration(qubits)])
