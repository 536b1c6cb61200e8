"""States, superoperators, fidelities and the noise models.

Vectorization convention: column stacking, ``vec(X) = X.reshape(-1, order="F")``.
Under it ``vec(A X B) = (B.T kron A) vec(X)``, so the conjugation channel
``X -> U X U^dag`` has matrix ``kron(U.conj(), U)``. Every superoperator in
the package follows this convention; Choi matrices are indexed as
``(output, reference)`` pairs, ``tau_T = (T x id)(|Omega><Omega|)``.

Channel-like objects (``Superoperator`` and every ``NoiseModel``) expose
``dim``, ``superoperator()`` and a batched state-level ``apply(rho)`` that
works on arrays of shape ``(..., d, d)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import unitary_group

from .errors import InfeasibleSizeError

DENSE_DIM_CAP = 64
HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-9


def vec(x: np.ndarray) -> np.ndarray:
    """Column-stack the last two axes."""
    x = np.asarray(x)
    d = x.shape[-1]
    return np.swapaxes(x, -1, -2).reshape(x.shape[:-2] + (d * d,))


def unvec(v: np.ndarray, d: int) -> np.ndarray:
    v = np.asarray(v)
    return np.swapaxes(v.reshape(v.shape[:-1] + (d, d)), -1, -2)


def _check_dense(d: int) -> None:
    if d > DENSE_DIM_CAP:
        raise InfeasibleSizeError(
            f"dense superoperators are capped at d <= {DENSE_DIM_CAP} "
            f"(matrix side {DENSE_DIM_CAP**2}); got d={d}, use the state-level path",
            cap=DENSE_DIM_CAP,
        )


# --------------------------------------------------------------------------
# states and effects
# --------------------------------------------------------------------------


def check_density(rho: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise ValueError(f"density matrix has trace {np.trace(rho).real:.6g}, expected 1")
    if np.linalg.eigvalsh(rho).min() < -PSD_TOL:
        raise ValueError("density matrix has a negative eigenvalue")
    return rho


def check_effect(e: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    e = np.asarray(e, dtype=complex)
    if e.ndim != 2 or e.shape[0] != e.shape[1]:
        raise ValueError(f"POVM effect must be square, got shape {e.shape}")
    if np.max(np.abs(e - e.conj().T)) > tol:
        raise ValueError("POVM effect is not Hermitian")
    ev = np.linalg.eigvalsh(e)
    if ev.min() < -PSD_TOL or ev.max() > 1 + PSD_TOL:
        raise ValueError("POVM effect eigenvalues must lie in [0, 1]")
    return e


def basis_state(d: int, i: int = 0) -> np.ndarray:
    """``|i><i|`` in dimension d."""
    rho = np.zeros((d, d), dtype=complex)
    rho[i, i] = 1
    return rho


def max_entangled(d: int) -> np.ndarray:
    """``|Omega><Omega|`` with ``|Omega> = sum_i |ii> / sqrt(d)``."""
    if d < 2:
        raise ValueError(f"need d >= 2, got {d}")
    omega = np.zeros(d * d, dtype=complex)
    omega[np.arange(d) * (d + 1)] = 1 / np.sqrt(d)
    return np.outer(omega, omega.conj())


def random_density(d: int, rng: np.random.Generator) -> np.ndarray:
    """Hilbert-Schmidt random state ``G G^dag / tr(G G^dag)``."""
    if d < 2:
        raise ValueError(f"need d >= 2, got {d}")
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_isometry(d: int, rng: np.random.Generator) -> np.ndarray:
    """Isometry C^d -> C^d (x) C^d from the QR factor of a d^2 x d Ginibre matrix."""
    g = rng.standard_normal((d * d, d)) + 1j * rng.standard_normal((d * d, d))
    q, r = np.linalg.qr(g)
    # fix column phases so the distribution is unitarily invariant
    return q * (np.diag(r) / np.abs(np.diag(r)))


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    return unitary_group.rvs(d, random_state=rng)


# --------------------------------------------------------------------------
# superoperators
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Superoperator:
    """Linear map on d x d matrices, stored as a d^2 x d^2 matrix on vec()."""

    matrix: np.ndarray
    dim: int = field(default=0)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        d = self.dim or int(round(np.sqrt(m.shape[0])))
        if m.shape != (d * d, d * d):
            raise ValueError(f"superoperator matrix must be {d * d}x{d * d}, got {m.shape}")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dim", d)

    @classmethod
    def identity(cls, d: int) -> "Superoperator":
        return cls(np.eye(d * d, dtype=complex), d)

    @classmethod
    def from_unitary(cls, u: np.ndarray) -> "Superoperator":
        u = np.asarray(u, dtype=complex)
        _check_dense(u.shape[0])
        return cls(np.kron(u.conj(), u), u.shape[0])

    @classmethod
    def from_kraus(cls, kraus) -> "Superoperator":
        kraus = np.asarray(kraus, dtype=complex)
        d = kraus.shape[-1]
        _check_dense(d)
        return cls(sum(np.kron(k.conj(), k) for k in kraus), d)

    def superoperator(self) -> "Superoperator":
        return self

    def __matmul__(self, other: "Superoperator") -> "Superoperator":
        return superop_compose(self, other)

    def __add__(self, other: "Superoperator") -> "Superoperator":
        _same_dim(self, other)
        return Superoperator(self.matrix + other.matrix, self.dim)

    def __mul__(self, c) -> "Superoperator":
        return Superoperator(c * self.matrix, self.dim)

    __rmul__ = __mul__

    def power(self, m: int) -> "Superoperator":
        return superop_power(self, m)

    def adjoint(self) -> "Superoperator":
        """Hilbert-Schmidt adjoint (Heisenberg picture)."""
        return Superoperator(self.matrix.conj().T, self.dim)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def apply(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        return unvec(vec(rho) @ self.matrix.T, self.dim)

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return self.apply(rho)

    def is_trace_preserving(self, tol: float = 1e-9) -> bool:
        # tr(X) = vec(I)^T vec(X); preserved iff vec(I)^T S = vec(I)^T
        tr_row = vec(np.eye(self.dim))
        return bool(np.max(np.abs(tr_row @ self.matrix - tr_row)) < tol)

    def is_completely_positive(self, tol: float = 1e-8) -> bool:
        c = choi(self, check=False)
        return bool(np.linalg.eigvalsh((c + c.conj().T) / 2).min() > -tol)

    def is_channel(self) -> bool:
        return self.is_trace_preserving() and self.is_completely_positive()


def _same_dim(a, b) -> None:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")


def as_superoperator(channel) -> Superoperator:
    """Dense superoperator of any channel-like object."""
    if isinstance(channel, Superoperator):
        return channel
    return channel.superoperator()


def superop_compose(a: Superoperator, b: Superoperator) -> Superoperator:
    """``a o b``: apply ``b`` first."""
    _same_dim(a, b)
    return Superoperator(a.matrix @ b.matrix, a.dim)


def superop_power(a: Superoperator, m: int) -> Superoperator:
    if m < 0:
        raise ValueError(f"power must be non-negative, got {m}")
    return Superoperator(np.linalg.matrix_power(a.matrix, m), a.dim)


def apply(channel, rho: np.ndarray) -> np.ndarray:
    return channel.apply(rho)


def adjoint_channel(g, direction: str = "forward") -> Superoperator:
    """Conjugation channel of a group element (or unitary).

    ``direction="forward"`` gives ``X -> U X U^dag``; ``"adjoint"`` gives
    ``X -> U^dag X U``.
    """
    u = g.to_unitary() if hasattr(g, "to_unitary") else np.asarray(g, dtype=complex)
    if direction == "forward":
        return Superoperator.from_unitary(u)
    if direction == "adjoint":
        return Superoperator.from_unitary(u.conj().T)
    raise ValueError(f"direction must be 'forward' or 'adjoint', got {direction!r}")


def choi(channel, check: bool = True) -> np.ndarray:
    """Choi state ``(T x id)(|Omega><Omega|)`` on C^d (x) C^d."""
    s = as_superoperator(channel)
    d = s.dim
    if check and not s.is_channel():
        warnings.warn("Choi state requested for a map that is not a channel", stacklevel=2)
    # S[a + b d, i + j d] = T(|i><j|)[a, b]  ->  C[(a, i), (b, j)]
    s4 = s.matrix.reshape(d, d, d, d)  # [b, a, j, i]
    return s4.transpose(1, 3, 0, 2).reshape(d * d, d * d) / d


def entanglement_fidelity(channel) -> float:
    """``tr(S) / d^2`` for the superoperator S of the channel."""
    s = as_superoperator(channel)
    return float(np.trace(s.matrix).real) / s.dim**2


def entanglement_fidelity_choi(channel) -> float:
    """Same quantity computed as ``<Omega| tau_T |Omega>``."""
    s = as_superoperator(channel)
    return float(np.trace(choi(s, check=False) @ max_entangled(s.dim)).real)


def average_fidelity(f_e: float, d: int) -> float:
    return (d * f_e + 1) / (d + 1)


def sequence_fidelity(rho: np.ndarray, effect: np.ndarray, ops) -> float:
    """``Re tr(E * (op_k o ... o op_1)(rho))``; ``ops`` are applied in list order."""
    state = np.asarray(rho, dtype=complex)
    d = state.shape[-1]
    for op in ops:
        if op.dim != d:
            raise ValueError(f"channel of dimension {op.dim} applied to a {d}-level state")
        state = op.apply(state)
    if np.shape(effect) != (d, d):
        raise ValueError(f"effect shape {np.shape(effect)} does not match dimension {d}")
    return float(np.real(np.trace(state @ effect)))


# --------------------------------------------------------------------------
# noise models
# --------------------------------------------------------------------------


def _check_prob(x: float, name: str) -> float:
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {x}")
    return float(x)


class NoiseModel:
    """Base class; subclasses define ``dim``, ``apply`` and ``superoperator``."""

    dim: int

    def __call__(self, rho):
        return self.apply(rho)


@dataclass(frozen=True, eq=False)
class IdentityNoise(NoiseModel):
    dim: int

    def apply(self, rho):
        return np.asarray(rho, dtype=complex)

    def superoperator(self) -> Superoperator:
        _check_dense(self.dim)
        return Superoperator.identity(self.dim)


@dataclass(frozen=True, eq=False)
class DepolarizeToState(NoiseModel):
    """``rho -> p rho + (1 - p) tr(rho) sigma``."""

    p: float
    sigma: np.ndarray

    def __post_init__(self):
        _check_prob(self.p, "p")
        object.__setattr__(self, "sigma", check_density(self.sigma))

    @property
    def dim(self) -> int:
        return self.sigma.shape[0]

    def apply(self, rho):
        rho = np.asarray(rho, dtype=complex)
        tr = np.trace(rho, axis1=-2, axis2=-1)[..., None, None]
        return self.p * rho + (1 - self.p) * tr * self.sigma

    def superoperator(self) -> Superoperator:
        d = self.dim
        _check_dense(d)
        m = self.p * np.eye(d * d) + (1 - self.p) * np.outer(vec(self.sigma), vec(np.eye(d)))
        return Superoperator(m, d)


@dataclass(frozen=True, eq=False)
class RandomIsometry(NoiseModel):
    """``rho -> p rho + (1 - p) tr_2(V rho V^dag)`` for an isometry V: C^d -> C^d (x) C^d."""

    p: float
    isometry: np.ndarray

    def __post_init__(self):
        _check_prob(self.p, "p")
        v = np.asarray(self.isometry, dtype=complex)
        d = v.shape[1]
        if v.shape != (d * d, d):
            raise ValueError(f"isometry must have shape (d^2, d), got {v.shape}")
        if np.max(np.abs(v.conj().T @ v - np.eye(d))) > 1e-10:
            raise ValueError("isometry columns are not orthonormal")
        object.__setattr__(self, "isometry", v)

    @property
    def dim(self) -> int:
        return self.isometry.shape[1]

    @property
    def kraus(self) -> np.ndarray:
        """Kraus operators of the partial-trace part, ``K_k = (I x <k|) V``."""
        d = self.dim
        return self.isometry.reshape(d, d, d).transpose(1, 0, 2)

    def apply(self, rho):
        rho = np.asarray(rho, dtype=complex)
        k = self.kraus
        mixed = np.einsum("kab,...bc,kdc->...ad", k, rho, k.conj(), optimize=True)
        return self.p * rho + (1 - self.p) * mixed

    def superoperator(self) -> Superoperator:
        d = self.dim
        _check_dense(d)
        part = Superoperator.from_kraus(self.kraus).matrix
        return Superoperator(self.p * np.eye(d * d) + (1 - self.p) * part, d)


@dataclass(frozen=True, eq=False)
class UnitaryConjugation(NoiseModel):
    unitary: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.unitary, dtype=complex)
        if np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) > 1e-10:
            raise ValueError("noise unitary is not unitary")
        object.__setattr__(self, "unitary", u)

    @property
    def dim(self) -> int:
        return self.unitary.shape[0]

    def apply(self, rho):
        u = self.unitary
        return u @ np.asarray(rho, dtype=complex) @ u.conj().T

    def superoperator(self) -> Superoperator:
        return Superoperator.from_unitary(self.unitary)


@dataclass(frozen=True, eq=False)
class DeltaCovariant(NoiseModel):
    """``(1 - delta) T_c + delta T_n``."""

    delta: float
    covariant: object
    other: object

    def __post_init__(self):
        _check_prob(self.delta, "delta")
        if self.covariant.dim != self.other.dim:
            raise ValueError("component channels have different dimensions")

    @property
    def dim(self) -> int:
        return self.covariant.dim

    def apply(self, rho):
        return (1 - self.delta) * self.covariant.apply(rho) + self.delta * self.other.apply(rho)

    def superoperator(self) -> Superoperator:
        a = as_superoperator(self.covariant)
        b = as_superoperator(self.other)
        return Superoperator((1 - self.delta) * a.matrix + self.delta * b.matrix, self.dim)


def x_rotation_unitary(thetas) -> np.ndarray:
    """``kron_j exp(i theta_j X)``."""
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    u = np.eye(1, dtype=complex)
    for t in thetas:
        u = np.kron(u, np.cos(t) * np.eye(2) + 1j * np.sin(t) * x)
    return u


NOISE_KINDS = (
    "identity",
    "depolarize",
    "random_isometry",
    "x_rotation",
    "haar_unitary_mix",
    "delta_covariant",
)


def make_noise(
    kind: str,
    d: int,
    rng: np.random.Generator,
    p: float = 1.0,
    delta: float = 0.0,
    a: float = 0.1,
    sigma: np.ndarray | None = None,
) -> NoiseModel:
    """Draw one instance of a noise family.

    Args:
        kind: one of ``NOISE_KINDS``.
            ``depolarize`` depolarizes to ``sigma`` (a Hilbert-Schmidt random
            state when not given); ``random_isometry`` mixes the identity with
            a random Stinespring channel; ``x_rotation`` conjugates by
            ``kron_j exp(i theta_j X)`` with ``theta_j ~ U(0, a)`` (d must be a
            power of two); ``haar_unitary_mix`` is ``p rho + (1-p) U rho U^dag``
            with Haar U; ``delta_covariant`` is ``(1-delta) id + delta T_n``
            with ``T_n`` a random Stinespring channel.
        d: Hilbert-space dimension.
        rng: caller-owned generator; all randomness is drawn from it.
    """
    if kind == "identity":
        return IdentityNoise(d)
    if kind == "depolarize":
        return DepolarizeToState(p, random_density(d, rng) if sigma is None else sigma)
    if kind == "random_isometry":
        _check_prob(p, "p")
        return RandomIsometry(p, random_isometry(d, rng))
    if kind == "x_rotation":
        qubits = int(round(np.log2(d)))
        if 2**qubits != d:
            raise ValueError(f"x_rotation noise needs a qubit register, got d={d}")
        if a < 0:
            raise ValueError(f"angle range a must be non-negative, got {a}")
        return UnitaryConjugation(x_rotation_unitary(rng.uniform(0, a, size=qubits)))
    if kind == "haar_unitary_mix":
        _check_prob(p, "p")
        return DeltaCovariant(1 - p, IdentityNoise(d), UnitaryConjugation(haar_unitary(d, rng)))
    if kind == "delta_covariant":
        _check_prob(delta, "delta")
        return DeltaCovariant(delta, IdentityNoise(d), RandomIsometry(0.0, random_isometry(d, rng)))
    raise ValueError(f"unknown noise kind {kind!r}; expected one of {', '.join(NOISE_KINDS)}")
