"""Dense linear algebra on small composite Hilbert spaces.

States and operators live on a :class:`CompositeSpace` whose first subsystem
is the slowest-varying index of the flattened vector (row-major / C order).
A single bosonic mode is represented in a truncated Fock basis
``|0>, ..., |N-1>``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np
import scipy.linalg
from scipy.special import gammainc, gammaln

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
POSITIVITY_TOL = 1e-10
DEFAULT_TAIL_TOL = 1e-12
MIN_FOCK_DIM = 16


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class PreconditionError(ValueError):
    """A numerical precondition of an operation is not met."""


class TruncationError(PreconditionError):
    """A Fock truncation is too small for the requested amplitude."""

    def __init__(self, message: str, tail_weight: float):
        super().__init__(message)
        self.tail_weight = tail_weight


def _frozen(array: np.ndarray) -> np.ndarray:
    out = np.array(array, dtype=complex, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class CompositeSpace:
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims:
            raise DomainError("a composite space needs at least one subsystem")
        if any(d < 2 for d in dims):
            raise DomainError(f"every subsystem dimension must be >= 2, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def n_subsystems(self) -> int:
        return len(self.dims)

    def check_index(self, index: int) -> int:
        if not 0 <= index < len(self.dims):
            raise DomainError(f"subsystem index {index} out of range for dims {self.dims}")
        return index

    def subspace(self, keep: Sequence[int]) -> "CompositeSpace":
        return CompositeSpace(tuple(self.dims[i] for i in keep))

    def __add__(self, other: "CompositeSpace") -> "CompositeSpace":
        return CompositeSpace(self.dims + other.dims)


def _as_space(space: Union[CompositeSpace, Sequence[int]]) -> CompositeSpace:
    return space if isinstance(space, CompositeSpace) else CompositeSpace(tuple(space))


@dataclass(frozen=True, eq=False)
class PureState:
    space: CompositeSpace
    amplitudes: np.ndarray

    def __post_init__(self):
        space = _as_space(self.space)
        amps = _frozen(np.ravel(self.amplitudes))
        if amps.shape != (space.total_dim,):
            raise DomainError(
                f"amplitude vector has length {amps.size}, space needs {space.total_dim}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise DomainError(f"state is not normalized (norm = {norm!r})")
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_vector(cls, vector, dims, normalize: bool = True) -> "PureState":
        vec = np.asarray(vector, dtype=complex).ravel()
        if normalize:
            norm = np.linalg.norm(vec)
            if norm == 0:
                raise DomainError("cannot normalize the zero vector")
            vec = vec / norm
        return cls(_as_space(dims), vec)

    @classmethod
    def basis(cls, levels: Sequence[int], dims) -> "PureState":
        """Computational basis ket ``|levels[0] levels[1] ...>``."""
        space = _as_space(dims)
        if len(levels) != space.n_subsystems:
            raise DomainError("one level per subsystem is required")
        vec = np.zeros(space.total_dim, dtype=complex)
        vec[np.ravel_multi_index(tuple(levels), space.dims)] = 1.0
        return cls(space, vec)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.space.dims

    def density(self) -> "DensityMatrix":
        return DensityMatrix(self.space, np.outer(self.amplitudes, self.amplitudes.conj()))

    def evolve(self, unitary: np.ndarray) -> "PureState":
        # Renormalize to absorb round-off and truncation leakage.
        return PureState.from_vector(unitary @ self.amplitudes, self.space)

    def inner(self, other: "PureState") -> complex:
        """``<self|other>``."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    space: CompositeSpace
    matrix: np.ndarray
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        space = _as_space(self.space)
        mat = _frozen(self.matrix)
        n = space.total_dim
        if mat.shape != (n, n):
            raise DomainError(f"matrix shape {mat.shape} does not match dimension {n}")
        if self.validate:
            herm_err = np.max(np.abs(mat - mat.conj().T))
            if herm_err > HERMITIAN_TOL:
                raise DomainError(f"density matrix not Hermitian (max deviation {herm_err:.3g})")
            tr = np.trace(mat).real
            if abs(tr - 1.0) > TRACE_TOL:
                raise DomainError(f"density matrix trace is {tr!r}, expected 1")
            min_eig = np.linalg.eigvalsh(mat)[0]
            if min_eig < -POSITIVITY_TOL:
                raise DomainError(f"density matrix has eigenvalue {min_eig:.3g} < 0")
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def from_matrix(cls, matrix, dims, symmetrize: bool = True) -> "DensityMatrix":
        """Build from a raw matrix, optionally Hermitian-symmetrizing and
        renormalizing the trace to remove accumulated round-off."""
        mat = np.asarray(matrix, dtype=complex)
        if symmetrize:
            mat = 0.5 * (mat + mat.conj().T)
            mat = mat / np.trace(mat).real
        return cls(_as_space(dims), mat)

    @classmethod
    def maximally_mixed(cls, dims) -> "DensityMatrix":
        space = _as_space(dims)
        return cls(space, np.eye(space.total_dim) / space.total_dim)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.space.dims

    def purity(self) -> float:
        return float(np.sum(np.abs(self.matrix) ** 2))

    def expectation(self, operator: np.ndarray) -> complex:
        return complex(np.trace(operator @ self.matrix))


State = Union[PureState, DensityMatrix]


def tensor(a, b):
    """Kronecker product of two states or two operators.

    The left factor occupies the lower subsystem indices. A pure state combined
    with a density matrix is promoted to a density matrix; combining a state
    with a bare operator matrix raises ``TypeError``.
    """
    a_state = isinstance(a, (PureState, DensityMatrix))
    b_state = isinstance(b, (PureState, DensityMatrix))
    if a_state != b_state:
        raise TypeError("cannot take the tensor product of a state and an operator")
    if not a_state:
        return np.kron(np.asarray(a), np.asarray(b))
    space = a.space + b.space
    if isinstance(a, PureState) and isinstance(b, PureState):
        return PureState.from_vector(np.kron(a.amplitudes, b.amplitudes), space)
    ma = a.density().matrix if isinstance(a, PureState) else a.matrix
    mb = b.density().matrix if isinstance(b, PureState) else b.matrix
    return DensityMatrix(space, np.kron(ma, mb))


_LETTERS = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"


def partial_trace(rho: DensityMatrix, keep: Iterable[int]) -> DensityMatrix:
    """Reduced state on the subsystems in ``keep`` (original order retained)."""
    space = rho.space
    keep = sorted({space.check_index(int(i)) for i in keep})
    if not keep:
        raise DomainError("keep must name at least one subsystem")
    n = space.n_subsystems
    if len(keep) == n:
        return rho
    row = list(_LETTERS[:n])
    col = [row[i] if i not in keep else _LETTERS[n + i] for i in range(n)]
    out = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    tensor_form = rho.matrix.reshape(space.dims + space.dims)
    reduced = np.einsum(f"{''.join(row)}{''.join(col)}->{out}", tensor_form)
    sub = space.subspace(keep)
    return DensityMatrix.from_matrix(reduced.reshape(sub.total_dim, sub.total_dim), sub)


def partial_transpose(rho, subsystem: int, dims=None) -> np.ndarray:
    """Transpose the indices of one subsystem.

    ``rho`` is a :class:`DensityMatrix`, or a square array together with
    ``dims``. The result is returned as a plain Hermitian array since it need
    not be positive.
    """
    if isinstance(rho, DensityMatrix):
        space, mat = rho.space, rho.matrix
    else:
        if dims is None:
            raise DomainError("dims are required when passing a bare matrix")
        space, mat = _as_space(dims), np.asarray(rho)
    space.check_index(subsystem)
    n = space.n_subsystems
    axes = list(range(2 * n))
    axes[subsystem], axes[n + subsystem] = axes[n + subsystem], axes[subsystem]
    out = mat.reshape(space.dims + space.dims).transpose(axes)
    return out.reshape(space.total_dim, space.total_dim)


def expm(generator: np.ndarray) -> np.ndarray:
    """Matrix exponential (scaling and squaring with Pade approximants)."""
    return scipy.linalg.expm(generator)


# -- truncated Fock space ---------------------------------------------------


def coherent_tail_weight(alpha: complex, n_levels: int) -> float:
    """Probability that a coherent state of amplitude ``alpha`` has n >= n_levels."""
    lam = abs(alpha) ** 2
    if lam == 0.0:
        return 0.0
    return float(gammainc(n_levels, lam))


@dataclass(frozen=True)
class FockSpace:
    n_levels: int
    tail_tolerance: float = DEFAULT_TAIL_TOL

    def __post_init__(self):
        if int(self.n_levels) < 2:
            raise DomainError(f"Fock truncation must be >= 2, got {self.n_levels}")
        if not self.tail_tolerance > 0:
            raise DomainError("tail_tolerance must be positive")
        object.__setattr__(self, "n_levels", int(self.n_levels))

    @classmethod
    def for_amplitude(
        cls,
        alpha_max: float,
        tail_tolerance: float = DEFAULT_TAIL_TOL,
        minimum: int = MIN_FOCK_DIM,
    ) -> "FockSpace":
        """Smallest truncation (at least ``minimum``) whose coherent tail for
        ``|alpha| <= alpha_max`` is below ``tail_tolerance``."""
        lam = abs(alpha_max) ** 2
        n = max(int(minimum), 2)
        if coherent_tail_weight(alpha_max, n) >= tail_tolerance:
            n = max(n, int(lam))
            while coherent_tail_weight(alpha_max, n) >= tail_tolerance:
                n += 1
        return cls(n, tail_tolerance)

    @property
    def space(self) -> CompositeSpace:
        return CompositeSpace((self.n_levels,))

    def check_amplitude(self, alpha: complex) -> None:
        tail = coherent_tail_weight(alpha, self.n_levels)
        if tail >= self.tail_tolerance:
            raise TruncationError(
                f"Fock truncation N={self.n_levels} too small for |alpha|={abs(alpha):.6g}: "
                f"tail weight {tail:.3e} >= {self.tail_tolerance:.1e}",
                tail,
            )

    def annihilation(self) -> np.ndarray:
        return np.diag(np.sqrt(np.arange(1, self.n_levels, dtype=float)), 1).astype(complex)

    def number(self) -> np.ndarray:
        return np.diag(np.arange(self.n_levels, dtype=float)).astype(complex)


def coherent_state(alpha: complex, fock: FockSpace) -> PureState:
    """Coherent state ``|alpha>`` truncated to ``fock.n_levels`` levels."""
    fock.check_amplitude(alpha)
    n = np.arange(fock.n_levels)
    if alpha == 0:
        vec = (n == 0).astype(complex)
    else:
        r, theta = abs(alpha), np.angle(alpha)
        log_mag = -0.5 * r * r + n * np.log(r) - 0.5 * gammaln(n + 1)
        vec = np.exp(log_mag + 1j * n * theta)
    return PureState.from_vector(vec, fock.space)


def displacement(beta: complex, fock: FockSpace) -> np.ndarray:
    """``exp(beta a^dagger - beta^* a)`` on the truncated space."""
    fock.check_amplitude(beta)
    a = fock.annihilation()
    return expm(beta * a.conj().T - np.conj(beta) * a)


def displacement_operator(xi: float, fock: FockSpace) -> np.ndarray:
    """``D(xi) = exp(sqrt(xi) (a^dagger - a))`` for a coupling ``xi >= 0``."""
    if xi < 0:
        raise DomainError(f"coupling xi must be >= 0, got {xi}")
    return displacement(np.sqrt(xi), fock)


def number_phase_operator(w: float, fock: FockSpace) -> np.ndarray:
    """Diagonal unitary ``exp(i w n)``."""
    return np.diag(np.exp(1j * w * np.arange(fock.n_levels)))


def embed(operator: np.ndarray, index: int, space: CompositeSpace) -> np.ndarray:
    """Lift a single-subsystem operator to the full space."""
    space.check_index(index)
    out = np.array([[1.0 + 0j]])
    for i, d in enumerate(space.dims):
        out = np.kron(out, operator if i == index else np.eye(d))
    return out


def random_pure_state(dims, rng: np.random.Generator) -> PureState:
    space = _as_space(dims)
    vec = rng.normal(size=space.total_dim) + 1j * rng.normal(size=space.total_dim)
    return PureState.from_vector(vec, space)


def random_density_matrix(dims, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    """Random mixed state from a Ginibre matrix of the given rank."""
    space = _as_space(dims)
    n = space.total_dim
    k = n if rank is None else rank
    g = rng.normal(size=(n, k)) + 1j * rng.normal(size=(n, k))
    return DensityMatrix.from_matrix(g @ g.conj().T, space)
