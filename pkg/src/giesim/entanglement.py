"""Entanglement quantifiers and witnesses."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .qcore import (
    POSITIVITY_TOL,
    CompositeSpace,
    DensityMatrix,
    DomainError,
    PreconditionError,
    PureState,
    partial_transpose,
)

PPT_TOL = POSITIVITY_TOL
MAX_ENTANGLED_TOL = 1e-10

_SY = np.array([[0, -1j], [1j, 0]])
_SYSY = np.kron(_SY, _SY)


@dataclass(frozen=True)
class BipartitionSpec:
    space: CompositeSpace
    side_a: tuple[int, ...]
    side_b: tuple[int, ...]

    def __post_init__(self):
        a = tuple(sorted(int(i) for i in self.side_a))
        b = tuple(sorted(int(i) for i in self.side_b))
        n = self.space.n_subsystems
        if not a or not b:
            raise DomainError("both sides of a bipartition must be nonempty")
        if set(a) & set(b):
            raise DomainError(f"bipartition sides overlap: {a} / {b}")
        if set(a) | set(b) != set(range(n)):
            raise DomainError(f"bipartition {a} / {b} does not cover all {n} subsystems")
        object.__setattr__(self, "side_a", a)
        object.__setattr__(self, "side_b", b)

    @classmethod
    def of(cls, space: CompositeSpace, side_a: Iterable[int]) -> "BipartitionSpec":
        a = tuple(side_a)
        return cls(space, a, tuple(i for i in range(space.n_subsystems) if i not in a))


def _two_qubit(rho: DensityMatrix) -> None:
    if rho.dims != (2, 2):
        raise DomainError(f"expected a two-qubit state, got dims {rho.dims}")


def _default_split(rho: DensityMatrix, split: BipartitionSpec | None) -> BipartitionSpec:
    if split is None:
        if rho.space.n_subsystems != 2:
            raise DomainError("a bipartition is required for more than two subsystems")
        return BipartitionSpec(rho.space, (0,), (1,))
    if split.space != rho.space:
        raise DomainError(f"bipartition space {split.space.dims} does not match {rho.dims}")
    return split


def partial_transpose_spectrum(rho: DensityMatrix, split: BipartitionSpec | None = None) -> np.ndarray:
    split = _default_split(rho, split)
    mat = rho.matrix
    for index in split.side_b:
        mat = partial_transpose(mat, index, dims=rho.space)
    return np.linalg.eigvalsh(0.5 * (mat + mat.conj().T))


def negativity(rho: DensityMatrix, split: BipartitionSpec | None = None) -> float:
    """Sum of the magnitudes of the negative eigenvalues of the partial transpose."""
    eigs = partial_transpose_spectrum(rho, split)
    return max(0.0, float(-eigs[eigs < 0].sum()))


def is_ppt(rho: DensityMatrix, split: BipartitionSpec | None = None) -> bool:
    return bool(partial_transpose_spectrum(rho, split)[0] >= -PPT_TOL)


def concurrence(rho: DensityMatrix) -> float:
    """Wootters concurrence of a two-qubit state.

    The decreasing square roots of the eigenvalues of ``rho (Y x Y) rho* (Y x Y)``
    are obtained as singular values of ``sqrt(rho) (Y x Y) sqrt(rho)* (Y x Y)``,
    which stays accurate for rank-deficient (e.g. pure) inputs.
    """
    if isinstance(rho, PureState):
        rho = rho.density()
    _two_qubit(rho)
    vals, vecs = np.linalg.eigh(rho.matrix)
    root = (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.conj().T
    lam = np.linalg.svd(root @ _SYSY @ root.conj() @ _SYSY, compute_uv=False)
    return float(min(1.0, max(0.0, lam[0] - lam[1] - lam[2] - lam[3])))


def pure_concurrence(psi: PureState) -> float:
    """``2 |ad - bc|`` for a two-qubit pure state ``(a, b, c, d)``."""
    if psi.dims != (2, 2):
        raise DomainError(f"expected a two-qubit state, got dims {psi.dims}")
    a, b, c, d = psi.amplitudes
    return float(2 * abs(a * d - b * c))


def linear_entropy(rho: DensityMatrix, normalized: bool = False) -> float:
    """``1 - Tr(rho^2)``; ``normalized`` rescales by ``d/(d-1)`` onto [0, 1]."""
    value = 1.0 - rho.purity()
    if normalized:
        d = rho.space.total_dim
        value *= d / (d - 1)
    return value


def is_maximally_entangled(target: PureState, tol: float = MAX_ENTANGLED_TOL) -> bool:
    if target.dims != (2, 2):
        return False
    m = target.amplitudes.reshape(2, 2)
    half = np.eye(2) / 2
    marginals = (m @ m.conj().T, m.T @ m.conj())
    return all(np.max(np.abs(r - half)) <= tol for r in marginals)


def witness_expectation(rho: DensityMatrix, target: PureState) -> float:
    """``Tr(W rho)`` for the projective witness ``W = I/2 - |target><target|``.

    Separable states give values >= 0; a negative value certifies entanglement.
    """
    _two_qubit(rho)
    if not is_maximally_entangled(target):
        raise PreconditionError("witness target must be a maximally entangled two-qubit state")
    t = target.amplitudes
    return float(0.5 - np.real(np.vdot(t, rho.matrix @ t)))


def bell_states() -> dict[str, PureState]:
    s = 1 / np.sqrt(2)
    vecs = {
        "phi+": [s, 0, 0, s],
        "phi-": [s, 0, 0, -s],
        "psi+": [0, s, s, 0],
        "psi-": [0, s, -s, 0],
    }
    return {name: PureState.from_vector(v, (2, 2)) for name, v in vecs.items()}


def adapted_witness_target(rho: DensityMatrix) -> PureState:
    """Maximally entangled state closest to the dominant eigenvector of ``rho``.

    For a pure state with Schmidt form ``sum s_i |u_i v_i>`` the overlap with a
    maximally entangled state peaks at ``sum |u_i v_i> / sqrt(2)``.
    """
    _two_qubit(rho)
    _, vecs = np.linalg.eigh(rho.matrix)
    u, _, vh = np.linalg.svd(vecs[:, -1].reshape(2, 2))
    return PureState.from_vector((u @ vh).ravel() / np.sqrt(2), (2, 2), normalize=True)
