"""Brute-force check that a classical mediator cannot entangle two qubits.

The register is Q1 (x) Q2 (x) C with C of dimension ``d_c``. A mediator is
"classical" when every operation touching it commutes with complete dephasing
of C in its one basis. Operations only ever couple one Qi to C.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np
from scipy.stats import unitary_group

from .entanglement import bell_states, negativity, witness_expectation
from .qcore import (
    CompositeSpace,
    DensityMatrix,
    DomainError,
    PreconditionError,
    partial_trace,
    random_density_matrix,
    tensor,
)

UNITARY_TOL = 1e-12
STOCHASTIC_TOL = 1e-12
COVARIANCE_TOL = 1e-10
SEPARABLE_TOL = 1e-10
D_C_RANGE = (2, 4)

KINDS = ("controlled_unitary", "measure_permute", "local_unitary", "stochastic")
_KIND_WEIGHTS = (0.4, 0.25, 0.15, 0.2)


def _superoperator(kraus: Sequence[np.ndarray]) -> np.ndarray:
    # Row-major vectorization: vec(K rho K^+) = (K (x) K*) vec(rho).
    ks = np.asarray(kraus)
    n = ks.shape[1]
    return np.einsum("kab,kcd->acbd", ks, ks.conj()).reshape(n * n, n * n)


@lru_cache(maxsize=None)
def _dephasing_superoperator(dims: tuple[int, ...], c_index: int) -> np.ndarray:
    out = _superoperator(dephasing_kraus(dims, c_index))
    out.flags.writeable = False
    return out


def dephasing_kraus(dims: Sequence[int], c_index: int) -> list[np.ndarray]:
    """Projectors onto the classical basis of subsystem ``c_index``."""
    ops = []
    for c in range(dims[c_index]):
        op = np.array([[1.0 + 0j]])
        for i, d in enumerate(dims):
            op = np.kron(op, _basis_projector(d, c) if i == c_index else np.eye(d))
        ops.append(op)
    return ops


def _basis_projector(d: int, c: int) -> np.ndarray:
    p = np.zeros((d, d), dtype=complex)
    p[c, c] = 1.0
    return p


def is_dephasing_covariant(
    kraus: Sequence[np.ndarray], dims: Sequence[int], c_index: int, tol: float = COVARIANCE_TOL
) -> bool:
    """True if the channel commutes with complete dephasing of subsystem ``c_index``."""
    channel = _superoperator(kraus)
    dephase = _dephasing_superoperator(tuple(dims), c_index)
    return bool(np.max(np.abs(channel @ dephase - dephase @ channel)) < tol)


def _check_unitary(u: np.ndarray, size: int) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.shape != (size, size):
        raise DomainError(f"expected a {size}x{size} unitary, got shape {u.shape}")
    if np.max(np.abs(u.conj().T @ u - np.eye(size))) > UNITARY_TOL:
        raise DomainError("matrix is not unitary")
    return u


def _permutation_matrix(perm: Sequence[int]) -> np.ndarray:
    d = len(perm)
    if sorted(perm) != list(range(d)):
        raise DomainError(f"{list(perm)} is not a permutation of 0..{d - 1}")
    mat = np.zeros((d, d), dtype=complex)
    mat[list(perm), list(range(d))] = 1.0
    return mat


@dataclass(frozen=True, eq=False)
class ClassicalOp:
    """One classicality-preserving step.

    ``kraus`` act on ``Q_target (x) C`` (dimension ``2 d_c``), except for
    ``stochastic`` where they act on C alone. Construct through the
    classmethods; the dephasing-covariance check runs at construction.
    """

    kind: str
    d_c: int
    kraus: tuple
    target: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown op kind {self.kind!r}")
        if self.kind == "stochastic":
            dims = (self.d_c,)
            c_index = 0
        else:
            if self.target not in (0, 1):
                raise DomainError("target must be 0 (Q1) or 1 (Q2)")
            dims = (2, self.d_c)
            c_index = 1
        if not is_dephasing_covariant(self.kraus, dims, c_index):
            raise DomainError(f"{self.kind} op does not commute with dephasing of C")

    @classmethod
    def controlled_unitary(cls, target: int, unitaries: Sequence[np.ndarray]) -> "ClassicalOp":
        """``sum_c U_c (x) |c><c|``: C's basis value selects the unitary on Q_target."""
        d_c = len(unitaries)
        op = sum(np.kron(_check_unitary(u, 2), _basis_projector(d_c, c)) for c, u in enumerate(unitaries))
        return cls("controlled_unitary", d_c, (op,), target)

    @classmethod
    def measure_permute(
        cls, target: int, basis: np.ndarray, permutations: Sequence[Sequence[int]]
    ) -> "ClassicalOp":
        """Measure Q_target in ``basis`` (columns) and permute C's labels by the outcome."""
        basis = _check_unitary(basis, 2)
        if len(permutations) != 2:
            raise DomainError("one permutation per measurement outcome is required")
        d_c = len(permutations[0])
        kraus = tuple(
            np.kron(np.outer(basis[:, m], basis[:, m].conj()), _permutation_matrix(perm))
            for m, perm in enumerate(permutations)
        )
        return cls("measure_permute", d_c, kraus, target)

    @classmethod
    def local_unitary(cls, target: int, unitary: np.ndarray, d_c: int) -> "ClassicalOp":
        return cls("local_unitary", d_c, (np.kron(_check_unitary(unitary, 2), np.eye(d_c)),), target)

    @classmethod
    def stochastic_map(cls, matrix: np.ndarray) -> "ClassicalOp":
        """Classical Markov step on C; ``matrix[c, c2]`` is the probability c -> c2."""
        s = np.asarray(matrix, dtype=float)
        d_c = s.shape[0]
        if s.shape != (d_c, d_c) or np.any(s < 0):
            raise DomainError("stochastic matrix must be square with nonnegative entries")
        if np.max(np.abs(s.sum(axis=1) - 1.0)) > STOCHASTIC_TOL:
            raise DomainError("stochastic matrix rows must sum to 1")
        kraus = []
        for c in range(d_c):
            for c2 in range(d_c):
                if s[c, c2] > 0:
                    k = np.zeros((d_c, d_c), dtype=complex)
                    k[c2, c] = math.sqrt(s[c, c2])
                    kraus.append(k)
        return cls("stochastic", d_c, tuple(kraus))

    def full_kraus(self) -> list[np.ndarray]:
        """Kraus operators on the whole register Q1 (x) Q2 (x) C."""
        if self.kind == "stochastic":
            return [np.kron(np.eye(4), k) for k in self.kraus]
        d = self.d_c
        out = []
        for k in self.kraus:
            t = k.reshape(2, d, 2, d)  # (q_out, c_out, q_in, c_in)
            eye = np.eye(2)
            if self.target == 0:
                full = np.einsum("acbd,ef->aecbfd", t, eye)
            else:
                full = np.einsum("acbd,ef->eacfbd", t, eye)
            out.append(full.reshape(4 * d, 4 * d))
        return out


@dataclass(frozen=True, eq=False)
class ClassicalCircuit:
    d_c: int
    ops: tuple[ClassicalOp, ...]
    seed: int | None = None

    def __post_init__(self):
        if not D_C_RANGE[0] <= self.d_c <= D_C_RANGE[1]:
            raise DomainError(f"d_C must be in {D_C_RANGE}, got {self.d_c}")
        for op in self.ops:
            if op.d_c != self.d_c:
                raise DomainError("all ops must share the circuit's C dimension")
        object.__setattr__(self, "ops", tuple(self.ops))

    @property
    def space(self) -> CompositeSpace:
        return CompositeSpace((2, 2, self.d_c))


def _haar(rng: np.random.Generator, d: int) -> np.ndarray:
    return unitary_group.rvs(d, random_state=rng)


def random_classical_circuit(seed: int, depth: int, d_c: int) -> ClassicalCircuit:
    """Random circuit of classicality-preserving ops; targets alternate Q1, Q2."""
    if depth < 1:
        raise DomainError(f"depth must be >= 1, got {depth}")
    if not D_C_RANGE[0] <= d_c <= D_C_RANGE[1]:
        raise DomainError(f"d_C must be in {D_C_RANGE}, got {d_c}")
    rng = np.random.default_rng(seed)
    ops = []
    for step in range(depth):
        target = step % 2
        kind = KINDS[rng.choice(len(KINDS), p=_KIND_WEIGHTS)]
        if kind == "controlled_unitary":
            ops.append(ClassicalOp.controlled_unitary(target, [_haar(rng, 2) for _ in range(d_c)]))
        elif kind == "measure_permute":
            perms = [rng.permutation(d_c).tolist() for _ in range(2)]
            ops.append(ClassicalOp.measure_permute(target, _haar(rng, 2), perms))
        elif kind == "local_unitary":
            ops.append(ClassicalOp.local_unitary(target, _haar(rng, 2), d_c))
        else:
            ops.append(ClassicalOp.stochastic_map(rng.dirichlet(np.ones(d_c), size=d_c)))
    return ClassicalCircuit(d_c, tuple(ops), seed)


def _product_residual(rho: DensityMatrix) -> float:
    marginals = [partial_trace(rho, [i]) for i in range(rho.space.n_subsystems)]
    product = marginals[0]
    for m in marginals[1:]:
        product = tensor(product, m)
    return float(np.max(np.abs(product.matrix - rho.matrix)))


def c_dephasing_residual(rho: DensityMatrix) -> float:
    """Distance between a register state and its complete dephasing on C."""
    dephased = sum(k @ rho.matrix @ k.conj().T for k in dephasing_kraus(rho.dims, 2))
    return float(np.max(np.abs(dephased - rho.matrix)))


def apply_classical_circuit(circuit: ClassicalCircuit, initial: DensityMatrix) -> DensityMatrix:
    if initial.dims != circuit.space.dims:
        raise DomainError(f"initial state dims {initial.dims} != {circuit.space.dims}")
    if _product_residual(initial) > SEPARABLE_TOL:
        raise PreconditionError("initial state must be a product of single-system states")
    mat = initial.matrix
    for op in circuit.ops:
        mat = sum(k @ mat @ k.conj().T for k in op.full_kraus())
    return DensityMatrix.from_matrix(mat, circuit.space)


class TrialOutcome(NamedTuple):
    index: int
    seed: int
    depth: int
    d_c: int
    negativity: float
    witness_min: float


@dataclass(frozen=True)
class NoGoReport:
    trials: int
    max_negativity: float
    max_witness_violation: float
    failures: tuple[TrialOutcome, ...]
    seeds: tuple[int, ...]
    master_seed: int
    max_depth: int
    d_c_range: tuple[int, int]
    outcomes: tuple[TrialOutcome, ...] = field(repr=False, default=())


def trial_seeds(master_seed: int, trials: int) -> list[int]:
    return [int(s) for s in np.random.SeedSequence(master_seed).generate_state(trials, dtype=np.uint64)]


def _random_product_state(rng: np.random.Generator, d_c: int) -> DensityMatrix:
    q1 = random_density_matrix((2,), rng, rank=int(rng.integers(1, 3)))
    q2 = random_density_matrix((2,), rng, rank=int(rng.integers(1, 3)))
    if rng.random() < 0.5:
        c = DensityMatrix.from_matrix(np.diag(rng.dirichlet(np.ones(d_c))), (d_c,))
    else:
        # C starting off-diagonal is allowed; covariant dynamics never uses it.
        c = random_density_matrix((d_c,), rng)
    return tensor(tensor(q1, q2), c)


def run_trial(
    seed: int, max_depth: int = 12, d_c_range: tuple[int, int] = D_C_RANGE, index: int = 0
) -> TrialOutcome:
    """One randomized no-go trial, fully determined by ``seed``."""
    rng = np.random.default_rng(seed)
    d_c = int(rng.integers(d_c_range[0], d_c_range[1] + 1))
    depth = int(rng.integers(1, max_depth + 1))
    circuit = random_classical_circuit(int(rng.integers(2**63)), depth, d_c)
    final = apply_classical_circuit(circuit, _random_product_state(rng, d_c))
    masses = partial_trace(final, [0, 1])
    witness_min = min(witness_expectation(masses, t) for t in bell_states().values())
    return TrialOutcome(index, seed, depth, d_c, negativity(masses), witness_min)


def verify_no_go(
    trials: int,
    max_depth: int = 12,
    d_c_range: tuple[int, int] = D_C_RANGE,
    seed: int = 0,
    threads: int = 1,
) -> NoGoReport:
    if trials < 1:
        raise DomainError("trials must be >= 1")
    if max_depth < 1:
        raise DomainError("max_depth must be >= 1")
    lo, hi = d_c_range
    if not D_C_RANGE[0] <= lo <= hi <= D_C_RANGE[1]:
        raise DomainError(f"d_C range must lie within {D_C_RANGE}")
    seeds = trial_seeds(seed, trials)
    jobs = [(s, max_depth, (lo, hi), i) for i, s in enumerate(seeds)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(lambda job: run_trial(*job), jobs))
    else:
        outcomes = [run_trial(*job) for job in jobs]
    failures = tuple(
        o for o in outcomes if o.negativity >= SEPARABLE_TOL or o.witness_min < -SEPARABLE_TOL
    )
    return NoGoReport(
        trials=trials,
        max_negativity=max(o.negativity for o in outcomes),
        max_witness_violation=max(0.0, -min(o.witness_min for o in outcomes)),
        failures=failures,
        seeds=tuple(seeds),
        master_seed=seed,
        max_depth=max_depth,
        d_c_range=(lo, hi),
        outcomes=tuple(outcomes),
    )


# -- quantum mediator ---------------------------------------------------------


class MediatorStep(NamedTuple):
    name: str
    kraus: tuple
    covariant: bool


class Counterexample(NamedTuple):
    steps: tuple[MediatorStep, ...]
    state: DensityMatrix
    negativity: float


def _step(name: str, kraus: Sequence[np.ndarray]) -> MediatorStep:
    return MediatorStep(name, tuple(kraus), is_dephasing_covariant(kraus, (2, 2, 2), 2))


def quantum_mediator_counterexample(superpose: bool = True) -> Counterexample:
    """A qubit mediator with a complementary observable entangles Q1 and Q2.

    C is rotated into ``|+>``, controls X on Q1 and then on Q2, and is
    measured in the X basis; a Z correction on Q2 for the ``-`` outcome makes
    the result deterministic. With ``superpose=False`` the rotation is skipped
    and C stays classical.
    """
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    z = np.diag([1.0, -1.0]).astype(complex)
    h = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
    eye = np.eye(2)
    p0, p1 = _basis_projector(2, 0), _basis_projector(2, 1)
    plus = np.full((2, 2), 0.5, dtype=complex)
    minus = np.array([[0.5, -0.5], [-0.5, 0.5]], dtype=complex)

    def kron3(a, b, c):
        return np.kron(np.kron(a, b), c)

    steps = []
    if superpose:
        steps.append(_step("rotate C into superposition", [kron3(eye, eye, h)]))
    steps.append(_step("C-controlled X on Q1", [kron3(eye, eye, p0) + kron3(x, eye, p1)]))
    steps.append(_step("C-controlled X on Q2", [kron3(eye, eye, p0) + kron3(eye, x, p1)]))
    steps.append(
        _step("measure C in X basis, Z-correct Q2", [kron3(eye, eye, plus), kron3(eye, z, minus)])
    )

    mat = np.zeros((8, 8), dtype=complex)
    mat[0, 0] = 1.0
    for step in steps:
        mat = sum(k @ mat @ k.conj().T for k in step.kraus)
    final = DensityMatrix.from_matrix(mat, (2, 2, 2))
    masses = partial_trace(final, [0, 1])
    return Counterexample(tuple(steps), masses, negativity(masses))
