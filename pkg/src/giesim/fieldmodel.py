"""Coherent-state model of a single field mode mediating the mass-mass phases.

Cycle on (mass 1) x (mass 2) x (field):

    E0:  1/2 sum_ab |ab> |alpha0>
    E1:  sum_ab P_ab (x) D(xi_ab)           conditional displacement
    E2:  I (x) exp(i w n)                   number-phase rotation
    E3:  sum_ab P_ab (x) D(xi_ab)^dagger    conditional un-displacement

Two interchangeable backends evaluate it:

* ``"fock"`` -- dense vectors on a truncated Fock space, as written above.
* ``"coherent"`` -- exact bookkeeping of one coherent label and one complex
  weight per branch. Rotations and displacements map coherent states to
  coherent states, so no truncation is needed and large couplings are cheap.

``"auto"`` picks Fock when the required truncation is small.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .entanglement import concurrence, linear_entropy, negativity
from .protocol import CODATA_2018, PhysicalConstants
from .qcore import (
    DensityMatrix,
    DomainError,
    FockSpace,
    PreconditionError,
    PureState,
    coherent_state,
    displacement,
    number_phase_operator,
)

FOCK_AUTO_LIMIT = 160
PAPER_FIELD_ENTANGLEMENT_CLAIM = 1e-12
_BRANCHES = ((0, 0), (0, 1), (1, 0), (1, 1))


@dataclass(frozen=True, eq=False)
class CouplingMatrix:
    xi: np.ndarray

    def __post_init__(self):
        xi = np.array(self.xi, dtype=float).reshape(2, 2)
        if not np.all(np.isfinite(xi)):
            raise DomainError("couplings must be finite")
        if np.any(xi < 0):
            raise DomainError(
                f"couplings must be >= 0, got {xi.ravel().tolist()}; "
                "for negative target phases flip the sign of w instead"
            )
        xi.flags.writeable = False
        object.__setattr__(self, "xi", xi)

    @classmethod
    def from_entries(cls, xi00: float, xi01: float, xi10: float, xi11: float) -> "CouplingMatrix":
        return cls(np.array([[xi00, xi01], [xi10, xi11]]))

    @classmethod
    def from_phases(cls, phases, w: float) -> "CouplingMatrix":
        """Couplings reproducing configuration phases ``(phi00, phi01, phi10, phi11)``."""
        return cls(np.array([xi_from_phase(p, w) for p in phases]).reshape(2, 2))

    @classmethod
    def maximal(cls, w: float) -> "CouplingMatrix":
        """Couplings whose ideal phases (0, pi/2, pi/2, 0) give a Bell pair."""
        return cls.from_phases((0.0, math.pi / 2, math.pi / 2, 0.0), w)

    @property
    def flat(self) -> np.ndarray:
        return self.xi.ravel()

    @property
    def max(self) -> float:
        return float(self.xi.max())

    def scaled(self, factor: float) -> "CouplingMatrix":
        return CouplingMatrix(self.xi * factor)


@dataclass(frozen=True)
class DephasingSpec:
    gamma: float

    def __post_init__(self):
        if not (self.gamma >= 0 and math.isfinite(self.gamma)):
            raise DomainError(f"dephasing strength must be a finite value >= 0, got {self.gamma!r}")


def xi_from_phase(phi: float, w: float) -> float:
    if w == 0:
        raise DomainError("w must be nonzero")
    xi = phi / w
    if xi < 0:
        warnings.warn(
            f"phase {phi!r} with w={w!r} gives negative coupling {xi!r}; flip the sign of w",
            RuntimeWarning,
            stacklevel=2,
        )
    return xi


def mass_field_entanglement_eq3(xi: float) -> float:
    """``1 - |<alpha + sqrt(xi)|alpha>|^2 = 1 - exp(-xi)``."""
    if xi < 0:
        raise DomainError(f"xi must be >= 0, got {xi!r}")
    return -math.expm1(-xi)


def overlap_deficit_numeric(xi: float, fock: FockSpace) -> float:
    """``1 - |<sqrt(xi)|0>|^2`` from truncated Fock vectors."""
    shifted = coherent_state(math.sqrt(xi), fock)
    vacuum = coherent_state(0.0, fock)
    return 1.0 - abs(shifted.inner(vacuum)) ** 2


class PlanckPhase(NamedTuple):
    phi: float
    ratio: float
    phi_from_ratio: float


def planck_ratio_phase(
    mass: float, distance: float, dt: float, constants: PhysicalConstants = CODATA_2018
) -> PlanckPhase:
    """Newtonian phase computed directly and via ``(m/m_P)^2 (c/d) dt``."""
    for name, value in (("mass", mass), ("distance", distance), ("dt", dt)):
        if not value > 0:
            raise DomainError(f"{name} must be > 0, got {value!r}")
    phi = mass**2 * constants.G * dt / (constants.hbar * distance)
    ratio = (mass / constants.planck_mass) ** 2
    phi_from_ratio = ratio * constants.c / distance * dt
    if abs(phi_from_ratio / phi - 1) > 1e-6:
        raise PreconditionError(f"phase formulas disagree: {phi!r} vs {phi_from_ratio!r}")
    return PlanckPhase(phi, ratio, phi_from_ratio)


def planck_ratio_note(ratio: float) -> str:
    return (
        f"(m/m_P)^2 = {ratio:.4g}; the often-quoted field entanglement of "
        f"{PAPER_FIELD_ENTANGLEMENT_CLAIM:g} for m = 1e-12 kg differs from this value "
        f"by a factor {ratio / PAPER_FIELD_ENTANGLEMENT_CLAIM:.3g}"
    )


# -- coherent-branch backend -------------------------------------------------


def _coherent_overlap(bra: np.ndarray, ket: np.ndarray) -> np.ndarray:
    """``<bra|ket>`` for normalized coherent states (broadcasting)."""
    return np.exp(-0.5 * np.abs(bra) ** 2 - 0.5 * np.abs(ket) ** 2 + np.conj(bra) * ket)


@dataclass(frozen=True, eq=False)
class BranchState:
    """``sum_ab weights[ab] |ab> |labels[ab]>`` with coherent field states."""

    weights: np.ndarray
    labels: np.ndarray

    def displaced(self, betas: np.ndarray) -> "BranchState":
        # D(b)|g> = exp(i Im(b g*)) |g + b>
        phase = np.exp(1j * np.imag(betas * np.conj(self.labels)))
        return BranchState(self.weights * phase, self.labels + betas)

    def rotated(self, angle) -> "BranchState":
        return BranchState(self.weights, self.labels * np.exp(1j * np.asarray(angle)))

    def mass_matrix(self) -> np.ndarray:
        """Mass-mass reduced matrix; leading axes of ``weights`` broadcast."""
        w, g = self.weights, self.labels
        return w[..., :, None] * np.conj(w[..., None, :]) * _coherent_overlap(
            g[..., None, :], g[..., :, None]
        )

    def mass_state(self) -> DensityMatrix:
        return DensityMatrix.from_matrix(self.mass_matrix(), (2, 2))

    def field_fidelity(self, alpha: complex) -> float:
        """``<alpha| rho_field |alpha>``."""
        return float(np.sum(np.abs(self.weights) ** 2 * np.abs(_coherent_overlap(alpha, self.labels)) ** 2))

    def to_pure_state(self, fock: FockSpace) -> PureState:
        blocks = [w * coherent_state(g, fock).amplitudes for w, g in zip(self.weights, self.labels)]
        return PureState.from_vector(np.concatenate(blocks), (2, 2, fock.n_levels))


# -- results -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MediatorRun:
    stage_states: tuple
    w: float
    couplings: CouplingMatrix
    alpha0: float
    mass_mass_state: DensityMatrix
    field_return_fidelity: float
    mass_field_entropy_E1: float
    concurrence_final: float
    backend: str
    fock: FockSpace | None = None

    @property
    def negativity_final(self) -> float:
        return negativity(self.mass_mass_state)


class DephasedCycle(NamedTuple):
    negativity_final: float
    concurrence_final: float


class ThresholdResult(NamedTuple):
    gamma_star: float
    gamma_lo: float
    gamma_hi: float
    negativity_lo: float
    negativity_hi: float


def required_amplitude(couplings: CouplingMatrix, w: float, alpha0: float = 0.0) -> float:
    """Largest coherent amplitude reached at any stage of the cycle."""
    betas = np.sqrt(couplings.flat)
    shifted = alpha0 + betas
    returned = shifted * np.exp(1j * w) - betas
    return float(max(np.max(np.abs(shifted)), np.max(np.abs(returned)), abs(alpha0)))


def _resolve_backend(couplings, w, alpha0, fock, backend):
    if backend not in ("auto", "fock", "coherent"):
        raise DomainError(f"unknown backend {backend!r}")
    if backend == "coherent":
        return "coherent", None
    if fock is None:
        fock = FockSpace.for_amplitude(required_amplitude(couplings, w, alpha0))
        if backend == "auto" and fock.n_levels > FOCK_AUTO_LIMIT:
            return "coherent", None
    else:
        # Validates the explicit truncation against the largest amplitude.
        fock.check_amplitude(required_amplitude(couplings, w, alpha0))
    return "fock", fock


def _check_w(w: float) -> float:
    if not math.isfinite(w):
        raise DomainError("w must be finite")
    return float(w)


def field_cycle(
    couplings: CouplingMatrix,
    w: float,
    fock: FockSpace | None = None,
    alpha0: float = 0.0,
    backend: str = "auto",
) -> MediatorRun:
    """Entangle, imprint, disentangle; report the mass-mass outcome."""
    w = _check_w(w)
    backend, fock = _resolve_backend(couplings, w, alpha0, fock, backend)
    betas = np.sqrt(couplings.flat).astype(complex)
    start = BranchState(np.full(4, 0.5, dtype=complex), np.full(4, alpha0, dtype=complex))

    if backend == "coherent":
        e1 = start.displaced(betas)
        e2 = e1.rotated(w)
        final = e2.displaced(-betas)
        stages = (start, e1, e2, final)
        return MediatorRun(
            stage_states=stages,
            w=w,
            couplings=couplings,
            alpha0=alpha0,
            mass_mass_state=final.mass_state(),
            field_return_fidelity=final.field_fidelity(alpha0),
            mass_field_entropy_E1=linear_entropy(e1.mass_state()),
            concurrence_final=concurrence(final.mass_state()),
            backend=backend,
        )

    n = fock.n_levels
    disp = np.stack([displacement(b, fock) for b in betas])
    rotation = np.diag(number_phase_operator(w, fock))
    rows0 = np.outer(np.full(4, 0.5), coherent_state(alpha0, fock).amplitudes)
    rows1 = np.einsum("inm,im->in", disp, rows0)
    rows2 = rows1 * rotation
    rows3 = np.einsum("imn,im->in", disp.conj(), rows2)
    stages = tuple(PureState((2, 2, n), rows.ravel()) for rows in (rows0, rows1, rows2, rows3))

    mass_final = DensityMatrix.from_matrix(rows3 @ rows3.conj().T, (2, 2))
    field_final = rows3.T @ rows3.conj()
    vac = coherent_state(alpha0, fock).amplitudes
    fidelity = float(np.real(np.vdot(vac, field_final @ vac)))
    mass_e1 = DensityMatrix.from_matrix(rows1 @ rows1.conj().T, (2, 2))
    return MediatorRun(
        stage_states=stages,
        w=w,
        couplings=couplings,
        alpha0=alpha0,
        mass_mass_state=mass_final,
        field_return_fidelity=min(1.0, max(0.0, fidelity)),
        mass_field_entropy_E1=linear_entropy(mass_e1),
        concurrence_final=concurrence(mass_final),
        backend=backend,
        fock=fock,
    )


# -- dephasing -----------------------------------------------------------------


def dephasing_factors(n_levels: int, gamma: float) -> np.ndarray:
    n = np.arange(n_levels)
    return np.exp(-0.5 * gamma * (n[:, None] - n[None, :]) ** 2)


def dephase_field(rho: DensityMatrix, spec: DephasingSpec, field_index: int = -1) -> DensityMatrix:
    """Damp Fock coherences ``rho_{n,m}`` by ``exp(-gamma (n-m)^2 / 2)``.

    Equivalent to a number-phase rotation by a Gaussian random angle of
    variance ``gamma``; completely positive and trace preserving.
    """
    if spec.gamma == 0:
        return rho
    dims = rho.dims
    k = len(dims)
    idx = field_index % k
    factors = dephasing_factors(dims[idx], spec.gamma)
    shape = [1] * (2 * k)
    shape[idx] = shape[k + idx] = dims[idx]
    mat = rho.matrix.reshape(dims + dims) * factors.reshape(shape)
    return DensityMatrix.from_matrix(mat.reshape(rho.matrix.shape), dims)


def _dephased_mass_matrix_fock(betas, w, alpha0, gamma, fock) -> np.ndarray:
    n = fock.n_levels
    disp = np.stack([displacement(b, fock) for b in betas])
    rows1 = np.einsum("inm,m->in", disp, 0.5 * coherent_state(alpha0, fock).amplitudes)
    rho = np.einsum("in,jm->injm", rows1, rows1.conj())
    damp = dephasing_factors(n, gamma)[None, :, None, :]
    phase = np.exp(1j * w * np.arange(n))
    rho = rho * damp
    rho = rho * phase[None, :, None, None] * phase.conj()[None, None, None, :]
    rho = rho * damp
    undo = disp.conj().transpose(0, 2, 1)
    rho = np.einsum("iab,ibjc,jdc->iajd", undo, rho, undo.conj())
    return np.einsum("inJn->iJ", rho)


def _dephased_mass_matrix_coherent(betas, w, alpha0, gamma, max_points=1 << 22) -> np.ndarray:
    """Average over the total rotation angle of both dephasing steps.

    Two Gaussian rotations of variance ``gamma`` commute with ``exp(i w n)``
    and combine into one of variance ``2 gamma``. The integrand is periodic in
    the angle, so its Fourier coefficients (by FFT on a uniform grid, doubled
    until converged) are damped by ``exp(-gamma k^2)`` and summed.
    """
    start = BranchState(np.full(4, 0.5, dtype=complex), np.full(4, alpha0, dtype=complex))
    e1 = start.displaced(betas)

    def average(points: int) -> np.ndarray:
        theta = 2 * np.pi * np.arange(points) / points
        rotated = BranchState(
            np.broadcast_to(e1.weights, (points, 4)),
            e1.labels[None, :] * np.exp(1j * (w + theta))[:, None],
        )
        mats = rotated.displaced(-betas[None, :]).mass_matrix().reshape(points, 16)
        coeffs = np.fft.fft(mats, axis=0) / points
        k = np.fft.fftfreq(points, d=1.0 / points)
        return (np.exp(-gamma * k * k) @ coeffs).reshape(4, 4)

    points = 256
    current = average(points)
    while True:
        points *= 2
        refined = average(points)
        if np.max(np.abs(refined - current)) < 1e-14:
            return refined
        if points >= max_points:
            raise PreconditionError("angle quadrature did not converge; couplings too large")
        current = refined


def dephased_mass_state(
    couplings: CouplingMatrix,
    w: float,
    gamma: float,
    fock: FockSpace | None = None,
    alpha0: float = 0.0,
    backend: str = "auto",
) -> DensityMatrix:
    """Final mass-mass state with field dephasing before and after the rotation."""
    w = _check_w(w)
    DephasingSpec(gamma)
    backend, fock = _resolve_backend(couplings, w, alpha0, fock, backend)
    betas = np.sqrt(couplings.flat).astype(complex)
    if backend == "coherent":
        mat = _dephased_mass_matrix_coherent(betas, w, alpha0, gamma)
    else:
        mat = _dephased_mass_matrix_fock(betas, w, alpha0, gamma, fock)
    return DensityMatrix.from_matrix(mat, (2, 2))


def field_cycle_with_dephasing(
    couplings: CouplingMatrix,
    w: float,
    fock: FockSpace | None = None,
    alpha0: float = 0.0,
    gamma: float = 0.0,
    backend: str = "auto",
) -> DephasedCycle:
    rho = dephased_mass_state(couplings, w, gamma, fock, alpha0, backend)
    return DephasedCycle(negativity(rho), concurrence(rho))


def entanglement_breaking_threshold(
    couplings: CouplingMatrix,
    w: float,
    fock: FockSpace | None = None,
    tol: float = 1e-6,
    alpha0: float = 0.0,
    rtol: float = 1e-6,
    backend: str = "auto",
) -> ThresholdResult:
    """Bracket the dephasing strength at which mass-mass negativity drops to ``tol``.

    Geometric bisection; ``gamma_star`` is the largest probed strength that
    still leaves negativity above ``tol``.
    """

    def neg(gamma: float) -> float:
        return field_cycle_with_dephasing(couplings, w, fock, alpha0, gamma, backend).negativity_final

    base = neg(0.0)
    if base <= tol:
        raise PreconditionError(f"no entanglement to break: negativity {base:.3g} <= tol {tol:g}")

    lo, n_lo = 0.0, base
    hi, n_hi = 1.0, neg(1.0)
    if n_hi > tol:
        while n_hi > tol:
            lo, n_lo = hi, n_hi
            hi *= 10.0
            if hi > 1e12:
                raise PreconditionError("negativity stays above tol for all dephasing strengths")
            n_hi = neg(hi)
    else:
        probe = hi
        while probe > 1e-12:
            probe /= 10.0
            n_probe = neg(probe)
            if n_probe > tol:
                lo, n_lo = probe, n_probe
                break
            hi, n_hi = probe, n_probe

    while lo > 0 and hi / lo - 1 > rtol:
        mid = math.sqrt(lo * hi)
        n_mid = neg(mid)
        if n_mid > tol:
            lo, n_lo = mid, n_mid
        else:
            hi, n_hi = mid, n_mid
    return ThresholdResult(lo, lo, hi, n_lo, n_hi)
