"""Two-mass Mach-Zehnder protocol.

Each mass is a qubit (0 = lower arm, 1 = upper arm). After the first 50:50
beamsplitter the pair sits in ``|+>|+>``; the mutual Newtonian interaction
imprints a configuration-dependent phase; a second beamsplitter on each mass
precedes detection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .entanglement import concurrence, negativity, witness_expectation
from .qcore import DensityMatrix, DomainError, PureState

REFERENCE_DISTANCE = 1e-6  # m, anchor for non-Newtonian exponents
PHASESET_TOL = 1e-15
PROBABILITY_TOL = 1e-12

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
BEAMSPLITTER_PAIR = np.kron(HADAMARD, HADAMARD)


@dataclass(frozen=True)
class PhysicalConstants:
    """SI constants; the Planck mass defaults to ``sqrt(hbar c / G)``."""

    G: float = 6.67430e-11
    hbar: float = 1.054571817e-34
    c: float = 2.99792458e8
    planck_mass: float | None = None

    def __post_init__(self):
        for name in ("G", "hbar", "c"):
            if not getattr(self, name) > 0:
                raise DomainError(f"physical constant {name} must be positive")
        derived = math.sqrt(self.hbar * self.c / self.G)
        if self.planck_mass is None:
            object.__setattr__(self, "planck_mass", derived)
        elif not self.planck_mass > 0:
            raise DomainError("planck_mass must be positive")
        elif abs(self.planck_mass / derived - 1) > 1e-6:
            raise DomainError(
                f"planck_mass {self.planck_mass!r} inconsistent with sqrt(hbar c/G) = {derived!r}"
            )


CODATA_2018 = PhysicalConstants()


@dataclass(frozen=True)
class PhysicalParams:
    mass: float
    d1: float
    d2: float
    arm_length: float | None = None
    velocity: float | None = None
    interaction_time: float | None = None
    exponent: float = 1.0
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)

    def __post_init__(self):
        for name in ("mass", "d1", "d2", "arm_length"):
            value = getattr(self, name)
            if value is None and name == "arm_length":
                continue
            if not (value > 0 and math.isfinite(value)):
                raise DomainError(f"{name} must be a positive finite number, got {value!r}")
        if self.velocity is not None and self.interaction_time is not None:
            raise DomainError("give either velocity or interaction_time, not both")
        if self.velocity is None and self.interaction_time is None:
            raise DomainError("one of velocity or interaction_time is required")
        if self.velocity is not None:
            if not self.velocity > 0:
                raise DomainError("velocity must be positive")
            if self.arm_length is None:
                raise DomainError("arm_length is required to derive dt from velocity")
        if self.interaction_time is not None and not self.interaction_time >= 0:
            raise DomainError("interaction_time must be >= 0")
        if not self.exponent >= 1:
            raise DomainError("potential exponent must be >= 1")

    @property
    def dt(self) -> float:
        if self.interaction_time is not None:
            return self.interaction_time
        return self.arm_length / self.velocity


@dataclass(frozen=True)
class PhaseSet:
    phi1: float
    phi2: float
    delta_phi: float

    def __post_init__(self):
        if abs((self.phi2 - self.phi1) - self.delta_phi) > PHASESET_TOL * max(1.0, abs(self.phi2)):
            raise DomainError(
                f"delta_phi {self.delta_phi!r} != phi2 - phi1 = {self.phi2 - self.phi1!r}"
            )

    @classmethod
    def from_phases(cls, phi1: float, phi2: float) -> "PhaseSet":
        return cls(phi1, phi2, phi2 - phi1)

    @classmethod
    def from_difference(cls, phi1: float, delta_phi: float) -> "PhaseSet":
        # delta_phi is the user's number; phi2 is derived, so the stored pair
        # satisfies the identity up to one rounding.
        return cls(phi1, phi1 + delta_phi, delta_phi)


class DetectorProbabilities(NamedTuple):
    p0: float
    p1: float


@dataclass(frozen=True, eq=False)
class RunResult:
    phases: PhaseSet
    pre_bs_state: PureState
    final_state: PureState
    p0: float
    p1: float
    concurrence: float
    negativity: float
    witness_value: float


def gravitational_phase(
    mass: float,
    distance: float,
    dt: float,
    constants: PhysicalConstants = CODATA_2018,
    exponent: float = 1.0,
) -> float:
    """Phase ``m^2 G dt / (hbar d)`` from a Newtonian interaction.

    For ``exponent != 1`` the phase scales as ``(d_ref / d)**exponent`` and is
    anchored to the Newtonian value at ``d_ref = 1e-6`` m.
    """
    if not distance > 0:
        raise DomainError(f"distance must be > 0, got {distance!r}")
    if mass < 0:
        raise DomainError(f"mass must be >= 0, got {mass!r}")
    if dt < 0:
        raise DomainError(f"interaction time must be >= 0, got {dt!r}")
    if exponent < 1:
        raise DomainError("potential exponent must be >= 1")
    coupling = mass**2 * constants.G * dt / constants.hbar
    if exponent == 1:
        return coupling / distance
    return coupling / REFERENCE_DISTANCE * (REFERENCE_DISTANCE / distance) ** exponent


def phases_from_geometry(params: PhysicalParams) -> PhaseSet:
    # Interaction across the two most distant arms is neglected.
    dt = params.dt
    phi1 = gravitational_phase(params.mass, params.d1, dt, params.constants, params.exponent)
    phi2 = gravitational_phase(params.mass, params.d2, dt, params.constants, params.exponent)
    return PhaseSet.from_phases(phi1, phi2)


def configuration_phases(phases: PhaseSet, geometric: bool = False) -> np.ndarray:
    """Phases on ``|00>, |01>, |10>, |11>``.

    Default: ``(0, phi1, phi1, phi2)`` as in the two-mass state before the
    final beamsplitters. ``geometric=True`` instead puts ``phi1`` on the
    equal-arm configurations and ``phi2`` on the crossed ones.
    """
    if geometric:
        return np.array([phases.phi1, phases.phi2, phases.phi2, phases.phi1])
    return np.array([0.0, phases.phi1, phases.phi1, phases.phi2])


def entangled_state_eq1(phases: PhaseSet, geometric: bool = False) -> PureState:
    amps = 0.5 * np.exp(1j * configuration_phases(phases, geometric))
    return PureState.from_vector(amps, (2, 2))


def detector_probabilities(phases: PhaseSet) -> DetectorProbabilities:
    """Closed-form probability of each mass exiting on port 0 or 1."""
    c1, s1 = math.cos(phases.phi1 / 2), math.sin(phases.phi1 / 2)
    cd, sd = math.cos(phases.delta_phi / 2), math.sin(phases.delta_phi / 2)
    return DetectorProbabilities(0.5 * (c1 * c1 + cd * cd), 0.5 * (s1 * s1 + sd * sd))


def marginal_port_probabilities(state: PureState, mass_index: int = 0) -> DetectorProbabilities:
    probs = (np.abs(state.amplitudes) ** 2).reshape(2, 2)
    per_port = probs.sum(axis=1 - mass_index)
    return DetectorProbabilities(float(per_port[0]), float(per_port[1]))


def witness_target() -> PureState:
    """Maximally entangled state reached at ``phi1 = 0, delta_phi = pi``."""
    return PureState.from_vector([0.5, 0.5, 0.5, -0.5], (2, 2))


def simulate_run(phases: PhaseSet, geometric: bool = False) -> RunResult:
    """Beamsplitter, phase imprint and beamsplitter applied as explicit unitaries."""
    zero = PureState.basis((0, 0), (2, 2))
    after_split = zero.evolve(BEAMSPLITTER_PAIR)
    imprint = np.diag(np.exp(1j * configuration_phases(phases, geometric)))
    pre_bs = after_split.evolve(imprint)
    final = pre_bs.evolve(BEAMSPLITTER_PAIR)
    p0, p1 = marginal_port_probabilities(final, 0)
    rho = pre_bs.density()
    return RunResult(
        phases=phases,
        pre_bs_state=pre_bs,
        final_state=final,
        p0=p0,
        p1=p1,
        concurrence=concurrence(rho),
        negativity=negativity(rho),
        witness_value=witness_expectation(rho, witness_target()),
    )


def closed_form_concurrence(phases: PhaseSet, geometric: bool = False) -> float:
    if geometric:
        return abs(math.sin(phases.delta_phi))
    return abs(math.sin((phases.delta_phi - phases.phi1) / 2))
