"""Per-mode evaluation: settings dictionary in, output record(s) out."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, NamedTuple

from ..entanglement import adapted_witness_target, witness_expectation
from ..fieldmodel import (
    CouplingMatrix,
    entanglement_breaking_threshold,
    field_cycle,
    field_cycle_with_dephasing,
    planck_ratio_phase,
)
from ..nogo import verify_no_go
from ..protocol import (
    CODATA_2018,
    PhaseSet,
    PhysicalParams,
    gravitational_phase,
    phases_from_geometry,
    simulate_run,
)
from ..qcore import FockSpace
from .config import ConfigError, SweepSpec, parse_dc_range

Settings = dict[str, Any]
Record = dict[str, Any]

DEFAULT_W = 1e-3
GEOMETRY_VARIABLES = ("mass", "d1", "d2", "L", "dt")
MEDIATOR_VARIABLES = ("w", "xi_scale")


def _require(settings: Settings, *keys: str) -> None:
    missing = [k for k in keys if settings.get(k) is None]
    if missing:
        raise ConfigError("missing required parameter(s): " + ", ".join("--" + k for k in missing))


def evaluate_phase(s: Settings) -> Record:
    _require(s, "mass", "distance", "dt")
    exponent = s.get("exponent") or 1.0
    phi = gravitational_phase(s["mass"], s["distance"], s["dt"], CODATA_2018, exponent)
    ratio = planck_ratio_phase(s["mass"], s["distance"], s["dt"]).ratio
    return {
        "input": s["distance"],
        "mass": s["mass"],
        "distance": s["distance"],
        "dt": s["dt"],
        "exponent": exponent,
        "phi": phi,
        "planck_ratio": ratio,
    }


def run_phases(s: Settings) -> PhaseSet:
    if s.get("phi1") is not None or s.get("dphi") is not None:
        _require(s, "phi1", "dphi")
        if any(s.get(k) is not None for k in ("mass", "d1", "d2")):
            raise ConfigError("give either --phi1/--dphi or the geometry, not both")
        return PhaseSet.from_difference(s["phi1"], s["dphi"])
    _require(s, "mass", "d1", "d2")
    if s.get("dt") is None and s.get("v") is None:
        raise ConfigError("geometry needs --dt, or --L with --v")
    params = PhysicalParams(
        mass=s["mass"],
        d1=s["d1"],
        d2=s["d2"],
        arm_length=s.get("L"),
        velocity=s.get("v"),
        interaction_time=s.get("dt"),
        exponent=s.get("exponent") or 1.0,
    )
    return phases_from_geometry(params)


def evaluate_run(s: Settings, input_value: float | None = None) -> Record:
    phases = run_phases(s)
    result = simulate_run(phases, geometric=bool(s.get("geometric")))
    return {
        "input": phases.delta_phi if input_value is None else input_value,
        "phi1": phases.phi1,
        "phi2": phases.phi2,
        "delta_phi": phases.delta_phi,
        "p0": result.p0,
        "p1": result.p1,
        "concurrence": result.concurrence,
        "negativity": result.negativity,
        "witness": result.witness_value,
    }


def couplings_for(s: Settings) -> tuple[CouplingMatrix, float]:
    w = s.get("w")
    w = DEFAULT_W if w is None else w
    entries = [s.get(k) for k in ("xi00", "xi01", "xi10", "xi11")]
    if all(e is None for e in entries):
        couplings = CouplingMatrix.maximal(w)
    elif any(e is None for e in entries):
        raise ConfigError("give all four of --xi00 --xi01 --xi10 --xi11, or none")
    else:
        couplings = CouplingMatrix.from_entries(*entries)
    scale = s.get("xi_scale")
    if scale is not None:
        couplings = couplings.scaled(scale)
    return couplings, w


def _fock(s: Settings) -> tuple[FockSpace | None, str]:
    if s.get("fock") is None:
        return None, "auto"
    return FockSpace(s["fock"]), "fock"


def evaluate_mediator(s: Settings, input_value: float | None = None) -> Record:
    couplings, w = couplings_for(s)
    fock, backend = _fock(s)
    run = field_cycle(couplings, w, fock, s.get("alpha0") or 0.0, backend)
    rho = run.mass_mass_state
    xi = couplings.flat
    return {
        "input": w if input_value is None else input_value,
        "w": w,
        "xi00": float(xi[0]),
        "xi01": float(xi[1]),
        "xi10": float(xi[2]),
        "xi11": float(xi[3]),
        "concurrence": run.concurrence_final,
        "negativity": run.negativity_final,
        "witness": witness_expectation(rho, adapted_witness_target(rho)),
        "field_return_fidelity": run.field_return_fidelity,
        "mass_field_entropy": run.mass_field_entropy_E1,
    }


def evaluate_decohere(s: Settings, input_value: float | None = None) -> Record:
    _require(s, "gamma")
    couplings, w = couplings_for(s)
    fock, backend = _fock(s)
    out = field_cycle_with_dephasing(couplings, w, fock, s.get("alpha0") or 0.0, s["gamma"], backend)
    return {
        "input": s["gamma"] if input_value is None else input_value,
        "gamma": s["gamma"],
        "negativity": out.negativity_final,
        "concurrence": out.concurrence_final,
    }


def evaluate_threshold(s: Settings) -> Record:
    couplings, w = couplings_for(s)
    fock, backend = _fock(s)
    tol = s.get("tol")
    tol = 1e-6 if tol is None else tol
    res = entanglement_breaking_threshold(
        couplings, w, fock, tol=tol, alpha0=s.get("alpha0") or 0.0, backend=backend
    )
    return {
        "input": tol,
        "gamma_lo": res.gamma_lo,
        "gamma_hi": res.gamma_hi,
        "gamma_star": res.gamma_star,
        "negativity_lo": res.negativity_lo,
        "negativity_hi": res.negativity_hi,
    }


def evaluate_nogo(s: Settings) -> list[Record]:
    report = verify_no_go(
        trials=s.get("trials") or 1000,
        max_depth=s.get("depth") or 12,
        d_c_range=parse_dc_range(str(s.get("dc") or "2-4")),
        seed=s.get("seed") or 0,
        threads=s.get("threads") or 1,
    )
    return [o._asdict() | {"trial": o.index} for o in report.outcomes]


# -- sweeps ------------------------------------------------------------------


def sweep_schema(variable: str) -> str:
    if variable in GEOMETRY_VARIABLES:
        return "run"
    if variable in MEDIATOR_VARIABLES:
        return "mediator"
    return "decohere"


def _point_evaluator(variable: str) -> Callable[[Settings, float], Record]:
    schema = sweep_schema(variable)

    def evaluate(base: Settings, value: float) -> Record:
        s = dict(base)
        s[variable] = value
        if schema == "run":
            if variable == "L" and s.get("v") is None:
                raise ConfigError("sweeping L requires --v")
            if variable == "dt":
                s["v"] = None
            return evaluate_run(s, value)
        if schema == "mediator":
            return evaluate_mediator(s, value)
        return evaluate_decohere(s, value)

    return evaluate


class PointFailure(NamedTuple):
    index: int
    error: Exception


def sweep(
    base: Settings, spec: SweepSpec, threads: int = 1, keep_going: bool = False
) -> tuple[list[Record], list[PointFailure]]:
    """Evaluate every grid point; rows come back in grid order.

    Without ``keep_going`` the rows before the first failing point are
    returned together with that single failure. With it, every point is
    reported and failed points become rows holding only the input value.
    """
    evaluate = _point_evaluator(spec.variable)
    grid = spec.grid()

    def safe(value: float) -> Record | Exception:
        try:
            return evaluate(base, value)
        except (ValueError, ArithmeticError) as exc:
            return exc

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(safe, grid))
    else:
        results = [safe(v) for v in grid]

    records: list[Record] = []
    failures: list[PointFailure] = []
    for i, (value, res) in enumerate(zip(grid, results)):
        if isinstance(res, Exception):
            failures.append(PointFailure(i, res))
            if not keep_going:
                break
            records.append({"input": value})
        else:
            records.append(res)
    return records, failures
