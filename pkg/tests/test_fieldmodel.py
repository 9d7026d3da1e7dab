import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm as scipy_expm

from giesim.entanglement import linear_entropy
from giesim.fieldmodel import (
    CouplingMatrix,
    DephasingSpec,
    dephase_field,
    dephased_mass_state,
    entanglement_breaking_threshold,
    field_cycle,
    field_cycle_with_dephasing,
    mass_field_entanglement_eq3,
    overlap_deficit_numeric,
    planck_ratio_note,
    planck_ratio_phase,
    xi_from_phase,
)
from giesim.protocol import CODATA_2018, PhaseSet, closed_form_concurrence
from giesim.qcore import (
    DomainError,
    FockSpace,
    PreconditionError,
    TruncationError,
    partial_trace,
    random_density_matrix,
)

# 40-digit values of 1 - exp(-xi)
EQ3_ORACLE = {
    1e-4: 9.9995000166662500e-05,
    1e-3: 9.9950016662500833e-04,
    1e-2: 9.9501662508319464e-03,
    1e-1: 9.5162581964040427e-02,
    0.25: 2.2119921692859513e-01,
}


def dense_cycle_oracle(xis, w, n):
    """Full tensor-product construction with generic matrix exponentials."""
    a = np.diag(np.sqrt(np.arange(1, n)), 1)
    projectors = [np.diag(np.eye(4)[i]) for i in range(4)]
    cond = sum(np.kron(p, scipy_expm(math.sqrt(x) * (a.T - a))) for p, x in zip(projectors, xis))
    rot = np.kron(np.eye(4), scipy_expm(1j * w * np.diag(np.arange(n))))
    psi0 = np.kron(np.full(4, 0.5), np.eye(n)[0])
    final = cond.conj().T @ rot @ cond @ psi0
    m = final.reshape(4, n)
    return m @ m.conj().T, float(np.sum(np.abs(m[:, 0]) ** 2))


class TestCouplings:
    def test_xi_from_phase(self):
        assert xi_from_phase(0.0, 0.3) == 0
        assert xi_from_phase(0.01, 0.01) == 1.0
        with pytest.raises(DomainError):
            xi_from_phase(1.0, 0.0)

    @given(st.floats(-10, 10), st.floats(1e-3, 10))
    def test_round_trip(self, phi, w):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            assert abs(w * xi_from_phase(phi, w) - phi) <= 1e-15 * max(1.0, abs(phi))

    def test_negative_phase_warns(self):
        with pytest.warns(RuntimeWarning):
            xi_from_phase(-1.0, 0.5)

    def test_rejects_negative_couplings(self):
        with pytest.raises(DomainError, match="flip the sign of w"):
            CouplingMatrix.from_entries(0, -1, 0, 0)


class TestCycle:
    def test_no_coupling(self):
        run = field_cycle(CouplingMatrix.from_entries(0, 0, 0, 0), 0.4, backend="fock")
        assert run.concurrence_final == pytest.approx(0, abs=1e-12)
        assert run.field_return_fidelity == pytest.approx(1, abs=1e-12)
        assert run.mass_field_entropy_E1 == pytest.approx(0, abs=1e-12)

    @pytest.mark.parametrize("backend", ["fock", "coherent"])
    def test_single_entry_entropy(self, backend):
        run = field_cycle(CouplingMatrix.from_entries(0, 0, 0, 0.01), 0.7, backend=backend)
        assert run.mass_field_entropy_E1 == pytest.approx(3 / 8 * -math.expm1(-0.01), abs=1e-6)

    def test_stage_states_unit_norm(self):
        run = field_cycle(CouplingMatrix.maximal(0.5), 0.5, backend="fock")
        assert len(run.stage_states) == 4
        for state in run.stage_states:
            assert abs(np.linalg.norm(state.amplitudes) - 1) < 1e-12
        assert 0 <= run.field_return_fidelity <= 1

    def test_matches_dense_oracle(self):
        xis = (0.2, 0.9, 0.4, 1.3)
        rho_ref, fid_ref = dense_cycle_oracle(xis, 0.6, 40)
        run = field_cycle(CouplingMatrix.from_entries(*xis), 0.6, FockSpace(40))
        np.testing.assert_allclose(run.mass_mass_state.matrix, rho_ref, atol=1e-12)
        assert run.field_return_fidelity == pytest.approx(fid_ref, abs=1e-12)

    @pytest.mark.parametrize("w", [0.5, -0.3, 1.1])
    def test_backends_agree(self, w):
        couplings = CouplingMatrix.from_entries(0.1, 1.2, 0.7, 2.0)
        fock = field_cycle(couplings, w, backend="fock")
        coh = field_cycle(couplings, w, backend="coherent")
        np.testing.assert_allclose(fock.mass_mass_state.matrix, coh.mass_mass_state.matrix, atol=1e-12)
        assert fock.field_return_fidelity == pytest.approx(coh.field_return_fidelity, abs=1e-12)
        assert fock.mass_field_entropy_E1 == pytest.approx(coh.mass_field_entropy_E1, abs=1e-12)

    def test_initial_amplitude_matters_only_at_finite_w(self):
        # alpha0 adds branch phases of order alpha0 * w * sqrt(xi), which vanish as w -> 0
        gaps = []
        for w in (1e-2, 1e-3, 1e-4):
            couplings = CouplingMatrix.maximal(w)
            shifted = field_cycle(couplings, w, alpha0=0.9).concurrence_final
            gaps.append(abs(shifted - field_cycle(couplings, w).concurrence_final))
        assert gaps[0] > 9 * gaps[1] > 81 * gaps[2]
        assert gaps[2] < 1e-3

    def test_truncation_checked(self):
        with pytest.raises(TruncationError):
            field_cycle(CouplingMatrix.maximal(0.01), 0.01, FockSpace(20))

    def test_small_w_limit(self, record_property):
        """Error of the cycle against the ideal phase transfer, O(w)."""
        errors = {}
        for w in (1e-2, 1e-3, 1e-4):
            run = field_cycle(CouplingMatrix.maximal(w), w)
            target = closed_form_concurrence(PhaseSet.from_phases(0.0, math.pi / 2), geometric=True)
            errors[w] = (target - run.concurrence_final, 1 - run.field_return_fidelity)
        for w, (c_err, f_err) in errors.items():
            assert 0 < c_err < w and 0 < f_err < w
        assert errors[1e-3][0] / errors[1e-4][0] > 9.5
        # w * xi_max is held at pi/2, so the error is read as C * w * (w * xi_max)
        fitted = max(e / (w * w * CouplingMatrix.maximal(w).max) for w, (e, _) in errors.items())
        record_property("report: cycle error constant C (err <= C w xi_max)", f"{fitted:.4f}")
        assert fitted < 1.0

    def test_pi_pattern_disentangles(self):
        # ideal phases (0, pi, pi, 0) differ from a product only by a global sign pattern
        w = 1e-3
        run = field_cycle(CouplingMatrix.from_phases((0, math.pi, math.pi, 0), w), w)
        assert run.concurrence_final < 1e-5


class TestOverlap:
    @pytest.mark.parametrize("xi", sorted(EQ3_ORACLE))
    def test_closed_form(self, xi):
        assert mass_field_entanglement_eq3(xi) == pytest.approx(EQ3_ORACLE[xi], rel=1e-15)

    @given(st.floats(0, 0.25))
    def test_numeric_overlap(self, xi):
        assert abs(mass_field_entanglement_eq3(xi) - overlap_deficit_numeric(xi, FockSpace(40))) <= 1e-8
        assert abs(mass_field_entanglement_eq3(xi) - xi) <= xi * xi / 2 + 1e-16 * xi

    def test_zero(self):
        assert mass_field_entanglement_eq3(0.0) == 0.0

    def test_two_branch_entropy(self):
        # equal two-branch state: normalized linear entropy equals 1 - exp(-xi)
        for xi in (0.05, 0.3):
            run = field_cycle(CouplingMatrix.from_entries(0, 0, xi, xi), 0.2)
            rho_1 = partial_trace(run.stage_states[1].density(), [0])
            assert linear_entropy(rho_1, normalized=True) == pytest.approx(
                mass_field_entanglement_eq3(xi), abs=1e-12
            )


class TestPlanck:
    def test_planck_mass_ratio_one(self):
        m_p = CODATA_2018.planck_mass
        assert planck_ratio_phase(m_p, 1e-6, 1e-6).ratio == pytest.approx(1, rel=1e-15)

    def test_feasibility_ratio(self):
        # (1e-12 / sqrt(hbar c / G))^2 at 40 digits
        assert planck_ratio_phase(1e-12, 1e-6, 1e-6).ratio == pytest.approx(2.1111002633413123e-09, rel=1e-13)

    @given(st.floats(1e-15, 1e-6), st.floats(1e-9, 1e-3), st.floats(1e-9, 1.0))
    def test_phase_identity(self, m, d, dt):
        p = planck_ratio_phase(m, d, dt)
        assert p.phi_from_ratio == pytest.approx(p.phi, rel=1e-9)

    def test_note_mentions_discrepancy(self):
        note = planck_ratio_note(2.111e-9)
        assert "2.111e-09" in note and "1e-12" in note

    def test_domain(self):
        with pytest.raises(DomainError):
            planck_ratio_phase(0.0, 1e-6, 1e-6)


class TestDephasing:
    def test_spec_validation(self):
        with pytest.raises(DomainError):
            DephasingSpec(-1.0)

    def test_zero_is_identity(self, rng):
        rho = random_density_matrix((2, 6), rng)
        np.testing.assert_allclose(dephase_field(rho, DephasingSpec(0.0)).matrix, rho.matrix, atol=1e-15)

    def test_full_dephasing_diagonal(self, rng):
        rho = random_density_matrix((2, 6), rng)
        field = partial_trace(dephase_field(rho, DephasingSpec(1e6)), [1]).matrix
        assert np.max(np.abs(field - np.diag(np.diag(field)))) < 1e-12

    @given(st.integers(0, 2**32 - 1), st.floats(0, 50))
    def test_channel_is_cptp_on_samples(self, seed, gamma):
        rho = random_density_matrix((2, 5), np.random.default_rng(seed))
        out = dephase_field(rho, DephasingSpec(gamma)).matrix
        assert abs(np.trace(out) - 1) < 1e-12
        assert np.linalg.eigvalsh(out)[0] > -1e-12

    def test_gamma_zero_reproduces_cycle(self):
        couplings, w = CouplingMatrix.maximal(0.5), 0.5
        run = field_cycle(couplings, w)
        out = field_cycle_with_dephasing(couplings, w, gamma=0.0)
        assert out.negativity_final == pytest.approx(run.negativity_final, abs=1e-10)
        assert out.concurrence_final == pytest.approx(run.concurrence_final, abs=1e-10)

    def test_backends_agree_with_dephasing(self):
        couplings, w = CouplingMatrix.from_entries(0.3, 1.0, 0.6, 1.7), 0.7
        for gamma in (0.01, 0.5, 5.0):
            a = dephased_mass_state(couplings, w, gamma, backend="fock").matrix
            b = dephased_mass_state(couplings, w, gamma, backend="coherent").matrix
            np.testing.assert_allclose(a, b, atol=1e-11)

    def test_monotone_in_gamma(self):
        couplings, w = CouplingMatrix.maximal(0.5), 0.5
        negs = [
            field_cycle_with_dephasing(couplings, w, gamma=g).negativity_final
            for g in np.geomspace(1e-4, 1e2, 13)
        ]
        assert all(b <= a + 1e-14 for a, b in zip(negs, negs[1:]))

    def test_full_dephasing_breaks_field_carried_entanglement(self):
        out = field_cycle_with_dephasing(CouplingMatrix.maximal(0.5), 0.5, gamma=1e6)
        assert out.negativity_final < 1e-12

    def test_displacement_pattern_survives_full_dephasing(self):
        # a controlled-phase pattern leaves which-path amplitude, not just coherence
        couplings = CouplingMatrix.from_phases((0, 0, 0, math.pi), 0.5)
        out = field_cycle_with_dephasing(couplings, 0.5, gamma=1e6)
        assert out.negativity_final > 0.1


class TestThreshold:
    def test_bracket_contract(self):
        couplings, w = CouplingMatrix.maximal(0.5), 0.5
        res = entanglement_breaking_threshold(couplings, w, tol=1e-6)
        assert res.gamma_lo < res.gamma_hi <= res.gamma_lo * (1 + 1e-6)
        assert res.negativity_lo > 1e-6 >= res.negativity_hi
        again = entanglement_breaking_threshold(couplings, w, tol=1e-6)
        assert again == res

    def test_unentangled_baseline(self):
        with pytest.raises(PreconditionError):
            entanglement_breaking_threshold(CouplingMatrix.from_entries(0, 0, 0, 0), 0.5)

    def test_threshold_falls_with_stronger_coupling(self):
        # larger displacements leave more which-path record in the field
        couplings, w = CouplingMatrix.maximal(0.5), 0.5
        base = entanglement_breaking_threshold(couplings, w, tol=1e-6, rtol=1e-3)
        strong = entanglement_breaking_threshold(couplings.scaled(4), w, tol=1e-6, rtol=1e-3)
        assert strong.gamma_star < base.gamma_star

