import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from giesim.qcore import (
    CompositeSpace,
    DensityMatrix,
    DomainError,
    FockSpace,
    PureState,
    TruncationError,
    coherent_state,
    coherent_tail_weight,
    displacement,
    displacement_operator,
    embed,
    expm,
    number_phase_operator,
    partial_trace,
    partial_transpose,
    random_density_matrix,
    random_pure_state,
    tensor,
)

# <a|b> for a = 0.3+0.2i, b = -0.1+0.5i from the series sum at 40 digits
OVERLAP_ORACLE = complex(0.86977550403224777, 0.14930289902360979)

small_dims = st.lists(st.integers(2, 3), min_size=1, max_size=3).map(tuple)
seeds = st.integers(0, 2**32 - 1)


def loop_partial_trace(mat, dims, keep):
    """Elementwise reference partial trace."""
    n = len(dims)
    idx = list(np.ndindex(*dims))
    kdims = [dims[k] for k in keep]
    out = np.zeros((math.prod(kdims),) * 2, dtype=complex)
    kidx = {t: i for i, t in enumerate(np.ndindex(*kdims))}
    for i, a in enumerate(idx):
        for j, b in enumerate(idx):
            if all(a[s] == b[s] for s in range(n) if s not in keep):
                out[kidx[tuple(a[k] for k in keep)], kidx[tuple(b[k] for k in keep)]] += mat[i, j]
    return out


class TestSpaces:
    def test_dims_and_total(self):
        space = CompositeSpace((2, 3, 4))
        assert space.total_dim == 24
        assert space.n_subsystems == 3
        assert (space + CompositeSpace((5,))).dims == (2, 3, 4, 5)

    @pytest.mark.parametrize("dims", [(), (1,), (2, 0)])
    def test_rejects_degenerate(self, dims):
        with pytest.raises(DomainError):
            CompositeSpace(dims)

    def test_index_out_of_range(self):
        with pytest.raises(DomainError):
            CompositeSpace((2, 2)).check_index(2)


class TestStates:
    def test_basis_row_major(self):
        psi = PureState.basis((1, 0), (2, 3))
        assert np.argmax(np.abs(psi.amplitudes)) == 3

    def test_norm_enforced(self):
        with pytest.raises(DomainError):
            PureState.from_vector([1, 1], (2,), normalize=False)

    def test_amplitudes_are_read_only(self):
        psi = PureState.basis((0,), (2,))
        with pytest.raises(ValueError):
            psi.amplitudes[0] = 0

    def test_density_rejects_non_hermitian(self):
        with pytest.raises(DomainError):
            DensityMatrix((2,), np.array([[0.5, 0.1], [0.0, 0.5]]))

    def test_density_rejects_negative(self):
        with pytest.raises(DomainError):
            DensityMatrix((2,), np.diag([1.5, -0.5]))

    def test_tensor_of_state_and_operator_is_type_error(self):
        with pytest.raises(TypeError):
            tensor(PureState.basis((0,), (2,)), np.eye(2))

    def test_tensor_promotes_mixed(self, rng):
        psi = random_pure_state((2,), rng)
        rho = random_density_matrix((3,), rng)
        out = tensor(psi, rho)
        assert isinstance(out, DensityMatrix)
        np.testing.assert_allclose(out.matrix, np.kron(psi.density().matrix, rho.matrix), atol=1e-14)

    @given(small_dims, seeds)
    def test_unitary_preserves_norm(self, dims, seed):
        rng = np.random.default_rng(seed)
        psi = random_pure_state(dims, rng)
        h = rng.normal(size=(psi.space.total_dim,) * 2)
        u = expm(1j * (h + h.T))
        assert abs(np.linalg.norm(psi.evolve(u).amplitudes) - 1) < 1e-12


class TestPartialOperations:
    @given(st.lists(st.integers(2, 3), min_size=2, max_size=3).map(tuple), seeds, st.data())
    def test_partial_trace_matches_loop(self, dims, seed, data):
        rho = random_density_matrix(dims, np.random.default_rng(seed))
        keep = sorted(data.draw(st.sets(st.integers(0, len(dims) - 1), min_size=1, max_size=len(dims) - 1)))
        reduced = partial_trace(rho, keep)
        np.testing.assert_allclose(reduced.matrix, loop_partial_trace(rho.matrix, dims, keep), atol=1e-13)
        assert abs(np.trace(reduced.matrix) - 1) < 1e-12

    def test_partial_trace_of_product(self, rng):
        a = random_density_matrix((2,), rng)
        b = random_density_matrix((3,), rng)
        np.testing.assert_allclose(partial_trace(tensor(a, b), [0]).matrix, a.matrix, atol=1e-14)
        np.testing.assert_allclose(partial_trace(tensor(a, b), [1]).matrix, b.matrix, atol=1e-14)

    def test_partial_transpose_involution_and_trace(self, rng):
        rho = random_density_matrix((2, 3), rng)
        once = partial_transpose(rho, 1)
        twice = partial_transpose(once, 1, dims=(2, 3))
        np.testing.assert_allclose(twice, rho.matrix, atol=1e-15)
        assert abs(np.trace(once) - 1) < 1e-12

    def test_partial_transpose_of_bell(self):
        bell = PureState.from_vector([1, 0, 0, 1], (2, 2)).density()
        eigs = np.linalg.eigvalsh(partial_transpose(bell, 1))
        np.testing.assert_allclose(eigs, [-0.5, 0.5, 0.5, 0.5], atol=1e-14)

    def test_embed(self):
        x = np.array([[0, 1], [1, 0]])
        np.testing.assert_allclose(embed(x, 1, CompositeSpace((3, 2))), np.kron(np.eye(3), x))


class TestFock:
    def test_adaptive_truncation_minimum(self):
        assert FockSpace.for_amplitude(0.0).n_levels == 16

    @pytest.mark.parametrize("alpha", [0.5, 2.0, 5.0])
    def test_adaptive_truncation_is_smallest(self, alpha):
        n = FockSpace.for_amplitude(alpha).n_levels
        assert coherent_tail_weight(alpha, n) < 1e-12
        assert n == 16 or coherent_tail_weight(alpha, n - 1) >= 1e-12

    def test_truncation_error(self):
        with pytest.raises(TruncationError) as info:
            FockSpace(5).check_amplitude(3.0)
        assert info.value.tail_weight > 1e-12

    def test_coherent_overlap_oracle(self):
        fock = FockSpace(40)
        a = coherent_state(0.3 + 0.2j, fock)
        b = coherent_state(-0.1 + 0.5j, fock)
        assert abs(a.inner(b) - OVERLAP_ORACLE) < 1e-14

    def test_coherent_is_eigenvector_of_annihilation(self):
        fock = FockSpace(60)
        alpha = 1.2 - 0.7j
        psi = coherent_state(alpha, fock).amplitudes
        np.testing.assert_allclose(fock.annihilation() @ psi, alpha * psi, atol=1e-10)

    def test_displacement_of_vacuum_is_coherent(self):
        fock = FockSpace(50)
        vac = coherent_state(0, fock).amplitudes
        out = displacement(0.8 + 0.3j, fock) @ vac
        np.testing.assert_allclose(out, coherent_state(0.8 + 0.3j, fock).amplitudes, atol=1e-12)

    def test_displacement_of_coherent_phase(self):
        fock = FockSpace(60)
        b, g = 0.4 - 0.2j, 0.7 + 0.5j
        out = displacement(b, fock) @ coherent_state(g, fock).amplitudes
        expected = cmath.exp(1j * (b * g.conjugate()).imag) * coherent_state(g + b, fock).amplitudes
        np.testing.assert_allclose(out, expected, atol=1e-12)

    def test_displacement_operator_domain(self):
        with pytest.raises(DomainError):
            displacement_operator(-0.1, FockSpace(16))

    def test_number_phase_rotates_coherent(self):
        fock = FockSpace(40)
        out = np.diag(number_phase_operator(0.3, fock)) * coherent_state(1.0, fock).amplitudes
        np.testing.assert_allclose(out, coherent_state(cmath.exp(0.3j), fock).amplitudes, atol=1e-13)

    def test_expm_of_zero_and_phase(self):
        np.testing.assert_allclose(expm(np.zeros((3, 3))), np.eye(3))
        np.testing.assert_allclose(expm(np.diag([1j * math.pi, 0])), np.diag([-1, 1]), atol=1e-14)


class TestSmallCases:
    def test_identity_tensor(self):
        np.testing.assert_array_equal(tensor(np.eye(2), np.eye(2)), np.eye(4))

    def test_basis_tensor(self):
        psi = tensor(PureState.basis((0,), (2,)), PureState.basis((1,), (2,)))
        np.testing.assert_array_equal(psi.amplitudes, np.eye(4)[1])

    def test_bell_marginal(self):
        bell = PureState.from_vector([1, 0, 0, 1], (2, 2)).density()
        np.testing.assert_allclose(partial_trace(bell, [0]).matrix, np.eye(2) / 2, atol=1e-15)

    def test_vacuum_and_mean_number(self):
        fock = FockSpace(16)
        np.testing.assert_array_equal(coherent_state(0, fock).amplitudes, np.eye(16)[0])
        psi = coherent_state(0.5, fock).amplitudes
        assert abs(np.vdot(psi, fock.number() @ psi) - 0.25) < 1e-10

    def test_zero_arguments_are_identity(self):
        fock = FockSpace(16)
        np.testing.assert_allclose(displacement_operator(0.0, fock), np.eye(16), atol=1e-15)
        np.testing.assert_allclose(number_phase_operator(0.0, fock), np.eye(16))
        assert number_phase_operator(math.pi / 2, fock)[3, 3] == pytest.approx(cmath.exp(1.5j * math.pi))
