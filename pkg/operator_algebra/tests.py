import numpy as np
from django.test import SimpleTestCase

from core.exceptions import (
    DimensionMismatch, InvariantViolation, NonCommutingGenerators, NonPositiveTrace, NotSelfAdjoint,
)
from harness.presets import four_level_model, four_level_rho0, unit_projectors
from .codec import matrix_from_pairs, matrix_to_pairs
from .models import DensityState, SystemModel, UnnormalizedState, hermitian_defect
from .operators import (
    adjoint_lindblad, commutator, commuting_exponential, hs_distance, lindblad, normalize,
    stratonovich_drift_correction,
)
from scipy.linalg import expm


def random_hermitian(rng, n, scale=1.0):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * 0.5 * (a + a.conj().T)


def random_density(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_model(rng, n):
    coupling = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return SystemModel(random_hermitian(rng, n), 0.5 * coupling)


class CommutatorTests(SimpleTestCase):

    def test_self_commutator_vanishes(self):
        a = np.arange(9, dtype=complex).reshape(3, 3)
        np.testing.assert_allclose(commutator(a, a), np.zeros((3, 3)))

    def test_pauli_z_with_raising_entry(self):
        z = np.diag([1.0, -1.0]).astype(complex)
        e01 = np.array([[0, 1], [0, 0]], dtype=complex)
        np.testing.assert_allclose(commutator(z, e01), np.array([[0, 2], [0, 0]]))

    def test_identity_commutes(self):
        rng = np.random.default_rng(1)
        h = random_hermitian(rng, 4)
        np.testing.assert_allclose(commutator(h, np.eye(4)), np.zeros((4, 4)), atol=1e-15)

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionMismatch):
            commutator(np.eye(2), np.eye(3))


class LindbladTests(SimpleTestCase):

    def setUp(self):
        self.model = four_level_model()
        self.rho0 = four_level_rho0()

    def test_commuting_diagonal_case_is_zero(self):
        model = SystemModel(np.zeros((3, 3)), np.diag([0.5, -1.0, 2.0]))
        x = np.diag([1.0, 2.0, 3.0]).astype(complex)
        np.testing.assert_allclose(lindblad(model, x), np.zeros((3, 3)), atol=1e-15)
        np.testing.assert_allclose(adjoint_lindblad(model, x), np.zeros((3, 3)), atol=1e-15)

    def test_four_level_projector(self):
        out = lindblad(self.model, unit_projectors()[0])
        expected = np.zeros((4, 4), dtype=complex)
        expected[0, 0] = -0.09
        expected[0, 3] = expected[3, 0] = 0.15
        np.testing.assert_allclose(out, expected, atol=1e-14)
        self.assertAlmostEqual(out[3, 3].real, 0.0, places=14)

    def test_coupling_free_reduction(self):
        rng = np.random.default_rng(2)
        h = random_hermitian(rng, 3)
        model = SystemModel(h, np.zeros((3, 3)))
        x = random_hermitian(rng, 3)
        np.testing.assert_allclose(adjoint_lindblad(model, x), -1j * commutator(h, x), atol=1e-13)
        np.testing.assert_allclose(lindblad(model, x), 1j * commutator(h, x), atol=1e-13)

    def test_adjoint_at_initial_state(self):
        out = adjoint_lindblad(self.model, self.rho0)
        expected = np.zeros((4, 4), dtype=complex)
        expected[0, 0] = -0.01125
        expected[3, 3] = 0.01125
        expected[0, 3] = expected[3, 0] = 0.1125
        np.testing.assert_allclose(out, expected, atol=1e-14)

    def test_trace_duality_and_trace_preservation(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            model = random_model(rng, 4)
            rho = random_hermitian(rng, 4)
            x = random_hermitian(rng, 4)
            left = np.trace(adjoint_lindblad(model, rho) @ x)
            right = np.trace(rho @ lindblad(model, x))
            self.assertLess(abs(left - right), 1e-10)
            self.assertLess(abs(np.trace(adjoint_lindblad(model, rho))), 1e-12)

    def test_outputs_are_self_adjoint(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            model = random_model(rng, 4)
            x = random_hermitian(rng, 4)
            for op in (lindblad, adjoint_lindblad, stratonovich_drift_correction):
                out = op(model, x)
                self.assertLessEqual(hermitian_defect(out), 1e-12 * (1 + np.linalg.norm(out)))

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionMismatch):
            lindblad(self.model, np.eye(3))


class DriftCorrectionTests(SimpleTestCase):

    def test_reflection_coupling_doubles_state(self):
        model = four_level_model(transition=0.0)
        out = stratonovich_drift_correction(model, four_level_rho0())
        np.testing.assert_allclose(out, np.diag([0.25, 0.25, 0.75, 0.75]), atol=1e-15)

    def test_zero_coupling(self):
        model = SystemModel.zero(4)
        out = stratonovich_drift_correction(model, four_level_rho0())
        np.testing.assert_allclose(out, np.zeros((4, 4)))


class DistanceAndNormalizeTests(SimpleTestCase):

    def test_distance_basics(self):
        rho = four_level_rho0()
        self.assertEqual(hs_distance(rho, rho), 0.0)
        self.assertAlmostEqual(hs_distance(np.diag([1.0, 0.0]), np.diag([0.0, 1.0])), np.sqrt(2))

    def test_distance_matches_elementwise_sum(self):
        rng = np.random.default_rng(5)
        a, b = random_hermitian(rng, 4), random_hermitian(rng, 4)
        oracle = np.sqrt(sum(abs(a[i, j] - b[i, j]) ** 2 for i in range(4) for j in range(4)))
        self.assertAlmostEqual(hs_distance(a, b), oracle, delta=1e-12)
        self.assertAlmostEqual(hs_distance(a, b), hs_distance(b, a), delta=1e-15)

    def test_normalize(self):
        out = normalize(UnnormalizedState(np.diag([2.0, 2.0])))
        np.testing.assert_allclose(out.matrix, np.diag([0.5, 0.5]))
        rho0 = four_level_rho0()
        np.testing.assert_allclose(normalize(UnnormalizedState(rho0)).matrix, rho0, atol=1e-16)

    def test_normalize_rejects_collapsed_trace(self):
        with self.assertRaises(NonPositiveTrace):
            normalize(np.zeros((2, 2)))

    def test_state_invariants(self):
        with self.assertRaises(InvariantViolation):
            DensityState(np.diag([0.5, 0.6]))
        with self.assertRaises(InvariantViolation):
            UnnormalizedState(np.diag([1.0, -0.5]))
        with self.assertRaises(NotSelfAdjoint):
            SystemModel(np.array([[0, 1], [0, 0]]), np.zeros((2, 2)))


class CommutingExponentialTests(SimpleTestCase):

    def test_zero_weights_give_identity(self):
        out = commuting_exponential(unit_projectors(), np.zeros(4))
        np.testing.assert_allclose(out, np.eye(4), atol=1e-15)

    def test_diagonal_projectors(self):
        theta = np.array([0.3, -1.2, 2.0, 0.7])
        out = commuting_exponential(unit_projectors(), theta)
        np.testing.assert_allclose(out, np.diag(np.exp(theta / 2)), atol=1e-14)

    def test_single_generator_matches_expm(self):
        x = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
        out = commuting_exponential([x], [0.8])
        np.testing.assert_allclose(out, expm(0.4 * x), atol=1e-13)

    def test_group_property(self):
        rng = np.random.default_rng(6)
        q, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
        gens = [q @ np.diag(rng.normal(size=4)) @ q.conj().T for _ in range(3)]
        theta, phi = rng.normal(size=3), rng.normal(size=3)
        left = commuting_exponential(gens, theta) @ commuting_exponential(gens, phi)
        np.testing.assert_allclose(left, commuting_exponential(gens, theta + phi), atol=1e-10)

    def test_degenerate_family_falls_back_to_expm(self):
        gens = [np.diag([1.0, 1.0, 0.0]), np.diag([0.0, 0.0, 1.0])]
        q = np.array([[1, 0, 1], [0, np.sqrt(2), 0], [1, 0, -1]]) / np.sqrt(2)
        rotated = [q @ g @ q.T for g in gens]
        out = commuting_exponential(rotated, [1.0, 2.0])
        np.testing.assert_allclose(out, expm(0.5 * (rotated[0] + 2.0 * rotated[1])), atol=1e-12)

    def test_non_commuting_generators(self):
        x = np.array([[0.0, 1.0], [1.0, 0.0]])
        z = np.diag([1.0, -1.0])
        with self.assertRaises(NonCommutingGenerators):
            commuting_exponential([x, z], [1.0, 1.0])


class CodecTests(SimpleTestCase):

    def test_pairs_layout_is_row_major(self):
        m = matrix_from_pairs([[[1, 0], [0, 2]], [[3, 0], [0, -1]]])
        np.testing.assert_allclose(m, np.array([[1, 2j], [3, -1j]]))
        self.assertEqual(matrix_to_pairs(m)[0][1], [0.0, 2.0])

    def test_rejects_ragged_input(self):
        with self.assertRaises(DimensionMismatch):
            matrix_from_pairs([[[1, 0]], [[0, 0], [1, 0]]])
