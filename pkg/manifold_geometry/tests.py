import numpy as np
from django.test import SimpleTestCase
from scipy.linalg import expm

from core.exceptions import (
    InvariantViolation, NonCommutingGenerators, NotSelfAdjoint, OverflowGuard, SingularMetric,
)
from harness.presets import four_level_chart, four_level_model, four_level_rho0, unit_projectors
from operator_algebra.tests import random_density
from .geometry import (
    ChartPoint, chart_second_derivative, chart_state, fisher_derivative, fisher_matrix,
    project_coordinates, symmetrized_inner, tangent_basis,
)
from .models import Chart, FisherMatrix, ThetaPoint


def rotated_chart(rng, spectra=None):
    """Commuting but non-diagonal generators A_i = Q D_i Qᵀ."""
    q, _ = np.linalg.qr(rng.normal(size=(4, 4)))
    if spectra is None:
        spectra = [np.eye(4)[i] for i in range(4)]
    generators = [q @ np.diag(s) @ q.T for s in spectra]
    return Chart(generators, random_density(rng, 4))


def central_difference(fn, theta, i, eps=1e-4):
    step = np.zeros_like(theta)
    step[i] = eps
    return (fn(theta + step) - fn(theta - step)) / (2 * eps)


class ChartTests(SimpleTestCase):

    def test_rejects_non_commuting_generators(self):
        x = np.array([[0, 1], [1, 0]], dtype=complex)
        z = np.diag([1.0, -1.0]).astype(complex)
        with self.assertRaises(NonCommutingGenerators):
            Chart([x, z], np.eye(2) / 2)

    def test_rejects_non_self_adjoint_generator(self):
        a = np.array([[0, 1], [0, 0]], dtype=complex)
        with self.assertRaises(NotSelfAdjoint):
            Chart([a], np.eye(2) / 2)

    def test_rejects_base_state_without_unit_trace(self):
        with self.assertRaises(InvariantViolation):
            Chart(unit_projectors(2), np.eye(2))

    def test_dimensions(self):
        chart = four_level_chart()
        self.assertEqual(chart.dim_n, 4)
        self.assertEqual(chart.dim_m, 4)

    def test_theta_box(self):
        with self.assertRaises(OverflowGuard):
            ThetaPoint([0.0, 51.0])
        with self.assertRaises(OverflowGuard):
            ThetaPoint([np.nan])
        self.assertEqual(ThetaPoint.origin(3).dim, 3)


class ChartStateTests(SimpleTestCase):

    def setUp(self):
        self.chart = four_level_chart()
        self.rho0 = four_level_rho0()

    def test_origin_is_base_state(self):
        np.testing.assert_allclose(chart_state(self.chart, np.zeros(4)).matrix, self.rho0, atol=1e-15)

    def test_log_four_on_first_level(self):
        state = chart_state(self.chart, [np.log(4), 0, 0, 0])
        np.testing.assert_allclose(state.matrix, np.diag([1 / 2, 1 / 8, 3 / 8, 3 / 8]), atol=1e-14)

    def test_trace_identity(self):
        rng = np.random.default_rng(4)
        chart = rotated_chart(rng)
        theta = rng.uniform(-1, 1, size=4)
        expected = np.trace(chart.base_state @ expm(chart.combine(theta))).real
        self.assertAlmostEqual(chart_state(chart, theta).trace, expected, places=12)

    def test_overflow_guard(self):
        with self.assertRaises(OverflowGuard):
            chart_state(self.chart, [60.0, 0, 0, 0])


class TangentTests(SimpleTestCase):

    def test_first_tangent_vector_at_origin(self):
        tangent = tangent_basis(four_level_chart(), np.zeros(4))
        np.testing.assert_allclose(tangent[0], np.diag([1 / 8, 0, 0, 0]), atol=1e-15)

    def test_matches_central_differences(self):
        rng = np.random.default_rng(5)
        for chart in (four_level_chart(), rotated_chart(rng)):
            theta = rng.uniform(-1, 1, size=4)
            tangent = tangent_basis(chart, theta)
            for i in range(4):
                fd = central_difference(lambda t: chart_state(chart, t).matrix, theta, i)
                np.testing.assert_allclose(tangent[i], fd, atol=1e-6)

    def test_tangent_vectors_are_self_adjoint(self):
        rng = np.random.default_rng(6)
        tangent = tangent_basis(rotated_chart(rng), rng.uniform(-1, 1, size=4))
        for t in tangent:
            np.testing.assert_allclose(t, t.conj().T, atol=1e-14)


class InnerProductTests(SimpleTestCase):

    def test_identity_pair_gives_trace(self):
        rho = np.diag([0.5, 1.5]).astype(complex)
        self.assertAlmostEqual(symmetrized_inner(rho, np.eye(2), np.eye(2)), 2.0)

    def test_first_projector(self):
        a1 = unit_projectors(4)[0]
        self.assertAlmostEqual(symmetrized_inner(four_level_rho0(), a1, a1), 1 / 8)

    def test_symmetric(self):
        rng = np.random.default_rng(7)
        rho = random_density(rng, 3)
        a = rng.normal(size=(3, 3))
        b = rng.normal(size=(3, 3))
        a, b = a + a.T, b + b.T
        self.assertAlmostEqual(symmetrized_inner(rho, a, b), symmetrized_inner(rho, b, a), places=14)


class FisherTests(SimpleTestCase):

    def test_origin_value(self):
        fisher = fisher_matrix(four_level_chart(), np.zeros(4))
        np.testing.assert_allclose(fisher.entries, np.diag([1 / 8, 1 / 8, 3 / 8, 3 / 8]), atol=1e-15)
        self.assertAlmostEqual(fisher.condition_estimate, 3.0)

    def test_matches_second_moments(self):
        rng = np.random.default_rng(8)
        for chart in (rotated_chart(rng), rotated_chart(rng, spectra=[[1, 2, 3, 4], [1, 0, 0, 1]])):
            theta = rng.uniform(-1, 1, size=chart.dim_m)
            point = ChartPoint(chart, theta)
            expected = np.array([
                [np.trace(point.rho @ a @ b).real for b in chart.generators] for a in chart.generators
            ])
            np.testing.assert_allclose(point.fisher.entries, expected, atol=1e-12)
            np.testing.assert_allclose(chart.second_moments(point.rho), expected, atol=1e-12)

    def test_identity_generator(self):
        chart = Chart([np.eye(3)], random_density(np.random.default_rng(9), 3))
        theta = [0.7]
        fisher = fisher_matrix(chart, theta)
        self.assertAlmostEqual(fisher.entries[0, 0], chart_state(chart, theta).trace, places=12)

    def test_positive_definite_on_box(self):
        rng = np.random.default_rng(10)
        chart = four_level_chart()
        for _ in range(100):
            fisher = fisher_matrix(chart, rng.uniform(-2, 2, size=4))
            self.assertGreater(fisher.eigenvalues[0], 0.0)
            self.assertGreaterEqual(fisher.condition_estimate, 1.0)

    def test_duplicate_generators_are_singular(self):
        p = unit_projectors(4)
        chart = Chart([p[0], p[0], p[1], p[2]], four_level_rho0())
        with self.assertRaises(SingularMetric):
            fisher_matrix(chart, np.zeros(4))

    def test_singularity_ignores_diagonal_spread(self):
        fisher = FisherMatrix(np.diag([1.0, 1e-14]))
        self.assertGreater(fisher.condition_estimate, 1e12)
        np.testing.assert_allclose(fisher.solve([1.0, 1e-14]), [1.0, 1.0])
        with self.assertRaises(SingularMetric):
            FisherMatrix(np.array([[1.0, 1.0 - 1e-14], [1.0 - 1e-14, 1.0]]))

    def test_solve(self):
        fisher = FisherMatrix(np.array([[2.0, 1.0], [1.0, 3.0]]))
        np.testing.assert_allclose(fisher.solve([3.0, 4.0]), [1.0, 1.0])
        np.testing.assert_allclose(fisher.inverse @ fisher.entries, np.eye(2), atol=1e-14)

    def test_rejects_asymmetric_entries(self):
        with self.assertRaises(InvariantViolation):
            FisherMatrix(np.array([[1.0, 0.5], [0.0, 1.0]]))


class ProjectionTests(SimpleTestCase):

    def setUp(self):
        self.chart = four_level_chart()
        self.rho0 = four_level_rho0()

    def test_diffusion_of_base_state(self):
        L = four_level_model().coupling
        nu = L @ self.rho0 + self.rho0 @ L.conj().T
        np.testing.assert_allclose(project_coordinates(self.chart, np.zeros(4), nu), [2, -2, 2, -2], atol=1e-13)

    def test_tangent_vectors_are_fixed(self):
        tangent = tangent_basis(self.chart, np.zeros(4))
        for i in range(4):
            np.testing.assert_allclose(project_coordinates(self.chart, np.zeros(4), tangent[i]), np.eye(4)[i], atol=1e-13)

    def test_orthogonal_operator_projects_to_zero(self):
        nu = np.zeros((4, 4), dtype=complex)
        nu[0, 1] = nu[1, 0] = 1.0
        np.testing.assert_allclose(project_coordinates(self.chart, np.zeros(4), nu), np.zeros(4), atol=1e-15)

    def test_idempotence(self):
        rng = np.random.default_rng(11)
        chart = rotated_chart(rng)
        point = ChartPoint(chart, rng.uniform(-1, 1, size=4))
        for _ in range(100):
            c = rng.normal(size=4)
            np.testing.assert_allclose(point.project(point.tangent_vector(c)), c, atol=1e-9)

    def test_normal_equations(self):
        rng = np.random.default_rng(12)
        chart = rotated_chart(rng)
        theta = rng.uniform(-1, 1, size=4)
        point = ChartPoint(chart, theta)
        for _ in range(20):
            a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
            nu = a + a.conj().T
            residual = nu - point.tangent_vector(project_coordinates(chart, theta, nu))
            np.testing.assert_allclose(chart.pairing(residual), np.zeros(4), atol=1e-9)


class SecondOrderTests(SimpleTestCase):

    def test_fisher_derivative_at_origin(self):
        chart = four_level_chart()
        for j in range(4):
            self.assertAlmostEqual(fisher_derivative(chart, np.zeros(4), j)[j, j], four_level_rho0()[j, j].real)

    def test_fisher_derivative_matches_central_differences(self):
        rng = np.random.default_rng(13)
        chart = rotated_chart(rng)
        theta = rng.uniform(-1, 1, size=4)
        for i in range(4):
            fd = central_difference(lambda t: fisher_matrix(chart, t).entries, theta, i)
            exact = fisher_derivative(chart, theta, i)
            np.testing.assert_allclose(exact, fd, rtol=1e-5, atol=1e-7)

    def test_second_derivative_is_symmetric(self):
        rng = np.random.default_rng(14)
        chart = rotated_chart(rng)
        theta = rng.uniform(-1, 1, size=4)
        np.testing.assert_allclose(
            chart_second_derivative(chart, theta, 0, 2), chart_second_derivative(chart, theta, 2, 0), atol=1e-14,
        )

    def test_second_derivative_matches_central_differences(self):
        rng = np.random.default_rng(15)
        chart = rotated_chart(rng)
        theta = rng.uniform(-1, 1, size=4)
        for p, q in ((0, 0), (1, 3)):
            fd = central_difference(lambda t: tangent_basis(chart, t)[p], theta, q)
            np.testing.assert_allclose(chart_second_derivative(chart, theta, p, q), fd, rtol=1e-5, atol=1e-7)
