import tempfile
from pathlib import Path
from unittest import mock

import numpy as np
from django.test import SimpleTestCase, tag

from core.exceptions import InvariantViolation, LabError, NonPositiveTrace, NotSelfAdjoint, OverflowGuard
from harness.presets import four_level_chart, four_level_model, four_level_rho0, spectral_chart
from manifold_geometry.geometry import ChartPoint
from manifold_geometry.tests import rotated_chart
from operator_algebra.models import SystemModel
from operator_algebra.operators import adjoint_lindblad, hs_distance
from operator_algebra.tests import random_density, random_hermitian, random_model
from stratonovich_taylor.models import WienerPath
from .coefficients import (
    CoefficientEngine, baseline_coefficients, coefficients_for, corollary42_coefficients, ito_coefficients,
    new_coefficients_abstract, new_coefficients_coordinates,
)
from .dynamics import (
    integrate_linear_filter, integrate_sme, linear_stratonovich_step, observation_increment, sme_ito_step,
)
from .models import CoefficientSet, FilterTrajectory, SpectralData, Variant
from .objective import first_order_residual, problem_objective
from .projection import integrate_projection_filter, write_trajectory_csv

SELF_ADJOINT = 0.0


def pure_state(n, j):
    rho = np.zeros((n, n), dtype=complex)
    rho[j, j] = 1.0
    return rho


class ObservationTests(SimpleTestCase):

    def test_skew_coupling_gives_bare_noise(self):
        model = SystemModel(np.zeros((2, 2)), np.array([[0, 1], [-1, 0]], dtype=complex))
        self.assertAlmostEqual(observation_increment(np.eye(2) / 2, model, 0.37, 0.01), 0.37, places=15)

    def test_four_level_initial_state_has_zero_mean(self):
        dy = observation_increment(four_level_rho0(), four_level_model(), -0.2, 0.01)
        self.assertAlmostEqual(dy, -0.2, places=15)

    def test_ground_state(self):
        model = four_level_model(SELF_ADJOINT)
        self.assertAlmostEqual(observation_increment(pure_state(4, 0), model, 0.1, 0.01), 0.12, places=14)


class SmeStepTests(SimpleTestCase):

    def test_zero_model_leaves_state_unchanged(self):
        rho = random_density(np.random.default_rng(0), 3)
        out = sme_ito_step(rho, SystemModel.zero(3), 0.3, 0.01)
        np.testing.assert_allclose(out.matrix, rho, atol=1e-14)

    def test_eigenstate_of_self_adjoint_coupling_is_fixed(self):
        rho = pure_state(4, 0)
        out = sme_ito_step(rho, four_level_model(SELF_ADJOINT), 0.8, 0.01)
        np.testing.assert_allclose(out.matrix, rho, atol=1e-14)

    def test_single_step_term_by_term(self):
        model, rho = four_level_model(), four_level_rho0()
        dt = 5.0 / 2 ** 11
        L, Ld = model.coupling, model.coupling_dagger
        lindblad_term = L @ rho @ Ld - 0.5 * (Ld @ L @ rho + rho @ Ld @ L)
        # Tr(ρ_0(L + L†)) = 0, so the innovation equals dY = 0 and only the Lindblad term moves ρ.
        expected = rho + lindblad_term * dt
        expected = 0.5 * (expected + expected.conj().T)
        expected /= np.trace(expected).real
        np.testing.assert_allclose(sme_ito_step(rho, model, 0.0, dt).matrix, expected, atol=1e-14)

    def test_rejects_non_positive_step(self):
        with self.assertRaises(LabError):
            sme_ito_step(four_level_rho0(), four_level_model(), 0.0, 0.0)

    def test_trajectory_keeps_state_invariants(self):
        noise = WienerPath.sample(11, 0, 400, 5.0 / 2 ** 12)
        trajectory = integrate_sme(four_level_model(), four_level_rho0(), noise)
        traces = np.trace(trajectory.states, axis1=1, axis2=2).real
        np.testing.assert_allclose(traces, 1.0, atol=1e-8)
        smallest = np.linalg.eigvalsh(trajectory.states)[:, 0]
        self.assertGreaterEqual(smallest.min(), -1e-8)
        self.assertEqual(trajectory.dy[0], 0.0)
        self.assertEqual(trajectory.state_dimension, 15)


class LinearFilterTests(SimpleTestCase):

    def test_hamiltonian_only_heun_step(self):
        rng = np.random.default_rng(2)
        h = random_hermitian(rng, 3)
        rho = random_density(rng, 3)
        dt = 0.01
        a0 = -1j * (h @ rho - rho @ h)
        shifted = rho + a0 * dt
        a1 = -1j * (h @ shifted - shifted @ h)
        out = linear_stratonovich_step(rho, SystemModel(h, np.zeros((3, 3))), 0.5, dt)
        np.testing.assert_allclose(out.matrix, rho + 0.5 * (a0 + a1) * dt, atol=1e-14)

    def test_identity_coupling_single_step(self):
        rho = random_density(np.random.default_rng(3), 2)
        dt, dy = 0.01, 0.05
        a = -2 * dt + 2 * dy
        out = linear_stratonovich_step(rho, SystemModel(np.zeros((2, 2)), np.eye(2)), dy, dt)
        np.testing.assert_allclose(out.matrix, rho * (1 + a + a * a / 2), atol=1e-14)

    def test_identity_coupling_tracks_closed_form(self):
        rho = random_density(np.random.default_rng(4), 2)
        path = WienerPath.sample(5, 0, 10000, 1e-4)
        trajectory = integrate_linear_filter(SystemModel(np.zeros((2, 2)), np.eye(2)), rho, path.increments, path.dt)
        exact = rho * np.exp(2 * path.cumulative[-1] - 2 * path.horizon)
        np.testing.assert_allclose(trajectory.states[-1], exact, rtol=1e-2)


class DiffusionCoefficientTests(SimpleTestCase):

    def setUp(self):
        self.chart, self.model = four_level_chart(), four_level_model()

    def test_four_level_origin(self):
        coefficients = new_coefficients_abstract(self.chart, np.zeros(4), self.model)
        np.testing.assert_allclose(coefficients.g, [2, -2, 2, -2], atol=1e-12)

    def test_coordinate_route_matches_abstract_route(self):
        rng = np.random.default_rng(6)
        chart, model = rotated_chart(rng), random_model(rng, 4)
        for _ in range(100):
            theta = rng.uniform(-1, 1, size=4)
            abstract = new_coefficients_abstract(chart, theta, model).g
            coordinates = new_coefficients_coordinates(chart, theta, model).g
            np.testing.assert_allclose(coordinates, abstract, rtol=1e-9, atol=1e-12)

    def test_abstract_route_projects_the_noise_term(self):
        rng = np.random.default_rng(8)
        chart, model = rotated_chart(rng), random_model(rng, 4)
        theta = rng.uniform(-1, 1, size=4)
        point = ChartPoint(chart, theta)
        L, Ld = model.coupling, model.coupling_dagger
        expected = point.project(L @ point.rho + point.rho @ Ld)
        np.testing.assert_allclose(new_coefficients_abstract(chart, theta, model).g, expected, atol=1e-12)

        with mock.patch('quantum_filters.coefficients.diffusion', return_value=np.zeros((4, 4))):
            abstract = new_coefficients_abstract(chart, theta, model).g
            coordinates = new_coefficients_coordinates(chart, theta, model).g
        np.testing.assert_array_equal(abstract, 0.0)
        np.testing.assert_allclose(coordinates, expected, rtol=1e-9, atol=1e-12)

    def test_diffusion_is_shared_by_every_variant(self):
        rng = np.random.default_rng(7)
        chart, model = rotated_chart(rng), random_model(rng, 4)
        theta = rng.uniform(-1, 1, size=4)
        g = new_coefficients_abstract(chart, theta, model).g
        np.testing.assert_allclose(ito_coefficients(chart, theta, model).g, g, rtol=1e-9, atol=1e-10)
        np.testing.assert_allclose(baseline_coefficients(chart, theta, model).g, g, rtol=1e-9, atol=1e-10)

    def test_jacobian_matches_finite_differences(self):
        rng = np.random.default_rng(8)
        chart, model = rotated_chart(rng), random_model(rng, 4)
        engine = CoefficientEngine(chart, model)
        theta = rng.uniform(-0.5, 0.5, size=4)
        jacobian = engine.new_abstract(theta).g_jacobian
        eps = 1e-5
        for q in range(4):
            step = np.zeros(4)
            step[q] = eps
            column = (engine.diffusion(engine.point(theta + step))
                      - engine.diffusion(engine.point(theta - step))) / (2 * eps)
            np.testing.assert_allclose(jacobian[:, q], column, rtol=1e-5, atol=1e-7)

    def test_zero_model(self):
        coefficients = new_coefficients_abstract(self.chart, np.zeros(4), SystemModel.zero(4))
        np.testing.assert_allclose(coefficients.f, 0.0, atol=1e-15)
        np.testing.assert_allclose(coefficients.g, 0.0, atol=1e-15)


class DriftCoefficientTests(SimpleTestCase):

    def setUp(self):
        self.chart, self.model = four_level_chart(), four_level_model()

    def test_four_level_origin_new_and_baseline(self):
        origin = np.zeros(4)
        new = new_coefficients_abstract(self.chart, origin, self.model)
        old = baseline_coefficients(self.chart, origin, self.model)
        np.testing.assert_allclose(new.f, [-2.09, -2.0, -2.0, -1.97], atol=1e-12)
        np.testing.assert_allclose(old.f, [-2.09, -2.0, -2.0, -2.0], atol=1e-12)

    def test_delta_entries_on_diagonal_chart(self):
        coefficients = new_coefficients_coordinates(self.chart, np.zeros(4), self.model)
        delta = coefficients.extras['delta']
        diag = np.diag(four_level_rho0()).real
        for j in range(4):
            expected = np.zeros((4, 4))
            expected[j, j] = diag[j]
            np.testing.assert_allclose(delta[j], expected, atol=1e-15)

    def test_ito_gamma_at_origin(self):
        coefficients = ito_coefficients(self.chart, np.zeros(4), self.model)
        expected = np.array([-0.09 / 8 - 0.25, -0.25, -0.75, 0.09 / 8 - 0.75])
        np.testing.assert_allclose(coefficients.extras['gamma'], expected, atol=1e-14)

    def test_ito_drift_is_stratonovich_conversion(self):
        rng = np.random.default_rng(9)
        chart, model = rotated_chart(rng), random_model(rng, 4)
        for _ in range(10):
            theta = rng.uniform(-1, 1, size=4)
            new = new_coefficients_abstract(chart, theta, model)
            ito = ito_coefficients(chart, theta, model)
            expected = new.f + 0.5 * new.g_jacobian @ new.g
            np.testing.assert_allclose(ito.f, expected, rtol=1e-9, atol=1e-10)

    def test_coordinate_diagnostics(self):
        rng = np.random.default_rng(10)
        chart, model = rotated_chart(rng), random_model(rng, 4)
        theta = rng.uniform(-1, 1, size=4)
        coordinates = new_coefficients_coordinates(chart, theta, model)
        abstract = new_coefficients_abstract(chart, theta, model)
        np.testing.assert_allclose(coordinates.extras['reconciled_f'], abstract.f, rtol=1e-9, atol=1e-10)
        self.assertAlmostEqual(
            coordinates.extras['discrepancy'],
            float(np.linalg.norm(coordinates.f - abstract.f)), places=8,
        )

    def test_zero_model_ito_drift(self):
        coefficients = ito_coefficients(self.chart, np.full(4, 0.3), SystemModel.zero(4))
        np.testing.assert_allclose(coefficients.f, 0.0, atol=1e-15)

    def test_abstract_route_residual_is_normal(self):
        engine = CoefficientEngine(self.chart, self.model)
        point = engine.point(np.array([0.2, -0.1, 0.4, 0.0]))
        coefficients = engine.new_abstract(point)
        nu = adjoint_lindblad(self.model, point.rho) - 0.5 * engine.second_diffusion(
            point, coefficients.g, coefficients.g_jacobian)
        residual = nu - point.tangent_vector(coefficients.f)
        np.testing.assert_allclose(self.chart.pairing(residual), 0.0, atol=1e-9)


class ReductionTests(SimpleTestCase):

    def test_first_order_residual_vanishes_for_diagonal_coupling(self):
        rng = np.random.default_rng(12)
        chart = four_level_chart()
        model = SystemModel(random_hermitian(rng, 4), four_level_model(SELF_ADJOINT).coupling)
        for _ in range(5):
            theta = rng.uniform(-1, 1, size=4)
            new = new_coefficients_abstract(chart, theta, model)
            self.assertLessEqual(first_order_residual(chart, theta, model, new.g), 1e-12)
            old = baseline_coefficients(chart, theta, model)
            np.testing.assert_allclose(new.f, old.f, rtol=1e-9, atol=1e-9)

    def test_spectral_chart_closed_form(self):
        chart, model = spectral_chart(), four_level_model(SELF_ADJOINT)
        spectral = SpectralData.from_coupling(model)
        np.testing.assert_allclose(spectral.eigenvalues, [-1.0, 1.0])
        # eigh orders eigenvalues ascending, the chart lists the +1 projector first.
        spectral = SpectralData(spectral.eigenvalues[::-1], spectral.projectors[::-1])
        for theta in ([0.0, 0.0], [0.4, -0.7]):
            closed = corollary42_coefficients(spectral, chart, theta, model)
            np.testing.assert_allclose(closed.g, [2.0, -2.0], atol=1e-12)
            np.testing.assert_allclose(closed.f, [-2.0, -2.0], atol=1e-12)
            new = new_coefficients_abstract(chart, theta, model)
            np.testing.assert_allclose(new.f, closed.f, atol=1e-10)
            np.testing.assert_allclose(new.g, closed.g, atol=1e-10)

    def test_closed_form_with_hamiltonian(self):
        rng = np.random.default_rng(13)
        chart = four_level_chart()
        model = SystemModel(random_hermitian(rng, 4), four_level_model(SELF_ADJOINT).coupling)
        engine = CoefficientEngine(chart, model)
        np.testing.assert_allclose(engine.spectral.eigenvalues, [1, -1, 1, -1], atol=1e-12)
        theta = rng.uniform(-1, 1, size=4)
        closed = engine.corollary(theta)
        new = engine.new_abstract(theta)
        np.testing.assert_allclose(closed.f, new.f, atol=1e-10)
        np.testing.assert_allclose(closed.extras['xi'], 1.0)

    def test_corollary_requires_self_adjoint_coupling(self):
        with self.assertRaises(NotSelfAdjoint):
            coefficients_for('corollary', four_level_chart(), np.zeros(4), four_level_model())

    def test_corollary_requires_spectral_generators(self):
        model = four_level_model(SELF_ADJOINT)
        spectral = SpectralData.from_chart(model, four_level_chart())
        with self.assertRaises(InvariantViolation):
            corollary42_coefficients(spectral, spectral_chart(), np.zeros(2), model)


class SpectralDataTests(SimpleTestCase):

    def test_reconstruction(self):
        model = four_level_model(SELF_ADJOINT)
        spectral = SpectralData.from_coupling(model)
        self.assertEqual(spectral.count, 2)
        np.testing.assert_allclose(spectral.reconstruct(), model.coupling, atol=1e-12)

    def test_zero_eigenvalues_are_dropped(self):
        model = SystemModel(np.zeros((3, 3)), np.diag([0.0, 2.0, 2.0]))
        spectral = SpectralData.from_coupling(model)
        np.testing.assert_allclose(spectral.eigenvalues, [2.0])
        np.testing.assert_allclose(spectral.projectors[0], np.diag([0, 1, 1]), atol=1e-12)

    def test_rejects_non_self_adjoint_coupling(self):
        with self.assertRaises(NotSelfAdjoint):
            SpectralData.from_coupling(four_level_model())

    def test_rejects_overlapping_projectors(self):
        with self.assertRaises(InvariantViolation):
            SpectralData([1.0, 2.0], [np.diag([1, 1, 0]), np.diag([0, 1, 1])])


class CoefficientSetTests(SimpleTestCase):

    def test_rejects_non_finite_entries(self):
        with self.assertRaises(InvariantViolation):
            CoefficientSet([np.nan, 0.0], [1.0, 1.0], Variant.BASELINE)

    def test_variant_parsing(self):
        self.assertIs(Variant.parse('old'), Variant.BASELINE)
        self.assertIs(Variant.parse('NewIto'), Variant.NEW_ITO)
        with self.assertRaises(LabError):
            Variant.parse('newest')


class ObjectiveTests(SimpleTestCase):

    def setUp(self):
        self.chart, self.model = four_level_chart(), four_level_model()
        self.theta = np.array([0.1, -0.3, 0.2, 0.05])
        self.coefficients = new_coefficients_abstract(self.chart, self.theta, self.model)

    def test_first_order_optimality_of_g(self):
        best = problem_objective(self.chart, self.theta, self.model, self.coefficients, 1, 0.01)
        rng = np.random.default_rng(14)
        for _ in range(5):
            perturbed = CoefficientSet(self.coefficients.f, self.coefficients.g + 1e-3 * rng.normal(size=4),
                                       Variant.NEW_STRATONOVICH, self.coefficients.g_jacobian)
            self.assertLessEqual(best, problem_objective(self.chart, self.theta, self.model, perturbed, 1, 0.01))

    def test_second_order_optimality_of_f(self):
        best = problem_objective(self.chart, self.theta, self.model, self.coefficients, 2, 0.01)
        rng = np.random.default_rng(15)
        for _ in range(5):
            perturbed = CoefficientSet(self.coefficients.f + 1e-3 * rng.normal(size=4), self.coefficients.g,
                                       Variant.NEW_STRATONOVICH, self.coefficients.g_jacobian)
            self.assertLessEqual(best, problem_objective(self.chart, self.theta, self.model, perturbed, 2, 0.01))

    def test_new_drift_beats_baseline(self):
        old = baseline_coefficients(self.chart, self.theta, self.model)
        old = CoefficientSet(old.f, old.g, Variant.BASELINE, self.coefficients.g_jacobian)
        self.assertLess(
            problem_objective(self.chart, self.theta, self.model, self.coefficients, 2, 0.01),
            problem_objective(self.chart, self.theta, self.model, old, 2, 0.01),
        )

    def test_rejects_other_orders(self):
        with self.assertRaises(LabError):
            problem_objective(self.chart, self.theta, self.model, self.coefficients, 3, 0.01)


class ProjectionFilterTests(SimpleTestCase):

    def test_zero_model_stays_at_origin(self):
        path = WienerPath.sample(1, 0, 50, 0.02)
        trajectory = integrate_projection_filter(four_level_chart(), SystemModel.zero(4), 'new', path, 0.02, 1.0)
        np.testing.assert_array_equal(trajectory.thetas, 0.0)
        self.assertEqual(trajectory.state_dimension, 4)

    def test_new_and_baseline_agree_for_self_adjoint_coupling(self):
        chart, model = four_level_chart(), four_level_model(SELF_ADJOINT)
        path = WienerPath.sample(2, 0, 256, 2.5 / 256)
        new = integrate_projection_filter(chart, model, 'new', path, path.dt, path.horizon)
        old = integrate_projection_filter(chart, model, 'old', path, path.dt, path.horizon)
        closed = integrate_projection_filter(chart, model, 'corollary', path, path.dt, path.horizon)
        np.testing.assert_allclose(new.thetas, old.thetas, atol=1e-9)
        np.testing.assert_allclose(closed.thetas, new.thetas, atol=1e-9)

    def test_no_look_ahead(self):
        chart, model = four_level_chart(), four_level_model()
        path = WienerPath.sample(3, 0, 64, 0.01)
        full = integrate_projection_filter(chart, model, 'new', path, 0.01, 0.64)
        changed = path.increments.copy()
        changed[40:] += 0.1
        partial = integrate_projection_filter(chart, model, 'new', changed, 0.01, 0.64)
        np.testing.assert_array_equal(full.thetas[:41], partial.thetas[:41])

    def test_overflow_reports_failure_time(self):
        increments = np.full(100, 2.0)
        with self.assertRaises(OverflowGuard) as ctx:
            integrate_projection_filter(four_level_chart(), four_level_model(), 'new', increments, 0.01, 1.0)
        self.assertIn('time', ctx.exception.detail)

    def test_collapsed_chart_state_reports_failure_time(self):
        path = WienerPath.sample(2, 0, 10, 0.1)
        failures = [None] * 6 + [NonPositiveTrace(trace=-1.0)]
        with mock.patch.object(CoefficientEngine, 'check_point', side_effect=failures):
            with self.assertRaises(NonPositiveTrace) as ctx:
                integrate_projection_filter(four_level_chart(), four_level_model(), 'new', path, 0.1, 1.0)
        self.assertAlmostEqual(ctx.exception.detail['time'], 0.6)
        self.assertEqual(ctx.exception.detail['trace'], -1.0)

    def test_rejects_mismatched_grid(self):
        path = WienerPath.sample(1, 0, 10, 0.01)
        with self.assertRaises(LabError):
            integrate_projection_filter(four_level_chart(), four_level_model(), 'new', path, 0.02, 0.1)

    def test_csv_output(self):
        path = WienerPath.sample(4, 0, 4, 0.25)
        trajectory = integrate_projection_filter(four_level_chart(), four_level_model(), 'ito', path, 0.25, 1.0)
        with tempfile.TemporaryDirectory() as tmp:
            target = Path(tmp) / 'ito.csv'
            write_trajectory_csv(trajectory, target)
            lines = target.read_text().splitlines()
        self.assertEqual(lines[0], '# variant: ito')
        self.assertEqual(lines[1], 'time,dY,theta_1,theta_2,theta_3,theta_4')
        self.assertEqual(len(lines), 2 + 5)


class TrajectoryTests(SimpleTestCase):

    def test_rejects_non_uniform_grid(self):
        with self.assertRaises(LabError):
            FilterTrajectory('new', [0.0, 0.1, 0.3], [0, 0, 0], thetas=np.zeros((3, 2)))

    def test_density_header(self):
        trajectory = FilterTrajectory('sme', [0.0], [0.0], states=np.eye(2)[None] / 2)
        self.assertEqual(trajectory.header()[:4], ['time', 'dY', 're_00', 'im_00'])
        self.assertEqual(trajectory.state_dimension, 3)


def _contraction(distance, steps):
    values = [distance(s) for s in steps]
    return [values[i] / values[i + 1] for i in range(len(values) - 1)]


@tag('slow')
class IntegratorConsistencyTests(SimpleTestCase):
    """Differences between integrators of the same equation shrink as the step is halved."""

    paths = 64
    fine_steps = 2 ** 11
    horizon = 1.0

    def _noise(self, p):
        return WienerPath.sample(21, p, self.fine_steps, self.horizon / self.fine_steps)

    def test_normalized_linear_filter_tracks_sme(self):
        model, rho0 = four_level_model(), four_level_rho0()

        def distance(factor):
            total = 0.0
            for p in range(self.paths):
                noise = self._noise(p).coarsen(factor)
                truth = integrate_sme(model, rho0, noise)
                linear = integrate_linear_filter(model, rho0, truth.dy[1:], noise.dt)
                traces = np.trace(linear.states, axis1=1, axis2=2).real
                normalized = linear.states / traces[:, None, None]
                total += float(np.max(hs_distance(truth.states, normalized)))
            return total / self.paths

        for ratio in _contraction(distance, [8, 4, 2, 1]):
            self.assertTrue(1.3 <= ratio <= 4.0, ratio)

    def test_stratonovich_and_ito_projection_filters_converge(self):
        chart, model = four_level_chart(), four_level_model()

        def distance(factor):
            total = 0.0
            for p in range(self.paths):
                noise = self._noise(p).coarsen(factor)
                new = integrate_projection_filter(chart, model, 'new', noise, noise.dt, self.horizon)
                ito = integrate_projection_filter(chart, model, 'ito', noise, noise.dt, self.horizon)
                total += float(np.max(np.abs(new.thetas - ito.thetas)))
            return total / self.paths

        for ratio in _contraction(distance, [8, 4, 2, 1]):
            self.assertTrue(1.3 <= ratio <= 4.0, ratio)
