import numpy as np
from django.test import SimpleTestCase, override_settings, tag

from core.exceptions import LabError, OrderTooLarge, TimeOffGrid, UnsupportedOrder
from harness.presets import four_level_chart, four_level_model, four_level_rho0
from manifold_geometry.geometry import ChartPoint, chart_state
from manifold_geometry.tests import rotated_chart
from multi_index.models import MultiIndex, concat
from multi_index.sets import lambda_set
from operator_algebra.models import SystemModel
from operator_algebra.operators import diffusion, drift
from operator_algebra.tests import random_density, random_hermitian, random_model
from quantum_filters.coefficients import new_coefficients_abstract
from quantum_filters.dynamics import integrate_linear_filter
from .convergence import convergence_study, fine_grid, fit_slope
from .differentiators import d_operator, frozen_l_operator, l_operator
from .expansion import taylor_expand_projected, taylor_expand_true
from .integrals import cumulative_iterated, iterated_integral
from .models import ConvergenceStudyResult, OperatorProcess, WienerPath

EMPTY = MultiIndex.of()
DRIFT = MultiIndex.of(0)
NOISE = MultiIndex.of(1)
DOUBLE_NOISE = MultiIndex.of(1, 1)
HORIZONS = [2.0 ** -p for p in range(5, 10)]


class WienerPathTests(SimpleTestCase):

    def test_same_key_reproduces_the_path(self):
        a = WienerPath.sample(7, 3, 100, 0.01)
        b = WienerPath.sample(7, 3, 100, 0.01)
        np.testing.assert_array_equal(a.increments, b.increments)
        self.assertEqual(a.checksum(), b.checksum())

    def test_streams_are_distinct(self):
        a = WienerPath.sample(7, 3, 100, 0.01)
        b = WienerPath.sample(7, 4, 100, 0.01)
        self.assertNotEqual(a.checksum(), b.checksum())

    def test_cumulative_and_times(self):
        path = WienerPath(0.5, [1.0, -2.0, 0.5], t0=1.0)
        np.testing.assert_allclose(path.cumulative, [0.0, 1.0, -1.0, -0.5])
        np.testing.assert_allclose(path.times, [1.0, 1.5, 2.0, 2.5])
        self.assertEqual(path.horizon, 2.5)

    def test_index_of(self):
        path = WienerPath(0.25, np.zeros(8))
        self.assertEqual(path.index_of(0.75), 3)
        with self.assertRaises(TimeOffGrid):
            path.index_of(0.3)
        with self.assertRaises(TimeOffGrid):
            path.index_of(2.25)
        with self.assertRaises(TimeOffGrid):
            path.window(1.0, 0.5)

    def test_coarsen(self):
        path = WienerPath(0.1, [1.0, 2.0, 3.0, 4.0], seed=1, stream=2)
        coarse = path.coarsen(2)
        np.testing.assert_allclose(coarse.increments, [3.0, 7.0])
        self.assertAlmostEqual(coarse.dt, 0.2)
        self.assertEqual(coarse.stream, 2)
        with self.assertRaises(LabError):
            path.coarsen(3)

    def test_rejects_bad_keys(self):
        with self.assertRaises(LabError):
            WienerPath.sample(-1, 0, 4, 0.1)

    def test_increments_are_read_only(self):
        path = WienerPath.sample(1, 0, 4, 0.1)
        with self.assertRaises(ValueError):
            path.increments[0] = 1.0


class IteratedIntegralTests(SimpleTestCase):

    def setUp(self):
        self.path = WienerPath.sample(3, 0, 200, 0.005)

    def test_time_integral(self):
        identity = OperatorProcess.constant(self.path.times, np.eye(2))
        value = iterated_integral(DRIFT, self.path, 0.25, 0.75, identity)
        np.testing.assert_allclose(value, 0.5 * np.eye(2), atol=1e-14)

    def test_noise_integral(self):
        dy = self.path.cumulative[150] - self.path.cumulative[50]
        identity = OperatorProcess.constant(self.path.times, np.eye(2))
        value = iterated_integral(NOISE, self.path, 0.25, 0.75, identity)
        np.testing.assert_allclose(value, dy * np.eye(2), atol=1e-14)

    def test_double_noise_integral_is_half_square(self):
        dy = self.path.cumulative[-1] - self.path.cumulative[0]
        self.assertAlmostEqual(iterated_integral(DOUBLE_NOISE, self.path, 0.0, 1.0), dy * dy / 2, places=12)

    def test_entry_order(self):
        # α_1 is integrated first (innermost), α_l last.
        path = WienerPath(1.0, [1.0, 0.0, 0.0, 0.0])
        self.assertAlmostEqual(iterated_integral(MultiIndex.of(0, 1), path, 0.0, 4.0), 0.5)
        self.assertAlmostEqual(iterated_integral(MultiIndex.of(1, 0), path, 0.0, 4.0), 3.5)

    def test_mixed_integrals_sum_to_product(self):
        mixed = (iterated_integral(MultiIndex.of(0, 1), self.path, 0.0, 1.0)
                 + iterated_integral(MultiIndex.of(1, 0), self.path, 0.0, 1.0))
        self.assertAlmostEqual(mixed, 1.0 * self.path.cumulative[-1], places=12)

    def test_empty_index_returns_integrand_at_end(self):
        values = np.arange(self.path.steps + 1, dtype=float)
        process = OperatorProcess(self.path.times, values)
        self.assertEqual(iterated_integral(EMPTY, self.path, 0.0, 0.5, process), 100.0)

    def test_batched_paths(self):
        dy = np.stack([WienerPath.sample(3, p, 64, 0.01).increments for p in range(3)], axis=1)
        values = cumulative_iterated(DOUBLE_NOISE, 0.01, dy)
        np.testing.assert_allclose(values[-1], dy.sum(axis=0) ** 2 / 2, atol=1e-13)

    def test_guards(self):
        with self.assertRaises(OrderTooLarge):
            iterated_integral(MultiIndex.of(*([1] * 7)), self.path, 0.0, 1.0)
        with self.assertRaises(TimeOffGrid):
            iterated_integral(NOISE, self.path, 0.0, 0.0025)

    def test_moment_orthogonality(self):
        dt = 0.01
        dy = WienerPath.sample(99, 0, 100_000, dt).increments
        levy = (dy ** 2 - dt) / 2
        for x, y in ((dy, levy), (np.full_like(dy, dt), dy), (np.full_like(dy, dt), levy)):
            product = (x - x.mean()) * (y - y.mean())
            stderr = product.std(ddof=1) / np.sqrt(product.size)
            self.assertLessEqual(abs(product.mean()), 3 * stderr + 1e-300)


class DOperatorTests(SimpleTestCase):

    def setUp(self):
        rng = np.random.default_rng(30)
        self.model = random_model(rng, 3)
        self.rho = random_density(rng, 3)

    def test_empty_index(self):
        np.testing.assert_array_equal(d_operator(EMPTY, self.model, self.rho), self.rho)

    def test_single_noise(self):
        L, Ld = self.model.coupling, self.model.coupling_dagger
        np.testing.assert_allclose(d_operator(NOISE, self.model, self.rho), L @ self.rho + self.rho @ Ld, atol=1e-14)

    def test_double_noise_composition(self):
        L, Ld, rho = self.model.coupling, self.model.coupling_dagger, self.rho
        expected = L @ L @ rho + 2 * L @ rho @ Ld + rho @ Ld @ Ld
        np.testing.assert_allclose(d_operator(DOUBLE_NOISE, self.model, rho), expected, atol=1e-13)

    def test_double_noise_closed_form_for_self_adjoint_coupling(self):
        rng = np.random.default_rng(31)
        L = random_hermitian(rng, 3)
        model = SystemModel(random_hermitian(rng, 3), L)
        rho = self.rho
        expected = L @ L @ rho + 2 * L @ rho @ L + rho @ L @ L
        np.testing.assert_allclose(d_operator(DOUBLE_NOISE, model, rho), expected, atol=1e-13)

    def test_application_order(self):
        expected = diffusion(self.model, drift(self.model, self.rho))
        np.testing.assert_allclose(d_operator(MultiIndex.of(0, 1), self.model, self.rho), expected, atol=1e-14)
        expected = drift(self.model, diffusion(self.model, self.rho))
        np.testing.assert_allclose(d_operator(MultiIndex.of(1, 0), self.model, self.rho), expected, atol=1e-14)

    def test_first_entry_is_applied_first(self):
        for alpha in lambda_set(2):
            for beta in lambda_set(2):
                inner = d_operator(alpha, self.model, self.rho)
                np.testing.assert_allclose(
                    d_operator(concat(alpha, beta), self.model, self.rho),
                    d_operator(beta, self.model, inner),
                    atol=1e-11,
                )

    def test_linearity(self):
        rng = np.random.default_rng(32)
        other = random_density(rng, 3)
        a, b = rng.normal(size=2)
        for alpha in lambda_set(3):
            if alpha.length > 3:
                continue
            left = d_operator(alpha, self.model, a * self.rho + b * other)
            right = a * d_operator(alpha, self.model, self.rho) + b * d_operator(alpha, self.model, other)
            np.testing.assert_allclose(left, right, atol=1e-10)

    def test_stacks(self):
        stack = np.stack([self.rho, 2 * self.rho])
        out = d_operator(DOUBLE_NOISE, self.model, stack)
        np.testing.assert_allclose(out[1], 2 * out[0], atol=1e-13)


class LOperatorTests(SimpleTestCase):

    def setUp(self):
        self.chart = four_level_chart()

    def test_unit_direction_is_tangent(self):
        point = ChartPoint(self.chart, [0.1, 0.2, -0.3, 0.0])
        for i in range(4):
            g = np.eye(4)[i]
            np.testing.assert_allclose(l_operator(NOISE, self.chart, point, np.zeros(4), g), point.tangent[i])

    def test_zero_drift(self):
        out = l_operator(DRIFT, self.chart, np.zeros(4), np.zeros(4), np.ones(4))
        np.testing.assert_array_equal(out, 0.0)

    def test_empty_index_is_chart_state(self):
        theta = np.array([0.3, 0.0, 0.1, -0.2])
        out = l_operator(EMPTY, self.chart, theta, np.zeros(4), np.zeros(4))
        np.testing.assert_allclose(out, chart_state(self.chart, theta).matrix, atol=1e-15)

    def test_constant_diffusion_second_order_on_diagonal_chart(self):
        g = np.array([2.0, -2.0, 2.0, -2.0])
        rho0 = four_level_rho0()
        expected = np.zeros((4, 4), dtype=complex)
        for p, a_p in enumerate(self.chart.generators):
            for q, a_q in enumerate(self.chart.generators):
                expected += g[p] * g[q] * 0.25 * (a_p @ a_q @ rho0 + a_p @ rho0 @ a_q + a_q @ rho0 @ a_p + rho0 @ a_q @ a_p)
        out = l_operator(DOUBLE_NOISE, self.chart, np.zeros(4), np.zeros(4), g, np.zeros((4, 4)))
        np.testing.assert_allclose(out, expected, atol=1e-14)

    def test_second_order_matches_finite_difference(self):
        rng = np.random.default_rng(33)
        chart = rotated_chart(rng)
        theta, g = rng.uniform(-0.5, 0.5, size=4), rng.normal(size=4)
        h = 1e-4

        def state(t):
            return chart_state(chart, theta + t * g).matrix

        difference = (state(h) - 2 * state(0.0) + state(-h)) / h ** 2
        out = l_operator(DOUBLE_NOISE, chart, theta, np.zeros(4), g)
        self.assertLessEqual(np.linalg.norm(out - difference), 1e-5 * np.linalg.norm(out))

    def test_frozen_operator_matches_chart_derivatives(self):
        rng = np.random.default_rng(34)
        chart = rotated_chart(rng)
        f, g = rng.normal(size=4), rng.normal(size=4)
        rho = chart.base_state
        for alpha in (NOISE, DRIFT, DOUBLE_NOISE):
            np.testing.assert_allclose(
                frozen_l_operator(alpha, chart, f, g, rho),
                l_operator(alpha, chart, np.zeros(4), f, g), atol=1e-13,
            )

    def test_longer_indices_are_unsupported(self):
        with self.assertRaises(UnsupportedOrder):
            l_operator(MultiIndex.of(0, 1), self.chart, np.zeros(4), np.zeros(4), np.zeros(4))


class ExpansionTests(SimpleTestCase):

    def setUp(self):
        self.model = four_level_model()
        self.rho = four_level_rho0()
        self.path = WienerPath.sample(40, 0, 64, 2.0 ** -10)

    def test_order_zero_is_initial_state(self):
        result = taylor_expand_true(self.model, self.rho, 0, self.path, 0.0, self.path.horizon)
        np.testing.assert_array_equal(result.value, self.rho)
        self.assertEqual(list(result.terms), [EMPTY])

    def test_zero_model_keeps_state(self):
        for k in range(5):
            result = taylor_expand_true(SystemModel.zero(4), self.rho, k, self.path, 0.0, self.path.horizon)
            np.testing.assert_allclose(result.value, self.rho, atol=1e-15)

    def test_order_two_hand_assembly(self):
        t2 = self.path.horizon
        dy = self.path.cumulative[-1]
        result = taylor_expand_true(self.model, self.rho, 2, self.path, 0.0, t2)
        expected = (self.rho + drift(self.model, self.rho) * t2 + diffusion(self.model, self.rho) * dy
                    + d_operator(DOUBLE_NOISE, self.model, self.rho) * dy ** 2 / 2)
        np.testing.assert_allclose(result.value, expected, atol=1e-12)
        total = sum(result.contribution(alpha) for alpha in result.terms)
        np.testing.assert_allclose(result.value, total, atol=1e-12)

    def test_order_guard(self):
        with self.assertRaises(OrderTooLarge):
            taylor_expand_true(self.model, self.rho, 5, self.path, 0.0, self.path.horizon)

    def test_projected_hand_assembly(self):
        chart = four_level_chart()
        theta = np.array([0.1, -0.1, 0.0, 0.2])
        coefficients = new_coefficients_abstract(chart, theta, self.model)
        point = ChartPoint(chart, theta)
        t2, dy = self.path.horizon, self.path.cumulative[-1]
        result = taylor_expand_projected(chart, theta, coefficients, 2, self.path, 0.0, t2)
        second = point.second_derivative_along(coefficients.g, coefficients.g) + point.tangent_vector(
            coefficients.g_jacobian @ coefficients.g)
        expected = (point.rho + point.tangent_vector(coefficients.f) * t2
                    + point.tangent_vector(coefficients.g) * dy + second * dy ** 2 / 2)
        np.testing.assert_allclose(result.value, expected, atol=1e-12)
        with self.assertRaises(UnsupportedOrder):
            taylor_expand_projected(chart, theta, coefficients, 3, self.path, 0.0, t2)

    def test_order_zero_remainder_is_the_integral_equation(self):
        path = WienerPath.sample(41, 0, 400, 1e-3)
        trajectory = integrate_linear_filter(self.model, self.rho, path.increments, path.dt)
        states = trajectory.states
        drift_process = OperatorProcess(path.times, drift(self.model, states))
        noise_process = OperatorProcess(path.times, diffusion(self.model, states))
        integral = (iterated_integral(DRIFT, path, 0.0, path.horizon, drift_process)
                    + iterated_integral(NOISE, path, 0.0, path.horizon, noise_process))
        remainder = states[-1] - taylor_expand_true(self.model, self.rho, 0, path, 0.0, path.horizon).value
        self.assertLessEqual(np.linalg.norm(remainder - integral), 0.05 * np.linalg.norm(remainder) + 10 * path.dt)


class ConvergenceStudyTests(SimpleTestCase):

    def test_fine_grid(self):
        horizons, fine, counts = fine_grid([0.25, 0.125, 0.25])
        np.testing.assert_allclose(horizons, [0.125, 0.25])
        self.assertAlmostEqual(fine, 0.125 / 16)
        self.assertEqual(list(counts), [16, 32])

    def test_fine_grid_rejections(self):
        with self.assertRaises(LabError):
            fine_grid([0.5])
        with self.assertRaises(LabError):
            fine_grid([0.5, 1.5])
        with self.assertRaises(TimeOffGrid):
            fine_grid([0.01, 0.0133])

    def test_fit_slope(self):
        h = np.array(HORIZONS)
        self.assertAlmostEqual(fit_slope(h, 3 * h ** 2), 2.0, places=10)

    def test_result_rows_and_bound(self):
        result = ConvergenceStudyResult(1, 'true', np.array([0.25, 0.5]), np.array([1e-3, 4e-3]),
                                        np.zeros(2), 2.0, 2.0, 10, 5, 0.25 / 16)
        np.testing.assert_allclose(result.bound, [0.5, 2.0])
        self.assertEqual(list(result.rows())[0], (1, 0.25, 1e-3, 0.5, 10, 5))

    def test_zero_model_has_no_error(self):
        result = convergence_study(SystemModel.zero(4), four_level_rho0(), 2, HORIZONS, 8, seed=1)
        self.assertTrue(np.all(result.mse <= 1e-28))
        self.assertEqual(result.moment_bound, 0.0)

    def test_order_zero_slope(self):
        result = convergence_study(four_level_model(), four_level_rho0(), 0, HORIZONS, 400, seed=2)
        self.assertGreaterEqual(result.slope, 0.65)
        self.assertTrue(np.all(result.mse > 0))

    def test_order_one_slope(self):
        result = convergence_study(four_level_model(), four_level_rho0(), 1, HORIZONS, 400, seed=3)
        self.assertGreaterEqual(result.slope, 1.65)
        self.assertGreater(result.moment_bound, 0.0)

    def test_projected_order_one_slope(self):
        result = convergence_study(four_level_model(), four_level_rho0(), 1, HORIZONS, 400, seed=4,
                                   target='projected', chart=four_level_chart())
        self.assertGreaterEqual(result.slope, 1.65)

    def test_same_seed_same_result(self):
        a = convergence_study(four_level_model(), four_level_rho0(), 1, HORIZONS[:2], 16, seed=5)
        b = convergence_study(four_level_model(), four_level_rho0(), 1, HORIZONS[:2], 16, seed=5, workers=2)
        np.testing.assert_allclose(a.mse, b.mse, rtol=1e-12)

    def test_guards(self):
        with self.assertRaises(OrderTooLarge):
            convergence_study(four_level_model(), four_level_rho0(), 5, HORIZONS, 4, seed=1)
        with self.assertRaises(LabError):
            convergence_study(four_level_model(), four_level_rho0(), 1, HORIZONS, 4, seed=1, target='other')
        with self.assertRaises(UnsupportedOrder):
            convergence_study(four_level_model(), four_level_rho0(), 3, HORIZONS, 4, seed=1,
                              target='projected', chart=four_level_chart())


@tag('slow')
class ConvergenceAcceptanceTests(SimpleTestCase):

    def test_first_and_second_order_slopes(self):
        for k, floor in ((1, 1.65), (2, 2.65)):
            result = convergence_study(four_level_model(), four_level_rho0(), k, HORIZONS, 2000, seed=2024)
            self.assertGreaterEqual(result.slope, floor, f'order {k}')

    def test_projected_second_order_slope(self):
        result = convergence_study(four_level_model(), four_level_rho0(), 2, HORIZONS, 2000, seed=2025,
                                   target='projected', chart=four_level_chart())
        self.assertGreaterEqual(result.slope, 2.65)

    @override_settings(QFILTER={'FINE_FACTOR': 256})
    def test_third_order_slope_with_non_commuting_drift_and_noise(self):
        rng = np.random.default_rng(2026)
        model, rho = random_model(rng, 3), random_density(rng, 3)
        self.assertGreater(np.linalg.norm(drift(model, diffusion(model, rho)) - diffusion(model, drift(model, rho))),
                           1e-3)
        horizons = [2.0 ** -p for p in range(4, 8)]
        result = convergence_study(model, rho, 3, horizons, 500, seed=2026)
        self.assertGreaterEqual(result.slope, 3.65)
