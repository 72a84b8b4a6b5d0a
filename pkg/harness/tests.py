import io
import json
import tempfile
from pathlib import Path
from unittest import mock

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, tag
from openpyxl import load_workbook

from core.csvio import render_csv
from core.exceptions import InvalidScenario, LabError, OverflowGuard, RunFailed, ScenarioParseError
from quantum_filters.coefficients import CoefficientEngine
from quantum_filters.projection import integrate_projection_filter
from stratonovich_taylor.models import ConvergenceStudyResult
from .comparison import normalized_chart_states, run_comparison, simulate_path
from .convergence import run_convergence, run_expansion
from .loading import build_scenario, load_scenario, read_scenario_document
from .models import ComparisonReport, exact_mean
from .presets import four_level_chart, four_level_model, four_level_rho0
from .reports import emit_convergence, emit_report
from .validation import run_validate


def small_scenario(name='four_level.json', **changes):
    """A bundled scenario shrunk to a horizon of 0.25 on 2^8 noise steps."""
    path, document = read_scenario_document(name)
    settings = {'T': 0.25, 'log2_steps': 8, 'paths': 4, 'seed': 7}
    settings.update(changes)
    return build_scenario(document, path, **settings)


class LoadingTests(SimpleTestCase):

    def test_bundled_comparison_scenario(self):
        scenario = load_scenario('four_level.json')
        self.assertEqual(scenario.horizon, 5.0)
        self.assertEqual(scenario.fine_steps, 4096)
        self.assertAlmostEqual(scenario.fine_step, 5.0 / 2 ** 12)
        self.assertAlmostEqual(scenario.integrator_step, 2 * scenario.fine_step)
        self.assertEqual(scenario.filter_steps, 2048)
        np.testing.assert_allclose(scenario.model.coupling, four_level_model().coupling)
        np.testing.assert_allclose(scenario.rho0, four_level_rho0())
        np.testing.assert_allclose(scenario.chart.generators, four_level_chart().generators)
        self.assertEqual(scenario.filters, ('new', 'old'))

    def test_self_adjoint_scenario(self):
        scenario = load_scenario('four_level_selfadjoint')
        self.assertTrue(scenario.model.coupling_is_self_adjoint)
        self.assertEqual(scenario.model.coupling[3, 0], 0.0)

    def test_spectral_scenario_has_two_generators(self):
        self.assertEqual(load_scenario('four_level_spectral.json').chart.dim_m, 2)

    def test_defaults_are_applied(self):
        _, document = read_scenario_document('four_level.json')
        for key in ('T', 'log2_steps', 'integrator_factor', 'paths', 'seed', 'filters'):
            document.pop(key)
        scenario = build_scenario(document)
        self.assertEqual(scenario.horizon, 5.0)
        self.assertEqual(scenario.log2_steps, 12)
        self.assertEqual(scenario.integrator_factor, 2)
        self.assertEqual(scenario.paths, 200)
        self.assertEqual(scenario.seed, 0)
        self.assertEqual(scenario.filters, ('new', 'old'))

    def test_missing_chart(self):
        _, document = read_scenario_document('four_level.json')
        del document['chart']
        with self.assertRaises(InvalidScenario) as ctx:
            build_scenario(document)
        self.assertIn('chart', ctx.exception.detail['errors'])

    def test_non_hermitian_hamiltonian(self):
        _, document = read_scenario_document('four_level.json')
        document['hamiltonian'][0][1] = [1.0, 0.0]
        with self.assertRaises(InvalidScenario) as ctx:
            build_scenario(document)
        self.assertIn('hamiltonian', ctx.exception.detail['errors'])

    def test_integrator_step_must_be_whole_noise_steps(self):
        _, document = read_scenario_document('four_level.json')
        with self.assertRaises(InvalidScenario) as ctx:
            build_scenario(document, integrator_factor=3)
        self.assertIn('integrator_factor', ctx.exception.detail['errors'])

    def test_unknown_filter(self):
        _, document = read_scenario_document('four_level.json')
        with self.assertRaises(InvalidScenario):
            build_scenario(document, filters=['newest'])

    def test_seed_range(self):
        _, document = read_scenario_document('four_level.json')
        self.assertEqual(build_scenario(document, seed=2 ** 64 - 1).seed, 2 ** 64 - 1)
        with self.assertRaises(InvalidScenario):
            build_scenario(document, seed=2 ** 64)

    def test_digest_follows_content(self):
        first = load_scenario('four_level.json')
        self.assertEqual(first.digest, load_scenario('four_level.json').digest)
        self.assertNotEqual(first.digest, load_scenario('four_level.json', seed=1).digest)

    def test_missing_file(self):
        with self.assertRaises(ScenarioParseError):
            load_scenario('/nonexistent/scenario.json')

    def test_malformed_json(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'broken.json'
            path.write_text('{"dim": 4,')
            with self.assertRaises(ScenarioParseError) as ctx:
                load_scenario(path)
        self.assertEqual(ctx.exception.code, 'PARSE_ERROR')


class ComparisonTests(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.scenario = small_scenario(filters=['new', 'old', 'ito'])
        cls.report = run_comparison(cls.scenario, workers=1)

    def test_shapes(self):
        self.assertEqual(self.report.accepted, 4)
        self.assertEqual(self.report.times.shape, (129,))
        self.assertAlmostEqual(self.report.times[-1], 0.25)
        for v in ('new', 'old', 'ito'):
            self.assertEqual(self.report.distances[v].shape, (4, 129))
            self.assertTrue(np.all(self.report.distances[v] >= 0.0))

    def test_distance_starts_at_zero(self):
        for v in self.report.variants:
            np.testing.assert_allclose(self.report.distances[v][:, 0], 0.0, atol=1e-12)

    def test_squared_error_is_squared_distance(self):
        np.testing.assert_allclose(self.report.squared_errors['new'], self.report.distances['new'] ** 2)

    def test_deterministic_for_fixed_seed(self):
        again = run_comparison(self.scenario, workers=1)
        for v in self.report.variants:
            np.testing.assert_array_equal(again.distances[v], self.report.distances[v])
        self.assertEqual(again.checksums, self.report.checksums)

    def test_worker_count_does_not_change_output(self):
        parallel = run_comparison(self.scenario, workers=2)
        self.assertEqual(
            render_csv(parallel.header(), parallel.rows()),
            render_csv(self.report.header(), self.report.rows()),
        )

    def test_paths_have_distinct_observation_records(self):
        self.assertEqual(len(set(self.report.checksums)), 4)
        self.assertTrue(all(len(c) == 64 for c in self.report.checksums))

    def test_aggregation_ignores_path_order(self):
        distances = self.report.distances['new']
        shuffled = distances[np.random.default_rng(0).permutation(distances.shape[0])]
        np.testing.assert_array_equal(exact_mean(shuffled), exact_mean(distances))

    def test_csv_header(self):
        self.assertEqual(
            self.report.header(),
            ['time', 'mean_new', 'std_new', 'mean_old', 'std_old', 'mean_ito', 'std_ito'],
        )

    def test_normalized_chart_state_at_origin(self):
        states = normalized_chart_states(four_level_chart(), np.zeros((1, 4)))
        np.testing.assert_allclose(states[0], four_level_rho0(), atol=1e-15)

    def test_self_adjoint_new_matches_baseline(self):
        scenario = small_scenario('four_level_selfadjoint.json', filters=['new', 'old'], paths=2)
        report = run_comparison(scenario, workers=1)
        np.testing.assert_allclose(report.distances['new'], report.distances['old'], atol=1e-10)

    def test_every_variant_reads_the_path_record(self):
        engine = CoefficientEngine(self.scenario.chart, self.scenario.model)
        with mock.patch('harness.comparison.integrate_projection_filter',
                        wraps=integrate_projection_filter) as integrate:
            outcome = simulate_path(self.scenario, 2, engine)
        self.assertEqual(integrate.call_count, 3)
        records = [c.args[3] for c in integrate.call_args_list]
        self.assertEqual({r.checksum() for r in records}, {outcome.checksum})
        self.assertEqual(outcome.checksum, self.report.checksums[2])

    def test_failed_path_is_recorded(self):
        engine = CoefficientEngine(self.scenario.chart, self.scenario.model)
        with mock.patch('harness.comparison.integrate_projection_filter',
                        side_effect=OverflowGuard(time=0.1)):
            outcome = simulate_path(self.scenario, 0, engine)
        self.assertTrue(outcome.failed)
        self.assertEqual(outcome.failure['code'], 'OVERFLOW_GUARD')

    def test_too_many_failures_fail_the_run(self):
        with mock.patch('harness.comparison.integrate_projection_filter',
                        side_effect=OverflowGuard(time=0.1)):
            with self.assertRaises(RunFailed) as ctx:
                run_comparison(self.scenario, workers=1)
        self.assertEqual(ctx.exception.detail['failed'], 4)

    def test_win_rate_needs_both_variants(self):
        scenario = small_scenario(filters=['new'], paths=1)
        times = scenario.integrator_step * np.arange(scenario.filter_steps + 1)
        self.assertIsNone(ComparisonReport.from_outcomes(scenario, times, []).win_rate())


class ReportTests(SimpleTestCase):

    def test_empty_variant_list_gives_header_only_csv(self):
        report = run_comparison(small_scenario(filters=[], paths=1), workers=1)
        with tempfile.TemporaryDirectory() as tmp:
            emit_report(report, tmp)
            self.assertEqual((Path(tmp) / 'comparison.csv').read_text(), 'time\n')

    def test_rerun_is_byte_identical(self):
        scenario = small_scenario(paths=2)
        with tempfile.TemporaryDirectory() as first, tempfile.TemporaryDirectory() as second:
            one = emit_report(run_comparison(scenario, workers=1), first, scenario=scenario)
            two = emit_report(run_comparison(scenario, workers=1), second, scenario=scenario)
            for name in ('comparison.csv', 'squared_error.csv', 'comparison.svg'):
                self.assertEqual((Path(first) / name).read_bytes(), (Path(second) / name).read_bytes(), name)
        self.assertEqual(one.outputs, two.outputs)

    def test_files_and_manifest(self):
        scenario = small_scenario(paths=2)
        report = run_comparison(scenario, workers=1)
        with tempfile.TemporaryDirectory() as tmp:
            emit_report(report, tmp, scenario=scenario)
            out = Path(tmp)
            for name in ('comparison.csv', 'squared_error.csv', 'comparison.svg', 'comparison.xlsx', 'manifest.json'):
                self.assertTrue((out / name).exists(), name)

            lines = (out / 'comparison.csv').read_text().splitlines()
            self.assertEqual(lines[0], 'time,mean_new,std_new,mean_old,std_old')
            self.assertEqual(len(lines), 1 + scenario.filter_steps + 1)

            manifest = json.loads((out / 'manifest.json').read_text())
            self.assertEqual(manifest['config_digest'], scenario.digest)
            self.assertEqual(manifest['seed'], 7)
            self.assertEqual(manifest['streams'], [0, 1])
            self.assertEqual([o['file'] for o in manifest['outputs']][:2], ['comparison.csv', 'squared_error.csv'])

            workbook = load_workbook(out / 'comparison.xlsx')
            self.assertEqual(workbook.sheetnames, ['Distances', 'Summary'])
            self.assertTrue(workbook['Distances']['A1'].font.bold)
            self.assertEqual(workbook['Distances'].max_row, scenario.filter_steps + 2)

    def test_convergence_csv(self):
        result = ConvergenceStudyResult(
            order=1, target='true', horizons=np.array([0.25, 0.5]), mse=np.array([1e-4, 8e-4]),
            stderr=np.zeros(2), moment_bound=2.0, slope=3.0, paths=10, seed=3, fine_step=1 / 64,
        )
        with tempfile.TemporaryDirectory() as tmp:
            emit_convergence([result], tmp)
            lines = (Path(tmp) / 'convergence.csv').read_text().splitlines()
        self.assertEqual(lines[0], '# true order 1: slope 3')
        self.assertEqual(lines[1], 'order,delta,mse,bound,paths,seed')
        self.assertEqual(lines[2], '1,0.25,0.0001,0.5,10,3')


class ConvergenceRunTests(SimpleTestCase):

    def test_orders_are_run_in_ascending_order(self):
        scenario = small_scenario()
        results = run_convergence(scenario, [1, 0], horizons=[2 ** -5, 2 ** -6], paths=20, workers=1)
        self.assertEqual([r.order for r in results], [0, 1])
        self.assertTrue(all(r.seed == 7 for r in results))

    def test_rejects_empty_order_list(self):
        with self.assertRaises(LabError):
            run_convergence(small_scenario(), [])

    def test_expansion_error_shrinks_with_order(self):
        scenario = small_scenario()
        errors = [run_expansion(scenario, k, 2 ** -6).error for k in (0, 1, 2)]
        self.assertLess(errors[2], errors[0])

    def test_projected_expansion_lists_every_term(self):
        run = run_expansion(small_scenario(), 2, 2 ** -6, target='projected')
        self.assertEqual([row[0] for row in run.rows()], ['()', '(0)', '(1)', '(1,1)'])


class ValidationTests(SimpleTestCase):

    def test_fresh_build_passes(self):
        report = run_validate()
        self.assertTrue(report.passed, report.failed_names)
        self.assertEqual(len(report.results), 11)

    def test_corrupted_remainder_rule(self):
        self.assertEqual(run_validate(['appendix-recursion']).failed_names, ['appendix-recursion'])

    def test_duplicate_generators(self):
        report = run_validate(['fisher-spd'])
        self.assertEqual(report.failed_names, ['fisher-spd'])
        failed = next(r for r in report.results if r.name == 'fisher-spd')
        self.assertEqual(failed.error['code'], 'SINGULAR_METRIC')

    def test_unknown_fault(self):
        with self.assertRaises(LabError):
            run_validate(['everything'])


class CommandTests(SimpleTestCase):

    def test_validate_command(self):
        out = io.StringIO()
        call_command('validate', stdout=out)
        self.assertIn('appendix-recursion', out.getvalue())
        self.assertIn('All 11 checks passed', out.getvalue())

    def test_validate_command_reports_injected_fault(self):
        with self.assertRaises(CommandError) as ctx:
            call_command('validate', inject=['fisher-spd'], stdout=io.StringIO())
        self.assertEqual(ctx.exception.returncode, 2)
        self.assertIn('fisher-spd', str(ctx.exception))

    def test_missing_scenario_exit_code(self):
        with self.assertRaises(CommandError) as ctx:
            call_command('compare', config='/nonexistent/scenario.json', stdout=io.StringIO())
        self.assertEqual(ctx.exception.returncode, 3)

    def test_compare_command_writes_reports(self):
        _, document = read_scenario_document('four_level.json')
        document.update({'T': 0.125, 'log2_steps': 6})
        with tempfile.TemporaryDirectory() as tmp:
            config = Path(tmp) / 'tiny.json'
            config.write_text(json.dumps(document))
            out = io.StringIO()
            call_command('compare', config=str(config), paths=2, out=tmp, filters=['new'], stdout=out)
            self.assertTrue((Path(tmp) / 'comparison.csv').exists())
            header = (Path(tmp) / 'comparison.csv').read_text().splitlines()[0]
        self.assertEqual(header, 'time,mean_new,std_new')
        self.assertIn('2 paths', out.getvalue())

    def test_expand_command(self):
        out = io.StringIO()
        call_command('expand', order=1, delta=2 ** -6, stdout=out)
        self.assertIn('(1)', out.getvalue())


@tag('slow')
class FilterComparisonAcceptanceTests(SimpleTestCase):
    """Full horizon T = 5 with 200 paths."""

    def test_improved_filter_beats_baseline(self):
        scenario = load_scenario('four_level.json', paths=200)
        report = run_comparison(scenario, workers=4)
        self.assertLess(report.time_averaged_mean('new'), report.time_averaged_mean('old'))
        self.assertGreaterEqual(report.win_rate(), 0.6)

    def test_self_adjoint_full_horizon(self):
        scenario = load_scenario('four_level_selfadjoint.json', paths=4)
        report = run_comparison(scenario, workers=4)
        np.testing.assert_allclose(report.distances['new'], report.distances['old'], atol=1e-9)
        np.testing.assert_allclose(report.distances['corollary'], report.distances['new'], atol=1e-9)
