from django.core.management.base import BaseCommand

from core.exceptions import LabError
from harness.cli import add_scenario_arguments, comma_list, run_failed, scenario_from_options
from harness.comparison import run_comparison
from harness.reports import emit_report


class Command(BaseCommand):
    help = 'Run the filter comparison experiment and write CSV, SVG, XLSX and manifest files'

    def add_arguments(self, parser):
        add_scenario_arguments(parser)
        parser.add_argument('--filters', type=comma_list, default=None,
                            help='Comma separated variants: new, old, ito, corollary.')

    def handle(self, *args, **options):
        scenario = scenario_from_options(options, filters=options['filters'])
        self.stdout.write(f'Scenario {scenario} digest {scenario.digest[:12]}')

        try:
            report = run_comparison(scenario, workers=options['workers'])
            manifest = emit_report(report, options['out'], scenario=scenario)
        except LabError as exc:
            raise run_failed(exc)

        for v in report.variants:
            self.stdout.write(f'  {v:<10} time-averaged distance {report.time_averaged_mean(v):.6g}')
        win_rate = report.win_rate()
        if win_rate is not None:
            self.stdout.write(f'  win rate new <= old: {win_rate:.3f}')
        if report.failures:
            self.stdout.write(self.style.WARNING(f'{len(report.failures)} paths excluded'))

        self.stdout.write(self.style.SUCCESS(
            f'{report.accepted} paths, outputs: {", ".join(o["file"] for o in manifest.outputs)}'
        ))
