from django.core.management.base import BaseCommand

from core.exceptions import LabError
from harness.cli import add_scenario_arguments, float_list, run_failed, scenario_from_options
from harness.convergence import DEFAULT_HORIZONS, run_convergence
from harness.reports import emit_convergence
from stratonovich_taylor.convergence import TARGETS


class Command(BaseCommand):
    help = 'Measure the strong convergence order of truncated stochastic Taylor expansions'

    def add_arguments(self, parser):
        add_scenario_arguments(parser)
        parser.add_argument('--order', type=int, action='append', dest='orders',
                            help='Expansion order; repeat for several.')
        parser.add_argument('--deltas', type=float_list, default=list(DEFAULT_HORIZONS),
                            help='Comma separated horizons Δ.')
        parser.add_argument('--target', choices=TARGETS, default='true')
        parser.add_argument('--variant', type=str, default='new',
                            help='Coefficients frozen for the projected target.')

    def handle(self, *args, **options):
        scenario = scenario_from_options(options)
        orders = options['orders'] or [1, 2]

        try:
            results = run_convergence(
                scenario, orders, options['deltas'], workers=options['workers'],
                target=options['target'], variant=options['variant'],
            )
            emit_convergence(results, options['out'], digest=scenario.digest,
                             name=f'convergence_{options["target"]}')
        except LabError as exc:
            raise run_failed(exc)

        for result in results:
            self.stdout.write(
                f'  order {result.order}: slope {result.slope:.3f} (expected {result.order + 1}), '
                f'moment bound {result.moment_bound:.3g}'
            )
        self.stdout.write(self.style.SUCCESS(f'Convergence study done over {results[0].paths} paths'))
