from django.core.management.base import BaseCommand

from core.csvio import write_csv
from core.exceptions import LabError
from harness.cli import add_scenario_arguments, run_failed, scenario_from_options
from harness.convergence import run_expansion
from harness.reports import output_dir
from stratonovich_taylor.convergence import TARGETS


class Command(BaseCommand):
    help = 'Expand the filter state to order k over one sampled path and list every term'

    def add_arguments(self, parser):
        add_scenario_arguments(parser)
        parser.add_argument('--order', type=int, default=2)
        parser.add_argument('--delta', type=float, default=2.0 ** -5)
        parser.add_argument('--stream', type=int, default=0, help='Path index of the noise stream.')
        parser.add_argument('--target', choices=TARGETS, default='true')
        parser.add_argument('--variant', type=str, default='new')

    def handle(self, *args, **options):
        scenario = scenario_from_options(options)
        try:
            run = run_expansion(scenario, options['order'], options['delta'], options['seed'], options['stream'],
                                target=options['target'], variant=options['variant'])
        except LabError as exc:
            raise run_failed(exc)

        for alpha, integral, norm in run.rows():
            self.stdout.write(f'  {alpha:<12} I = {integral: .6e}   |coefficient|_F = {norm:.6e}')
        self.stdout.write(f'  error against the fine-grid reference: {run.error:.6e}')

        if options['out']:
            path = output_dir(options['out']) / f'expansion_{run.target}_k{options["order"]}.csv'
            write_csv(path, ['alpha', 'integral', 'coefficient_norm'], run.rows(),
                      comments=[f'delta: {options["delta"]!r}', f'error: {run.error!r}'])
            self.stdout.write(f'Wrote {path}')
        self.stdout.write(self.style.SUCCESS(f'Order {options["order"]} expansion of {scenario.name}'))
