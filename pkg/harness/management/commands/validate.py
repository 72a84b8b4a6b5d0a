from django.core.management.base import BaseCommand, CommandError

from harness.cli import VALIDATION_FAILURE
from harness.validation import FAULTS, run_validate


class Command(BaseCommand):
    help = 'Run the invariant suite and print a pass/fail table'

    def add_arguments(self, parser):
        parser.add_argument('--inject', choices=FAULTS, action='append', default=[],
                            help='Inject a known fault to confirm the suite catches it.')

    def handle(self, *args, **options):
        report = run_validate(options['inject'])

        width = max(len(name) for name, _, _ in report.rows())
        for name, status, summary in report.rows():
            style = self.style.SUCCESS if status == 'PASS' else self.style.ERROR
            self.stdout.write(f'{name:<{width}}  {style(status)}  {summary}')

        if not report.passed:
            raise CommandError(f'Failed checks: {", ".join(report.failed_names)}', returncode=VALIDATION_FAILURE)
        self.stdout.write(self.style.SUCCESS(f'All {len(report.results)} checks passed'))
