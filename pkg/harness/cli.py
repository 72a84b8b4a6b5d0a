"""
Argument handling shared by the management commands.

Exit codes: 2 when a run or the validation suite fails, 3 when the scenario
cannot be read or does not validate.
"""

import json

from django.core.management.base import CommandError

from core.exceptions import InvalidScenario, LabError, ScenarioParseError
from .loading import load_scenario

VALIDATION_FAILURE = 2
SCENARIO_ERROR = 3


def u64(value):
    number = int(value)
    if not 0 <= number < 2 ** 64:
        raise ValueError(value)
    return number


def comma_list(value):
    return [item.strip() for item in value.split(',') if item.strip()]


def float_list(value):
    return [float(item) for item in comma_list(value)]


def add_scenario_arguments(parser, default_config='four_level.json'):
    parser.add_argument('--config', type=str, default=default_config,
                        help='Scenario JSON; bare names are looked up in harness/scenarios.')
    parser.add_argument('--seed', type=u64, default=None)
    parser.add_argument('--paths', type=int, default=None)
    parser.add_argument('--out', type=str, default=None, help='Output directory.')
    parser.add_argument('--workers', type=int, default=None)


def scenario_from_options(options, **overrides):
    try:
        return load_scenario(options['config'], seed=options.get('seed'), paths=options.get('paths'), **overrides)
    except (ScenarioParseError, InvalidScenario) as exc:
        raise CommandError(render_error(exc), returncode=SCENARIO_ERROR)


def render_error(exc):
    if isinstance(exc, LabError):
        return json.dumps(exc.as_dict(), indent=2, default=str)
    return str(exc)


def run_failed(exc):
    return CommandError(render_error(exc), returncode=VALIDATION_FAILURE)
