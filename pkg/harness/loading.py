"""
Scenario files.

A relative path that does not exist from the working directory is looked up
in the bundled scenario directory, so ``four_level.json`` works anywhere.
Overrides (seed, paths, filters from the command line) are merged into the
document before validation and therefore count towards the digest.
"""

import json
import logging
from pathlib import Path

from core.conf import lab_settings
from core.exceptions import InvalidScenario, ScenarioParseError
from .serializers import ScenarioSerializer

logger = logging.getLogger(__name__)


def resolve_scenario_path(path):
    path = Path(path)
    if path.is_absolute() or path.exists():
        return path
    bundled = Path(lab_settings.SCENARIO_DIR) / path
    if bundled.exists():
        return bundled
    if not path.suffix:
        with_suffix = Path(lab_settings.SCENARIO_DIR) / f'{path}.json'
        if with_suffix.exists():
            return with_suffix
    return path


def plain_errors(errors):
    """Serializer errors as nested dicts and lists of plain strings."""
    if isinstance(errors, dict):
        return {str(k): plain_errors(v) for k, v in errors.items()}
    if isinstance(errors, (list, tuple)):
        return [plain_errors(e) for e in errors]
    return str(errors)


def read_scenario_document(path):
    path = resolve_scenario_path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as exc:
        raise ScenarioParseError('Scenario file could not be read', path=str(path), reason=exc.strerror)
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(path=str(path), line=exc.lineno, column=exc.colno, reason=exc.msg)
    if not isinstance(document, dict):
        raise ScenarioParseError('Scenario must be a JSON object', path=str(path))
    document.setdefault('name', path.stem)
    return path, document


def build_scenario(document, path=None, **overrides):
    document = dict(document)
    document.update({k: v for k, v in overrides.items() if v is not None})
    serializer = ScenarioSerializer(data=document)
    if not serializer.is_valid():
        raise InvalidScenario(path=str(path) if path else None, errors=plain_errors(serializer.errors))
    return serializer.save()


def load_scenario(path, **overrides):
    """Parse, validate and fill in defaults; ScenarioParseError or InvalidScenario otherwise."""
    path, document = read_scenario_document(path)
    scenario = build_scenario(document, path, **overrides)
    logger.info('Loaded scenario %s from %s (digest %s)', scenario, path, scenario.digest[:12])
    return scenario
