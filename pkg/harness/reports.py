"""
Report files of a run.

    comparison.csv       time, mean_<v>, std_<v> per variant
    squared_error.csv    time, msq_<v> per variant (normalized-state e_t)
    comparison.svg       mean ± std distance bands
    comparison.xlsx      the comparison table and a run summary
    manifest.json        RunManifest with sha256 of every CSV

CSV files are byte-identical for equal (scenario, seed). The SVG uses a fixed
hash salt and no date; the workbook is not covered by the guarantee.
"""

import hashlib
import logging
from pathlib import Path

from openpyxl import Workbook
from openpyxl.styles import Alignment, Font, PatternFill

from core.conf import lab_settings
from core.csvio import format_value, write_csv
from stratonovich_taylor.models import ConvergenceStudyResult
from .models import RunManifest

logger = logging.getLogger(__name__)

COLORS = {'new': '#1f77b4', 'old': '#d62728', 'ito': '#2ca02c', 'corollary': '#9467bd'}
LABELS = {'new': 'improved (Stratonovich)', 'old': 'baseline', 'ito': 'improved (Itô)', 'corollary': 'self-adjoint closed form'}


def sha256_file(path):
    digest = hashlib.sha256()
    with open(path, 'rb') as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b''):
            digest.update(chunk)
    return digest.hexdigest()


def output_dir(out_dir=None):
    path = Path(out_dir or lab_settings.OUTPUT_DIR)
    path.mkdir(parents=True, exist_ok=True)
    return path


def plot_distances(report, path):
    import matplotlib

    matplotlib.use('Agg')
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({'svg.hashsalt': 'qfilter-lab', 'svg.fonttype': 'path'}):
        fig, ax = plt.subplots(figsize=(8.0, 4.8))
        for v in report.variants:
            mean, std = report.mean(v), report.std(v)
            color = COLORS.get(v)
            ax.plot(report.times, mean, linewidth=1.8, color=color, label=LABELS.get(v, v))
            ax.fill_between(report.times, mean - std, mean + std, color=color, alpha=0.18, linewidth=0)

        ax.set_title(f'Approximation error, {report.accepted} paths')
        ax.set_xlabel('t')
        ax.set_ylabel('Hilbert–Schmidt distance to the filter')
        ax.grid(True, alpha=0.25)
        if report.variants:
            ax.legend()
        fig.tight_layout()
        fig.savefig(path, format='svg', metadata={'Date': None})
        plt.close(fig)
    return path


def write_workbook(report, path):
    wb = Workbook()
    ws = wb.active
    ws.title = 'Distances'
    ws.append(report.header())
    for row in report.rows():
        ws.append([float(v) for v in row])

    for cell in ws[1]:
        cell.font      = Font(bold=True, color="FFFFFF")
        cell.fill      = PatternFill("solid", fgColor="2563EB")
        cell.alignment = Alignment(horizontal='center')
    for i in range(1, len(report.header()) + 1):
        ws.column_dimensions[ws.cell(1, i).column_letter].width = 22

    ws2 = wb.create_sheet('Summary')
    ws2.append(['Field', 'Value'])
    ws2.append(['scenario', report.scenario_name])
    ws2.append(['config digest', report.digest])
    ws2.append(['seed', str(report.seed)])
    ws2.append(['accepted paths', report.accepted])
    ws2.append(['excluded paths', len(report.failures)])
    for v in report.variants:
        ws2.append([f'time-averaged distance ({v})', report.time_averaged_mean(v)])
    win_rate = report.win_rate()
    if win_rate is not None:
        ws2.append(['win rate new ≤ old', win_rate])

    for cell in ws2[1]:
        cell.font = Font(bold=True)
    ws2.column_dimensions['A'].width = 34
    ws2.column_dimensions['B'].width = 68

    wb.save(path)
    return path


def emit_report(report, out_dir=None, *, scenario=None):
    """Write every report file and the manifest; returns the manifest."""
    out = output_dir(out_dir)
    written = [
        write_csv(out / 'comparison.csv', report.header(), report.rows()),
        write_csv(out / 'squared_error.csv', report.squared_error_header(), report.squared_error_rows()),
    ]
    checksums = {p.name: sha256_file(p) for p in written}
    written.append(plot_distances(report, out / 'comparison.svg'))
    written.append(write_workbook(report, out / 'comparison.xlsx'))

    manifest = RunManifest(
        command='compare',
        digest=report.digest,
        seed=report.seed,
        streams=list(report.path_indices),
        outputs=[{'file': p.name, 'sha256': checksums.get(p.name)} for p in written],
        failures=list(report.failures),
        summary=dict(report.summary(), scenario_file=scenario.source if scenario else None),
    )
    manifest.write(out / 'manifest.json')
    for p in written:
        logger.info('Wrote %s', p)
    return manifest


def emit_convergence(results, out_dir=None, *, digest='', name='convergence'):
    out = output_dir(out_dir)
    rows = [row for result in results for row in result.rows()]
    path = write_csv(out / f'{name}.csv', ConvergenceStudyResult.CSV_COLUMNS, rows,
                     comments=[f'{r.target} order {r.order}: slope {format_value(r.slope)}' for r in results])

    seeds = sorted({r.seed for r in results})
    manifest = RunManifest(
        command='convergence',
        digest=digest,
        seed=seeds[0] if len(seeds) == 1 else seeds,
        streams=list(range(max((r.paths for r in results), default=0))),
        outputs=[{'file': path.name, 'sha256': sha256_file(path)}],
        summary={f'{r.target}_order_{r.order}_slope': r.slope for r in results},
    )
    manifest.write(out / f'{name}_manifest.json')
    logger.info('Wrote %s', path)
    return manifest
