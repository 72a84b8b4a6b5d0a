"""
Deterministic CSV output: floats always carry 17 significant digits and the
line terminator is fixed, so equal inputs give byte-identical files.
"""

import csv
import io
import numbers


def format_value(value):
    if isinstance(value, bool) or value is None:
        return '' if value is None else str(value)
    if isinstance(value, numbers.Integral):
        return str(int(value))
    if isinstance(value, numbers.Real):
        return format(float(value), '.17g')
    return str(value)


def render_csv(header, rows, comments=()):
    buffer = io.StringIO()
    for comment in comments:
        buffer.write(f'# {comment}\n')
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buffer.getvalue()


def write_csv(path, header, rows, comments=()):
    text = render_csv(header, rows, comments)
    with open(path, 'w', encoding='utf-8', newline='') as handle:
        handle.write(text)
    return path
