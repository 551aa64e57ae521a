"""
Output files: solution CSV, flat JSON reports and the operator table.

Every write goes to a temporary file in the target directory and is moved
into place with os.replace.
"""

import csv
import io
import json
import logging
import math
import os
import tempfile
from pathlib import Path

import numpy as np
from django.conf import settings

from core.engine import ContractError

logger = logging.getLogger(__name__)

COORDINATE_TOL = 1e-12


def atomic_write(path, data):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = 'wb' if isinstance(data, bytes) else 'w'
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f'.{path.name}.', suffix='.tmp')
    try:
        with os.fdopen(fd, mode, **({} if mode == 'wb' else {'encoding': 'utf-8', 'newline': ''})) as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    logger.debug('Wrote %s', path)
    return path


def _number(value):
    return format(float(value), '.17g')


def coordinate_names(n):
    names = []
    for j in range(1, n + 1):
        names += [f'x{j}', f'y{j}']
    return names


# ============
# Solution CSV
# ============

def solution_csv(domain, values, residual, echo=()):
    buffer = io.StringIO()
    buffer.write(f'# cxlambda {settings.VERSION}\n')
    for line in echo:
        buffer.write(f'# {line}\n')
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(coordinate_names(domain.n) + ['u', 'residual'])
    for point, value, res in zip(domain.coords, values, residual):
        writer.writerow([_number(x) for x in point] + [_number(value), _number(res)])
    return buffer.getvalue()


def write_solution_csv(path, domain, values, residual, echo=()):
    return atomic_write(path, solution_csv(domain, values, residual, echo))


def read_field_csv(path, domain):
    """Node values of a solution CSV, checked row by row against the domain's nodes."""
    try:
        text = Path(path).read_text(encoding='utf-8')
    except OSError as exc:
        raise ContractError(f'cannot read field file {path}: {exc.strerror}')
    rows = csv.reader(line for line in text.splitlines() if line and not line.startswith('#'))
    header = next(rows, None)
    names = coordinate_names(domain.n)
    if header is None or header[:len(names) + 1] != names + ['u']:
        raise ContractError(f'{path}: header must start with {",".join(names + ["u"])}')

    values = []
    for index, row in enumerate(rows):
        if index >= domain.size:
            raise ContractError(f'{path}: grid mismatch at row {index + 1}: more rows than the {domain.size} nodes')
        try:
            point = np.array([float(x) for x in row[:len(names)]])
            value = float(row[len(names)])
        except (ValueError, IndexError):
            raise ContractError(f'{path}: malformed row {index + 1}')
        scale = COORDINATE_TOL * max(1.0, float(np.abs(domain.coords[index]).max()))
        if np.abs(point - domain.coords[index]).max() > scale:
            raise ContractError(f'{path}: grid mismatch at row {index + 1}')
        values.append(value)
    if len(values) != domain.size:
        raise ContractError(f'{path}: grid mismatch at row {len(values) + 1}: expected {domain.size} rows')
    return np.array(values)


# ===========
# JSON report
# ===========

def _plain(value):
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def report_json(data):
    flat = {'version': settings.VERSION}
    flat.update({key: _plain(value) for key, value in data.items()})
    return json.dumps(flat, indent=2) + '\n'


def write_report_json(path, data):
    return atomic_write(path, report_json(data))


# ==============
# Operator table
# ==============

def table_csv(header, rows):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow(['' if v is None else (_number(v) if isinstance(v, float) else v) for v in row])
    return buffer.getvalue()


def write_table_csv(path, header, rows):
    return atomic_write(path, table_csv(header, rows))


def write_table_xlsx(path, header, rows, title='Operators'):
    from openpyxl import Workbook
    from openpyxl.styles import Border, Font, PatternFill, Side

    wb = Workbook()
    ws = wb.active
    ws.title = title

    header_font = Font(bold=True, color='FFFFFF')
    header_fill = PatternFill(start_color='4E4E4E', end_color='4E4E4E', fill_type='solid')
    thin_border = Border(
        left=Side(style='thin'),
        right=Side(style='thin'),
        top=Side(style='thin'),
        bottom=Side(style='thin')
    )

    for col, name in enumerate(header, 1):
        cell = ws.cell(row=1, column=col, value=name)
        cell.font = header_font
        cell.fill = header_fill
        cell.border = thin_border

    for row_index, row in enumerate(rows, 2):
        for col, value in enumerate(row, 1):
            ws.cell(row=row_index, column=col, value=value)

    buffer = io.BytesIO()
    wb.save(buffer)
    return atomic_write(path, buffer.getvalue())
