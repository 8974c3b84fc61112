"""File formats: point clouds, CSV tables, result JSON and the run log."""

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

from .core import PointCloud


def atomic_write_text(path, text):
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return repr(value)
    return str(value)


def format_csv(header, rows):
    """Render dict rows as CSV; ``None``/NaN become empty fields, floats use ``repr``."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(row.get(key)) for key in header])
    return buf.getvalue()


def _parse_cell(text):
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        return float(text)


def parse_csv(text):
    """Inverse of :func:`format_csv`: a list of dicts with numbers or ``None``."""
    reader = csv.DictReader(io.StringIO(text))
    return [{k: _parse_cell(v) for k, v in row.items()} for row in reader]


def read_csv(path):
    return parse_csv(Path(path).read_text())


def dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def read_point_cloud(path):
    """Load a point cloud JSON file; errors name the offending line or field."""
    text = Path(path).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    try:
        return PointCloud.from_dict(obj)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


def append_run_log(path, record):
    """Append one JSON object as a line to the run log."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "a") as fh:
        fh.write(json.dumps(record, sort_keys=True) + "\n")


def read_run_log(path):
    return [json.loads(line) for line in Path(path).read_text().splitlines() if line.strip()]
