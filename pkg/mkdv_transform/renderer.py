"""
Renderers and readers for the plain-text tables and manifests.

Every file starts with a provenance line

    # mkdv-transform <version> config=<digest>

followed, for tables, by a '#'-prefixed line naming the columns and one record
per line. Floats are written with %.17g so that a table read back reproduces the
written values exactly. Manifests are flat key=value files.
"""

import logging
import os

import numpy as np

from mkdv_transform.exceptions import InputFileError

logger = logging.getLogger(__name__)

TOOL_NAME = "mkdv-transform"
FLOAT_FORMAT = "%.17g"


def provenance_line(version, digest):
    return f"# {TOOL_NAME} {version} config={digest}"


def complex_columns(name):
    return [f"{name}_re", f"{name}_im"]


def split_complex(values):
    """
    Interleave real and imaginary parts: (n, m) complex -> (n, 2m) real.
    """
    values = np.asarray(values, dtype=complex)
    if values.ndim == 1:
        values = values[:, None]
    out = np.empty((values.shape[0], 2 * values.shape[1]))
    out[:, 0::2] = values.real
    out[:, 1::2] = values.imag
    return out


class TableRenderer:
    """
    Renders row records as a plain-text table.

    data may be a dict with 'columns' and 'rows', or a bare 2-D array of rows
    together with columns passed through renderer_context. The context carries
    the version and config digest for the provenance line.
    """

    format = "table"
    media_type = "text/plain"

    def render(self, data, renderer_context=None):
        context = renderer_context or {}
        if isinstance(data, dict) and "rows" in data:
            columns = data.get("columns", context.get("columns"))
            rows = data["rows"]
        else:
            columns = context.get("columns")
            rows = data
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        if rows.size == 0:
            rows = np.empty((0, len(columns or [])))
        if columns is None:
            columns = [f"c{j}" for j in range(rows.shape[1])]
        if rows.shape[1] != len(columns):
            raise ValueError(f"{len(columns)} column names for {rows.shape[1]} columns")

        lines = [
            provenance_line(context.get("version", "0"), context.get("digest", "none")),
            "# " + " ".join(columns),
        ]
        for row in rows:
            lines.append(" ".join(FLOAT_FORMAT % value for value in row))

        logger.debug("Renderer table: columns=%s, rows=%s", len(columns), rows.shape[0])
        return "\n".join(lines) + "\n"

    def write(self, path, data, renderer_context=None):
        text = self.render(data, renderer_context)
        directory = os.path.dirname(os.path.abspath(path))
        os.makedirs(directory, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        return path


class ManifestRenderer:
    """
    Renders a flat mapping as key=value lines, keys in sorted order.
    """

    format = "manifest"
    media_type = "text/plain"

    def render(self, data, renderer_context=None):
        context = renderer_context or {}
        lines = [provenance_line(context.get("version", "0"), context.get("digest", "none"))]
        for key in sorted(data):
            value = data[key]
            if isinstance(value, float):
                value = FLOAT_FORMAT % value
            text = str(value)
            if "\n" in text or "=" in str(key):
                raise ValueError(f"manifest entry {key!r} cannot be written on one line")
            lines.append(f"{key}={text}")
        return "\n".join(lines) + "\n"

    def write(self, path, data, renderer_context=None):
        text = self.render(data, renderer_context)
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        return path


def _read_lines(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read().splitlines()
    except OSError as exc:
        raise InputFileError(path, 0, 0, f"cannot read file ({exc.strerror})") from exc


def read_table(path):
    """
    (columns, rows) of a table file; rows is a float array of shape (n, len(columns)).

    Malformed records raise InputFileError with the 1-based line and column.
    """
    lines = _read_lines(path)
    columns = None
    records = []
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            body = stripped[1:].split()
            if body and body[0] != TOOL_NAME and columns is None:
                columns = body
            continue
        if columns is None:
            raise InputFileError(path, lineno, 1, "data before the column header")
        fields = stripped.split()
        if len(fields) != len(columns):
            raise InputFileError(
                path, lineno, 1, f"expected {len(columns)} fields, found {len(fields)}"
            )
        record = []
        col = 1
        for text in fields:
            col = line.index(text, col - 1) + 1
            try:
                value = float(text)
            except ValueError:
                raise InputFileError(path, lineno, col, f"not a number: {text!r}") from None
            if not np.isfinite(value):
                raise InputFileError(path, lineno, col, f"non-finite value {text!r}")
            record.append(value)
            col += len(text)
        records.append(record)
    if columns is None:
        raise InputFileError(path, 1, 1, "missing column header")
    rows = np.array(records, dtype=float).reshape(-1, len(columns))
    return columns, rows


def read_manifest(path):
    """
    Mapping of a key=value manifest; values are returned as strings.
    """
    out = {}
    for lineno, line in enumerate(_read_lines(path), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise InputFileError(path, lineno, 1, "expected key=value")
        key, value = stripped.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def column(columns, rows, name, path="<table>"):
    try:
        return rows[:, columns.index(name)]
    except ValueError:
        raise InputFileError(path, 1, 1, f"missing column {name!r}") from None
