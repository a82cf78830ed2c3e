"""CSV output with locale-free formatting and atomic writes."""

from __future__ import annotations

import os
import tempfile

from .errors import ArtifactWriteFailure, SchemaMismatch


def fmt(value) -> str:
    """Floats at 17 significant digits, '.' decimal separator; ints verbatim."""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_csv(path, header, rows) -> None:
    """Write header + rows atomically (temp file then rename)."""
    text = ",".join(header) + "\n"
    for row in rows:
        text += ",".join(fmt(v) for v in row) + "\n"
    directory = os.path.dirname(os.path.abspath(path)) or "."
    try:
        fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
        with os.fdopen(fd, "w", encoding="ascii", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise ArtifactWriteFailure(f"cannot write {path}: {exc}") from exc


def read_csv(path):
    """Header list plus rows of strings; raises on an empty file."""
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines:
        raise SchemaMismatch(f"{path} is empty")
    header = lines[0].split(",")
    return header, [ln.split(",") for ln in lines[1:]]
