"""Read-only access to uniform-resample-report v1 files."""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

SCHEMA_HEADER = "uniform-resample-report v1"


class SchemaError(ValueError):
    """The file is not a readable v1 report."""


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _parse_cell(text: str):
    # cells are written as repr(float), plain ints, json lists, or bare strings
    try:
        return json.loads(text)
    except ValueError:
        pass
    try:
        return float(text)  # catches nan/inf spellings json rejects
    except ValueError:
        return text


@dataclass(frozen=True)
class ReportFile:
    """One parsed report CSV, hashed at load time so views can prove
    they left the input untouched."""

    path: Path
    version: str
    columns: tuple
    rows: tuple
    sha256: str

    @classmethod
    def load(cls, path) -> "ReportFile":
        path = Path(path)
        digest = file_sha256(path)
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise SchemaError(f"{path}: empty file, expected header {SCHEMA_HEADER!r}")
            if header != [SCHEMA_HEADER]:
                raise SchemaError(
                    f"{path}: bad header {','.join(header)!r}, expected {SCHEMA_HEADER!r}")
            try:
                columns = tuple(next(reader))
            except StopIteration:
                raise SchemaError(f"{path}: missing column row")
            rows = []
            for lineno, raw in enumerate(reader, start=3):
                if len(raw) != len(columns):
                    raise SchemaError(
                        f"{path}:{lineno}: {len(raw)} cells, expected {len(columns)}")
                rows.append({c: _parse_cell(v) for c, v in zip(columns, raw)})
        return cls(path=path, version=SCHEMA_HEADER, columns=columns,
                   rows=tuple(rows), sha256=digest)

    def require_columns(self, names) -> None:
        missing = [c for c in names if c not in self.columns]
        if missing:
            raise SchemaError(f"{self.path}: missing columns: {', '.join(missing)}")

    def unchanged(self) -> bool:
        return file_sha256(self.path) == self.sha256
