import csv
import json
import logging
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from utils.scalars import format_scalar

logger = logging.getLogger(__name__)


def _cell(value: Any) -> str:
    if isinstance(value, str):
        return value
    return format_scalar(value)


class ArtifactWriter:
    """Writes CSV and JSON artifacts with a fixed layout into one directory."""

    NEWLINE = "\n"

    def __init__(self, out_dir: Path):
        self.out_dir = Path(out_dir)
        self.written = []

    def _path(self, name: str) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        return self.out_dir / name

    def write_csv(self, name: str, columns: Sequence[str], rows: Iterable[Mapping[str, Any]]) -> Path:
        """Columns in the given order; floats with 17 significant digits, rationals as p/q."""
        path = self._path(name)
        with open(path, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator=self.NEWLINE)
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_cell(row[column]) for column in columns])
        self._record(path)
        return path

    def write_json(self, name: str, payload: Any) -> Path:
        path = self._path(name)
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(payload, handle, indent=2, sort_keys=True, default=_cell)
            handle.write(self.NEWLINE)
        self._record(path)
        return path

    def _record(self, path: Path) -> None:
        self.written.append(path)
        logger.info("wrote %s", path)
