"""Append-only TSV metrics with deterministic number formatting."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path


@dataclass
class MetricsRow:
    restart: int
    lr: float
    step: int
    episode: int
    train_loss: float
    val_error: float
    test_error: float
    epsilon: float
    mean_memory: float
    asked: int
    correct: int
    teacher_fraction: float
    mean_return: float
    updates: int
    syncs: int
    phase: str


COLUMNS = [f.name for f in dataclasses.fields(MetricsRow)]


def _fmt(value) -> str:
    if isinstance(value, bool) or isinstance(value, int):
        return str(int(value))
    if isinstance(value, float):
        return "nan" if math.isnan(value) else f"{value:.6f}"
    return str(value)


class MetricsLog:
    """Writes a header (with the run config) once, then one line per row."""

    def __init__(self, path: str | Path | None, config_json: str = ""):
        self.path = Path(path) if path else None
        self.rows: list[MetricsRow] = []
        if self.path is not None and not self.path.exists():
            header = f"# config {config_json}\n" if config_json else ""
            self.path.write_text(header + "\t".join(COLUMNS) + "\n", "utf-8")

    def append(self, row: MetricsRow) -> None:
        self.rows.append(row)
        if self.path is not None:
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write("\t".join(_fmt(getattr(row, c)) for c in COLUMNS) + "\n")


def read_metrics(path: str | Path) -> list[dict[str, str]]:
    lines = [l for l in Path(path).read_text("utf-8").splitlines() if not l.startswith("#")]
    header = lines[0].split("\t")
    return [dict(zip(header, l.split("\t"))) for l in lines[1:]]
