"""Architecture ablation over the encoder variants, reported as a dev/test F1 table."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from ..iob import ENTITY_CLASSES
from .data import AnnotatedSentence
from .model import TaggerConfig
from .tagger import dev_f1, train_tagger

ABLATION_GRID: tuple[tuple[str, dict], ...] = (
    ("BiLSTM", {}),
    ("BiLSTM + Conv1D", {"use_conv": True}),
    ("BiLSTM + Attention", {"use_attention": True}),
    ("BiLSTM + Attention + Conv1D", {"use_attention": True, "use_conv": True}),
    ("BiLSTM + Conv1D + CE + Dropout (0.3)", {"use_conv": True, "use_char": True, "dropout": 0.3}),
    ("BiLSTM + Conv1D + CE + Dropout (0.5)", {"use_conv": True, "use_char": True, "dropout": 0.5}),
    ("BiLSTM + Conv1D + CE + Dropout (0.7)", {"use_conv": True, "use_char": True, "dropout": 0.7}),
)


@dataclass(frozen=True)
class AblationRow:
    model: str
    dev: float
    test: float
    epochs: int

    @property
    def average(self) -> float:
        return (self.dev + self.test) / 2


def run_ablation(train: Sequence[AnnotatedSentence], dev: Sequence[AnnotatedSentence],
                 test: Sequence[AnnotatedSentence], base: TaggerConfig = TaggerConfig(),
                 classes: Sequence[str] = ENTITY_CLASSES,
                 grid: Sequence[tuple[str, dict]] = ABLATION_GRID) -> list[AblationRow]:
    """Train every grid variant from ``base`` and score the best-dev checkpoint on dev and test."""
    rows = []
    for name, overrides in grid:
        config = dataclasses.replace(base, **overrides)
        result = train_tagger(train, dev, config, classes)
        rows.append(AblationRow(name, result.best_dev_f1, dev_f1(result.model, test), len(result.history)))
    return rows


def format_table(rows: Sequence[AblationRow]) -> str:
    lines = ["Model\tDev\tTest\tAverage"]
    for r in rows:
        lines.append(f"{r.model}\t{r.dev:.1%}\t{r.test:.1%}\t{r.average:.1%}")
    return "\n".join(lines) + "\n"


def write_table(path: str | Path, rows: Sequence[AblationRow]) -> None:
    Path(path).write_text(format_table(rows), encoding="utf-8")
