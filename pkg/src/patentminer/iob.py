"""IOB2 label space and span decoding."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

ENTITY_CLASSES = (
    "AMOUNT", "API", "BIOLOGICAL_MATERIAL", "COMPOSITION", "CONDITION", "DOSAGE_FORM", "EQUIPMENT",
    "EXCIPIENT", "EXCIPIENT_TYPE", "INTERMEDIATES", "OPERATION", "PACKAGING", "REACTANT", "SOLVENT",
    "TARGET", "YIELD",
)
OUTSIDE = "O"


def label_space(classes: Sequence[str] = ENTITY_CLASSES) -> list[str]:
    """``O`` followed by ``B-X``, ``I-X`` for every class: 2 * len(classes) + 1 labels."""
    labels = [OUTSIDE]
    for c in classes:
        labels += [f"B-{c}", f"I-{c}"]
    return labels


def entity_class(label: str) -> str:
    """Entity class of a label with the B-/I- prefix removed (``O`` stays ``O``)."""
    return OUTSIDE if label == OUTSIDE else label[2:]


def split_label(label: str) -> tuple[str, str]:
    if label == OUTSIDE:
        return OUTSIDE, ""
    if len(label) < 3 or label[1] != "-" or label[0] not in "BI":
        raise ValueError(f"malformed IOB label {label!r}")
    return label[0], label[2:]


def repair_iob2(labels: Sequence[str]) -> tuple[list[str], int]:
    """Turn every I-X that does not continue an X run into B-X; returns labels and repair count."""
    out: list[str] = []
    fixes = 0
    prev = OUTSIDE
    for lab in labels:
        if lab.startswith("I-") and entity_class(prev) != lab[2:]:
            lab = "B-" + lab[2:]
            fixes += 1
        out.append(lab)
        prev = lab
    return out, fixes


@dataclass(frozen=True)
class EntitySpan:
    cls: str
    start: int
    end: int
    text: str

    def key(self) -> tuple[str, int, int]:
        return (self.cls, self.start, self.end)


def decode_entities(tokens: Sequence[str], labels: Sequence[str]) -> list[EntitySpan]:
    """Maximal B-X (I-X)* runs become spans; a stray I-X opens a new span."""
    if len(tokens) != len(labels):
        raise ValueError("tokens and labels differ in length")
    spans: list[EntitySpan] = []
    cur: str | None = None
    start = 0

    def close(end: int) -> None:
        if cur is not None:
            spans.append(EntitySpan(cur, start, end, " ".join(tokens[start:end])))

    for i, lab in enumerate(labels):
        tag, cls = split_label(lab)
        if tag == OUTSIDE:
            close(i)
            cur = None
        elif tag == "B" or cls != cur:
            close(i)
            cur, start = cls, i
    close(len(labels))
    return spans
