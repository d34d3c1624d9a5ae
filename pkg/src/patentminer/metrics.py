"""Evaluation statistics: token and entity P/R/F1, confusion matrix, agreement."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Hashable, Sequence

import numpy as np

from .iob import ENTITY_CLASSES, OUTSIDE, EntitySpan, entity_class, label_space


@dataclass(frozen=True)
class PrfReport:
    per_class: dict[str, tuple[float, float, float, int]]
    micro: tuple[float, float, float]
    mode: str
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def f1(self) -> float:
        return self.micro[2]


@dataclass(frozen=True)
class ConfusionMatrix:
    labels: list[str]
    matrix: np.ndarray  # rows = gold, columns = predicted


@dataclass(frozen=True)
class AgreementReport:
    kappa: float
    pct_agreement_worst: float
    pct_agreement_best: float


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


def _flatten(seqs) -> list[str]:
    if seqs and not isinstance(seqs[0], str):
        return [x for s in seqs for x in s]
    return list(seqs)


def token_prf(pred: Sequence, gold: Sequence, classes: Sequence[str] | None = None,
              merge_prefixes: bool = False) -> tuple[PrfReport, ConfusionMatrix]:
    """Token-level scores with B-/I- merged into entity classes.

    Accepts flat label lists or lists of per-sentence label lists.  ``O`` is
    left out of the micro pool but kept in the confusion matrix, whose axis is
    the full IOB label space (``O`` plus B-/I- per class).  With
    ``merge_prefixes=True`` it uses ``O`` plus one row per class instead.
    """
    p_flat, g_flat = _flatten(pred), _flatten(gold)
    if len(p_flat) != len(g_flat) or (pred and not isinstance(pred[0], str)
                                      and [len(s) for s in pred] != [len(s) for s in gold]):
        raise ValueError("prediction and gold sequences differ in length")
    pc = [entity_class(x) for x in p_flat]
    gc = [entity_class(x) for x in g_flat]
    if classes is None:
        seen = {c for c in pc + gc if c != OUTSIDE}
        classes = list(ENTITY_CLASSES) + sorted(seen - set(ENTITY_CLASSES))
    tp, fp, fn = Counter(), Counter(), Counter()
    for p, g in zip(pc, gc):
        if p == g:
            if p != OUTSIDE:
                tp[p] += 1
            continue
        if p != OUTSIDE:
            fp[p] += 1
        if g != OUTSIDE:
            fn[g] += 1
    per_class = {c: (*_prf(tp[c], fp[c], fn[c]), tp[c] + fn[c]) for c in classes}
    TP, FP, FN = sum(tp.values()), sum(fp.values()), sum(fn.values())
    report = PrfReport(per_class, _prf(TP, FP, FN), "TOKEN", TP, FP, FN)

    if merge_prefixes:
        axis, pa, ga = [OUTSIDE] + list(classes), pc, gc
    else:
        axis, pa, ga = label_space(classes), p_flat, g_flat
    pos = {lab: i for i, lab in enumerate(axis)}
    extra = sorted(set(pa + ga) - set(pos))
    for lab in extra:
        pos[lab] = len(axis)
        axis.append(lab)
    mat = np.zeros((len(axis), len(axis)), dtype=np.int64)
    for p, g in zip(pa, ga):
        mat[pos[g], pos[p]] += 1
    return report, ConfusionMatrix(axis, mat)


def entity_prf(pred_spans: Sequence[Sequence[EntitySpan]], gold_spans: Sequence[Sequence[EntitySpan]],
               classes: Sequence[str] | None = None) -> PrfReport:
    """Strict span scores: a true positive needs the same class, start and end."""
    if len(pred_spans) != len(gold_spans):
        raise ValueError("prediction and gold differ in number of sentences")
    pk = {(i, *s.key()) for i, spans in enumerate(pred_spans) for s in spans}
    gk = {(i, *s.key()) for i, spans in enumerate(gold_spans) for s in spans}
    if classes is None:
        seen = {k[1] for k in pk | gk}
        classes = list(ENTITY_CLASSES) + sorted(seen - set(ENTITY_CLASSES))
    per_class = {}
    for c in classes:
        pc = {k for k in pk if k[1] == c}
        gc = {k for k in gk if k[1] == c}
        t = len(pc & gc)
        per_class[c] = (*_prf(t, len(pc) - t, len(gc) - t), len(gc))
    t = len(pk & gk)
    return PrfReport(per_class, _prf(t, len(pk) - t, len(gk) - t), "ENTITY", t, len(pk) - t, len(gk) - t)


def cohens_kappa(a: Sequence[Hashable], b: Sequence[Hashable]) -> float:
    """Chance-corrected agreement ``(p_o - p_e) / (1 - p_e)``, computed in exact rationals."""
    if len(a) != len(b):
        raise ValueError("rating lists differ in length")
    n = len(a)
    if n == 0:
        raise ValueError("need at least one rating")
    p_o = Fraction(sum(x == y for x, y in zip(a, b)), n)
    ca, cb = Counter(a), Counter(b)
    p_e = sum(Fraction(ca[c] * cb[c], n * n) for c in ca.keys() | cb.keys())
    if p_e == 1:
        if p_o == 1:
            return 1.0
        raise ValueError("kappa undefined: expected agreement is 1 but ratings disagree")
    return float((p_o - p_e) / (1 - p_e))


def percentage_agreement(scores: Sequence[float]) -> tuple[float, float]:
    """Worst case rounds uncertain (0.5) scores down to 0, best case up to 1."""
    if len(scores) == 0:
        raise ValueError("no scores")
    bad = [s for s in scores if s not in (0, 0.5, 1)]
    if bad:
        raise ValueError(f"scores must be 0, 0.5 or 1; got {bad[:3]}")
    worst = sum(1 for s in scores if s == 1) / len(scores)
    best = sum(1 for s in scores if s >= 0.5) / len(scores)
    return worst, best


def agreement_report(model_relevant: Sequence[int], manual_relevant: Sequence[int],
                     label_scores: Sequence[float]) -> AgreementReport:
    worst, best = percentage_agreement(label_scores)
    return AgreementReport(cohens_kappa(model_relevant, manual_relevant), worst, best)


# ---------------------------------------------------------------------------
# Report files


def write_prf(path: str | Path, report: PrfReport) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# mode={report.mode}\n")
        fh.write("class\tprecision\trecall\tf1\tsupport\n")
        for c, (p, r, f, n) in report.per_class.items():
            fh.write(f"{c}\t{p:.6f}\t{r:.6f}\t{f:.6f}\t{n}\n")
        p, r, f = report.micro
        fh.write(f"micro avg\t{p:.6f}\t{r:.6f}\t{f:.6f}\t{report.tp + report.fn}\n")


def write_confusion(path: str | Path, cm: ConfusionMatrix) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("gold\\pred\t" + "\t".join(cm.labels) + "\n")
        for lab, row in zip(cm.labels, cm.matrix):
            fh.write(lab + "\t" + "\t".join(str(int(x)) for x in row) + "\n")
