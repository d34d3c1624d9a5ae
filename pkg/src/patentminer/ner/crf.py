"""Linear-chain CRF: partition function, negative log-likelihood, Viterbi.

Transition matrices are ``(L + 2) x (L + 2)``: rows/columns ``0..L-1`` are
real labels, ``L`` is START and ``L + 1`` is STOP.  Only ``START -> y``,
``y -> y'`` and ``y -> STOP`` entries are ever read.  A path scores

    trans[START, y_0] + sum_t emit[t, y_t] + sum_t trans[y_{t-1}, y_t] + trans[y_{T-1}, STOP]
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
import torch


def _as_tensor(x) -> torch.Tensor:
    if isinstance(x, torch.Tensor):
        return x
    return torch.as_tensor(np.asarray(x, dtype=np.float64))


def _check(emissions: torch.Tensor, transitions: torch.Tensor) -> None:
    if emissions.dim() != 2 or emissions.shape[0] < 1:
        raise ValueError("emissions must be a non-empty T x L matrix")
    L = emissions.shape[1]
    if tuple(transitions.shape) != (L + 2, L + 2):
        raise ValueError(f"transitions must be {(L + 2, L + 2)}, got {tuple(transitions.shape)}")
    if not torch.isfinite(emissions).all():
        raise ValueError("emissions contain non-finite values")


def path_score(emissions, transitions, path: Sequence[int]) -> torch.Tensor:
    e, tr = _as_tensor(emissions), _as_tensor(transitions)
    _check(e, tr)
    L = e.shape[1]
    idx = torch.as_tensor(list(path), dtype=torch.long)
    if idx.numel() != e.shape[0]:
        raise ValueError("path length differs from number of emission rows")
    score = tr[L, idx[0]] + e[torch.arange(e.shape[0]), idx].sum() + tr[idx[-1], L + 1]
    if idx.numel() > 1:
        score = score + tr[idx[:-1], idx[1:]].sum()
    return score


def crf_forward_logZ(emissions, transitions) -> torch.Tensor:
    """log of the sum over all label paths of exp(path score), via the forward recursion."""
    e, tr = _as_tensor(emissions), _as_tensor(transitions)
    _check(e, tr)
    return batch_log_partition(e[None], tr, torch.ones(1, e.shape[0], dtype=torch.bool))[0]


def crf_neg_log_likelihood(emissions, transitions, gold: Sequence[int]) -> torch.Tensor:
    """``logZ - score(gold)``; differentiable in both emissions and transitions."""
    e, tr = _as_tensor(emissions), _as_tensor(transitions)
    _check(e, tr)
    if len(gold) != e.shape[0]:
        raise ValueError("gold length differs from number of emission rows")
    return crf_forward_logZ(e, tr) - path_score(e, tr, gold)


def batch_log_partition(emissions: torch.Tensor, transitions: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    """logZ for a padded batch: emissions B x T x L, mask B x T (prefix-true)."""
    L = emissions.shape[2]
    inner = transitions[:L, :L]
    alpha = transitions[L, :L][None, :] + emissions[:, 0]
    for t in range(1, emissions.shape[1]):
        nxt = torch.logsumexp(alpha[:, :, None] + inner[None] + emissions[:, t, None, :], dim=1)
        alpha = torch.where(mask[:, t, None], nxt, alpha)
    return torch.logsumexp(alpha + transitions[:L, L + 1][None, :], dim=1)


def batch_gold_score(emissions: torch.Tensor, transitions: torch.Tensor, tags: torch.Tensor,
                     mask: torch.Tensor) -> torch.Tensor:
    B, T, L = emissions.shape
    maskf = mask.to(emissions.dtype)
    emit = emissions.gather(2, tags[:, :, None])[:, :, 0]
    score = transitions[L, tags[:, 0]] + (emit * maskf).sum(1)
    if T > 1:
        pair = transitions[tags[:, :-1], tags[:, 1:]]
        score = score + (pair * maskf[:, 1:]).sum(1)
    lengths = mask.sum(1)
    last = tags.gather(1, (lengths - 1)[:, None])[:, 0]
    return score + transitions[last, L + 1]


def batch_nll(emissions: torch.Tensor, transitions: torch.Tensor, tags: torch.Tensor,
              mask: torch.Tensor) -> torch.Tensor:
    """Per-sequence negative log-likelihood, shape B."""
    return batch_log_partition(emissions, transitions, mask) - batch_gold_score(emissions, transitions, tags, mask)


def crf_viterbi(emissions, transitions) -> tuple[list[int], float]:
    """Highest-scoring path and its score; ties go to the lower label index."""
    e, tr = _as_tensor(emissions), _as_tensor(transitions)
    _check(e, tr)
    e = e.detach().cpu().numpy().astype(np.float64)
    tr = tr.detach().cpu().numpy().astype(np.float64)
    T, L = e.shape
    inner = tr[:L, :L]
    score = tr[L, :L] + e[0]
    back = np.zeros((T, L), dtype=np.int64)
    for t in range(1, T):
        cand = score[:, None] + inner
        # np.argmax picks the first maximum, i.e. the lowest previous label
        back[t] = np.argmax(cand, axis=0)
        score = cand[back[t], np.arange(L)] + e[t]
    final = score + tr[:L, L + 1]
    best = int(np.argmax(final))
    path = [best]
    for t in range(T - 1, 0, -1):
        best = int(back[t, best])
        path.append(best)
    return path[::-1], float(np.max(final))


def iob_transition_mask(labels: Sequence[str]) -> np.ndarray:
    """Additive mask that forbids IOB2-illegal moves with ``-inf``.

    Illegal: START -> I-X, and any move into I-X from a label that is not
    B-X or I-X.
    """
    L = len(labels)
    mask = np.zeros((L + 2, L + 2))
    for j, lab in enumerate(labels):
        if not lab.startswith("I-"):
            continue
        cls = lab[2:]
        mask[L, j] = -np.inf
        for i, prev in enumerate(labels):
            if prev[2:] != cls or prev == "O":
                mask[i, j] = -np.inf
    return mask
