"""Training, inference and persistence for the neural CRF tagger."""

from __future__ import annotations

import base64
import copy
import json
import logging
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import torch

from .._util import hash_terms
from ..iob import ENTITY_CLASSES, EntitySpan, decode_entities, label_space
from ..metrics import token_prf
from .crf import batch_nll, crf_viterbi, iob_transition_mask
from .data import AnnotatedSentence
from .model import OOV, PAD, Index, TaggerConfig, TaggerNet, Vocabularies

log = logging.getLogger(__name__)


@dataclass
class TaggerModel:
    net: TaggerNet
    vocab: Vocabularies
    config: TaggerConfig

    @property
    def labels(self) -> list[str]:
        return self.vocab.labels

    @property
    def transitions(self) -> torch.Tensor:
        return self.net.transitions


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    dev_f1: float


@dataclass
class TrainResult:
    model: TaggerModel
    history: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    best_dev_f1: float = 0.0


@dataclass
class EmbeddingTable:
    matrix: np.ndarray
    coverage: float


# ---------------------------------------------------------------------------
# Vocabulary and batching


def build_vocabularies(sentences: Sequence[AnnotatedSentence], classes: Sequence[str] = ENTITY_CLASSES,
                       extra_words: Sequence[str] = ()) -> Vocabularies:
    words = Index()
    chars = Index()
    for s in sentences:
        for tok in s.tokens:
            words.add(tok.lower())
            for ch in tok:
                chars.add(ch)
    for w in extra_words:
        words.add(w.lower())
    return Vocabularies(words, chars, label_space(classes))


def _batch(vocab: Vocabularies, token_lists: Sequence[Sequence[str]], unk: set[int] | None = None,
           rng: np.random.Generator | None = None, unk_prob: float = 0.0):
    B = len(token_lists)
    T = max(len(t) for t in token_lists)
    C = max(len(tok) for t in token_lists for tok in t)
    words = torch.zeros(B, T, dtype=torch.long)
    chars = torch.zeros(B, T, C, dtype=torch.long)
    char_lens = torch.zeros(B, T, dtype=torch.long)
    mask = torch.zeros(B, T, dtype=torch.bool)
    for b, toks in enumerate(token_lists):
        for t, tok in enumerate(toks):
            wid = vocab.words[tok.lower()]
            if unk and wid in unk and rng.random() < unk_prob:
                wid = OOV
            words[b, t] = wid
            ids = [vocab.chars[ch] for ch in tok]
            chars[b, t, :len(ids)] = torch.as_tensor(ids, dtype=torch.long)
            char_lens[b, t] = len(ids)
            mask[b, t] = True
    return words, chars, char_lens, mask


def _tags(vocab: Vocabularies, sentences: Sequence[AnnotatedSentence]) -> torch.Tensor:
    T = max(len(s) for s in sentences)
    tags = torch.zeros(len(sentences), T, dtype=torch.long)
    for b, s in enumerate(sentences):
        tags[b, :len(s)] = torch.as_tensor([vocab.label_ids[lab] for lab in s.labels])
    return tags


# ---------------------------------------------------------------------------
# Inference


def encode(tokens: Sequence[str], model: TaggerModel, train_mode: bool = False) -> torch.Tensor:
    """Emission scores (T x num_labels) for one sentence."""
    if len(tokens) == 0:
        raise ValueError("cannot encode an empty sentence")
    model.net.train(train_mode)
    words, chars, lens, mask = _batch(model.vocab, [tokens])
    return model.net(words, chars, lens, mask)[0]


def pre_recurrent_features(tokens: Sequence[str], model: TaggerModel) -> torch.Tensor:
    """Inference-mode activations entering the BiLSTM (T x D)."""
    model.net.eval()
    words, chars, lens, mask = _batch(model.vocab, [tokens])
    with torch.no_grad():
        return model.net.features(words, chars, lens, mask)[0]


def _decode_transitions(model: TaggerModel, strict: bool | None) -> np.ndarray:
    tr = model.net.transitions.detach().cpu().numpy().astype(np.float64)
    if model.config.strict if strict is None else strict:
        tr = tr + iob_transition_mask(model.labels)
    return tr


def predict(model: TaggerModel, token_lists: Sequence[Sequence[str]], batch_size: int = 64,
            strict: bool | None = None) -> list[list[str]]:
    if any(len(t) == 0 for t in token_lists):
        raise ValueError("cannot tag an empty sentence")
    tr = _decode_transitions(model, strict)
    labels = model.labels
    out: list[list[str]] = []
    model.net.eval()
    with torch.no_grad():
        for s in range(0, len(token_lists), batch_size):
            chunk = token_lists[s:s + batch_size]
            em = model.net(*_batch(model.vocab, chunk)).to(torch.float64)
            for b, toks in enumerate(chunk):
                path, _ = crf_viterbi(em[b, :len(toks)], tr)
                out.append([labels[i] for i in path])
    return out


def tag(model: TaggerModel, tokens: Sequence[str], strict: bool | None = None) -> list[str]:
    """Viterbi labels for one sentence."""
    return predict(model, [list(tokens)], strict=strict)[0]


def tag_with_entities(model: TaggerModel, tokens: Sequence[str]) -> tuple[list[str], list[EntitySpan]]:
    labels = tag(model, tokens)
    return labels, decode_entities(tokens, labels)


def dev_f1(model: TaggerModel, sentences: Sequence[AnnotatedSentence]) -> float:
    if not sentences:
        return 0.0
    pred = predict(model, [list(s.tokens) for s in sentences])
    report, _ = token_prf(pred, [list(s.labels) for s in sentences], classes=_classes(model))
    return report.micro[2]


def _classes(model: TaggerModel) -> list[str]:
    return [lab[2:] for lab in model.labels if lab.startswith("B-")]


# ---------------------------------------------------------------------------
# Training


def new_model(config: TaggerConfig, vocab: Vocabularies, embeddings: EmbeddingTable | None = None,
              dtype: torch.dtype = torch.float32) -> TaggerModel:
    torch.manual_seed(config.seed)
    net = TaggerNet(config, len(vocab.words), len(vocab.chars), len(vocab.labels)).to(dtype)
    if embeddings is not None:
        if embeddings.matrix.shape != tuple(net.word_emb.weight.shape):
            raise ValueError("embedding table shape does not match the word vocabulary")
        with torch.no_grad():
            net.word_emb.weight.copy_(torch.as_tensor(embeddings.matrix, dtype=dtype))
    return TaggerModel(net, vocab, config)


def train_tagger(train: Sequence[AnnotatedSentence], dev: Sequence[AnnotatedSentence], config: TaggerConfig,
                 classes: Sequence[str] = ENTITY_CLASSES, embeddings_path: str | Path | None = None,
                 target_f1: float | None = None, model: TaggerModel | None = None) -> TrainResult:
    """Minimize mean CRF NLL with AdamW and early stopping on dev token micro-F1.

    The checkpoint with the best dev F1 is returned.  ``target_f1`` stops
    training as soon as dev F1 reaches it (used for quick probes).
    """
    if not train or not dev:
        raise ValueError("train and dev splits must be non-empty")
    if model is None:
        vocab = build_vocabularies(train, classes)
        emb = load_embeddings(embeddings_path, vocab.words, config.word_dim, config.seed) if embeddings_path else None
        model = new_model(config, vocab, emb)
    vocab = model.vocab
    net = model.net
    freq = Counter(tok.lower() for s in train for tok in s.tokens)
    singletons = {vocab.words[w] for w, c in freq.items() if c == 1}

    opt = torch.optim.AdamW(net.parameters(), lr=config.learning_rate, weight_decay=config.weight_decay)
    rng = np.random.default_rng(config.seed)
    torch.manual_seed(config.seed)
    result = TrainResult(model)
    best_state = copy.deepcopy(net.state_dict())
    best = -1.0
    stale = 0
    for epoch in range(1, config.max_epochs + 1):
        net.train()
        order = rng.permutation(len(train))
        total, count = 0.0, 0
        for s in range(0, len(order), config.batch_size):
            batch = [train[i] for i in order[s:s + config.batch_size]]
            words, chars, lens, mask = _batch(vocab, [b.tokens for b in batch], singletons, rng, config.singleton_unk)
            em = net(words, chars, lens, mask)
            loss = batch_nll(em, net.transitions, _tags(vocab, batch), mask).mean()
            if not torch.isfinite(loss):
                raise FloatingPointError(f"training loss diverged (non-finite) at epoch {epoch}")
            opt.zero_grad()
            loss.backward()
            if config.clip_norm:
                torch.nn.utils.clip_grad_norm_(net.parameters(), config.clip_norm)
            opt.step()
            total += loss.item() * len(batch)
            count += len(batch)
        f1 = dev_f1(model, dev)
        result.history.append(EpochRecord(epoch, total / count, f1))
        log.info("epoch %d loss %.4f dev_f1 %.4f", epoch, total / count, f1)
        if f1 > best:
            best, stale = f1, 0
            best_state = copy.deepcopy(net.state_dict())
            result.best_epoch, result.best_dev_f1 = epoch, f1
        else:
            stale += 1
            if stale >= config.patience:
                break
        if target_f1 is not None and f1 >= target_f1:
            break
    net.load_state_dict(best_state)
    net.eval()
    return result


# ---------------------------------------------------------------------------
# Embeddings


def load_embeddings(path: str | Path, vocab: Index | Sequence[str], dim: int, seed: int = 0) -> EmbeddingTable:
    """Fill an embedding table for ``vocab`` from a text-format vector file.

    Accepts an optional ``count dim`` header line.  Rows for words absent
    from the file (and the OOV row) are drawn from N(0, 0.1^2); the PAD row
    is zero.  Coverage is the fraction of real vocabulary words found.
    """
    index = vocab if isinstance(vocab, Index) else Index(vocab)
    rng = np.random.default_rng(seed)
    mat = rng.normal(0.0, 0.1, (len(index), dim))
    mat[PAD] = 0.0
    found: set[int] = set()
    with open(path, encoding="utf-8", errors="replace") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip().split(" ")
            if not parts or parts == [""]:
                continue
            if lineno == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
                if int(parts[1]) != dim:
                    raise ValueError(f"embedding file has dimension {parts[1]}, expected {dim}")
                continue
            if len(parts) - 1 != dim:
                raise ValueError(f"{path}:{lineno}: vector has dimension {len(parts) - 1}, expected {dim}")
            word = parts[0].lower()
            if word in index and index.ids[word] not in found:
                found.add(index.ids[word])
                mat[index.ids[word]] = np.asarray(parts[1:], dtype=np.float64)
    real = len(index) - 2
    return EmbeddingTable(mat, len(found) / real if real else 0.0)


# ---------------------------------------------------------------------------
# Checkpoints


def _pack(t: torch.Tensor) -> dict:
    arr = t.detach().cpu().contiguous().numpy()
    return {"shape": list(arr.shape), "dtype": str(arr.dtype),
            "data": base64.b64encode(arr.astype(arr.dtype.newbyteorder("<")).tobytes()).decode("ascii")}


def _unpack(obj: dict) -> torch.Tensor:
    arr = np.frombuffer(base64.b64decode(obj["data"]), dtype=np.dtype(obj["dtype"]).newbyteorder("<"))
    return torch.as_tensor(arr.astype(obj["dtype"]).reshape(obj["shape"]))


def save_tagger(path: str | Path, model: TaggerModel) -> None:
    obj = {
        "format": "patentminer.tagger/1",
        "config": asdict(model.config),
        "labels": model.labels,
        "words": model.vocab.words.items,
        "chars": model.vocab.chars.items,
        "vocab_hash": hash_terms(model.vocab.words.items),
        "tensors": {k: _pack(v) for k, v in model.net.state_dict().items()},
    }
    Path(path).write_text(json.dumps(obj), encoding="utf-8")


def load_tagger(path: str | Path) -> TaggerModel:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    config = TaggerConfig(**obj["config"])
    words, chars = Index(), Index()
    words.items, chars.items = list(obj["words"]), list(obj["chars"])
    words.ids = {w: i for i, w in enumerate(words.items) if i >= 2}
    chars.ids = {c: i for i, c in enumerate(chars.items) if i >= 2}
    if hash_terms(words.items) != obj["vocab_hash"]:
        raise ValueError("checkpoint vocabulary hash mismatch")
    vocab = Vocabularies(words, chars, list(obj["labels"]))
    state = {k: _unpack(v) for k, v in obj["tensors"].items()}
    dtype = next(iter(state.values())).dtype
    model = new_model(config, vocab, dtype=dtype)
    model.net.load_state_dict(state)
    model.net.eval()
    return model


def write_tagging(path: str | Path, token_lists: Sequence[Sequence[str]], label_lists: Sequence[Sequence[str]],
                  ids: Sequence[str] | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i, (toks, labs) in enumerate(zip(token_lists, label_lists)):
            obj = {"tokens": list(toks), "labels": list(labs),
                   "entities": [{"class": e.cls, "start": e.start, "end": e.end, "text": e.text}
                                for e in decode_entities(toks, labs)]}
            if ids is not None:
                obj["section_id"] = ids[i]
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
