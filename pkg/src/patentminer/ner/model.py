"""Neural encoder producing CRF emission scores.

Pipeline per sentence: word vectors (optionally concatenated with a
character-BiLSTM composition of each token) -> dropout -> optional 1-D
convolution -> optional multi-head self-attention -> BiLSTM -> dropout ->
affine projection onto the label space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import torch
import torch.nn.functional as F
from torch import nn
from torch.nn.utils.rnn import pack_padded_sequence, pad_packed_sequence

PAD, OOV = 0, 1


@dataclass
class TaggerConfig:
    word_dim: int = 300
    char_dim: int = 25
    char_hidden: int = 25
    use_char: bool = False
    use_conv: bool = False
    conv_width: int = 3
    conv_filters: int = 128
    use_attention: bool = False
    attention_heads: int = 4
    hidden_size: int = 128
    dropout: float = 0.5
    learning_rate: float = 1e-3
    weight_decay: float = 1e-2
    batch_size: int = 32
    clip_norm: float = 5.0
    patience: int = 20
    max_epochs: int = 200
    singleton_unk: float = 0.5
    strict: bool = False
    seed: int = 0

    def __post_init__(self):
        for name in ("word_dim", "char_dim", "char_hidden", "conv_width", "conv_filters", "attention_heads",
                     "hidden_size", "batch_size", "max_epochs"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0 <= self.dropout < 1:
            raise ValueError("dropout must lie in [0, 1)")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")


class Index:
    """String-to-id table with reserved PAD (0) and OOV (1) rows."""

    def __init__(self, items: Sequence[str] = ()):
        self.items: list[str] = ["<pad>", "<oov>"]
        self.ids: dict[str, int] = {}
        for it in items:
            self.add(it)

    def add(self, item: str) -> int:
        if item not in self.ids:
            self.ids[item] = len(self.items)
            self.items.append(item)
        return self.ids[item]

    def __getitem__(self, item: str) -> int:
        return self.ids.get(item, OOV)

    def __contains__(self, item: str) -> bool:
        return item in self.ids

    def __len__(self) -> int:
        return len(self.items)


class SelfAttention(nn.Module):
    """Multi-head scaled dot-product self-attention with a padding mask.

    Heads use ``ceil(dim / heads)`` features each, so ``dim`` need not be a
    multiple of the head count; the output is projected back to ``dim``.
    """

    def __init__(self, dim: int, heads: int):
        super().__init__()
        self.heads = heads
        self.head_dim = math.ceil(dim / heads)
        inner = self.heads * self.head_dim
        self.q = nn.Linear(dim, inner)
        self.k = nn.Linear(dim, inner)
        self.v = nn.Linear(dim, inner)
        self.out = nn.Linear(inner, dim)

    def forward(self, x: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        B, T, _ = x.shape

        def split(t):
            return t.view(B, T, self.heads, self.head_dim).transpose(1, 2)

        q, k, v = split(self.q(x)), split(self.k(x)), split(self.v(x))
        att = q @ k.transpose(-1, -2) / math.sqrt(self.head_dim)
        att = att.masked_fill(~mask[:, None, None, :], float("-inf"))
        ctx = torch.softmax(att, dim=-1) @ v
        return self.out(ctx.transpose(1, 2).reshape(B, T, -1))


class TaggerNet(nn.Module):
    def __init__(self, config: TaggerConfig, num_words: int, num_chars: int, num_labels: int):
        super().__init__()
        self.config = config
        self.num_labels = num_labels
        self.word_emb = nn.Embedding(num_words, config.word_dim, padding_idx=PAD)
        dim = config.word_dim
        if config.use_char:
            self.char_emb = nn.Embedding(num_chars, config.char_dim, padding_idx=PAD)
            self.char_rnn = nn.LSTM(config.char_dim, config.char_hidden, batch_first=True, bidirectional=True)
            dim += 2 * config.char_hidden
        self.dropout = nn.Dropout(config.dropout)
        if config.use_conv:
            self.conv = nn.Conv1d(dim, config.conv_filters, config.conv_width)
            dim = config.conv_filters
        if config.use_attention:
            self.attention = SelfAttention(dim, config.attention_heads)
        self.rnn = nn.LSTM(dim, config.hidden_size, batch_first=True, bidirectional=True)
        self.proj = nn.Linear(2 * config.hidden_size, num_labels)
        # START/STOP are the last two states and are never emitted.
        self.transitions = nn.Parameter(torch.zeros(num_labels + 2, num_labels + 2))

    def _char_features(self, chars: torch.Tensor, char_lens: torch.Tensor) -> torch.Tensor:
        """chars: B x T x C ids; returns B x T x (2 * char_hidden)."""
        B, T, C = chars.shape
        flat = chars.view(B * T, C)
        lens = char_lens.view(B * T)
        out = torch.zeros(B * T, 2 * self.config.char_hidden, dtype=self.char_emb.weight.dtype)
        real = torch.nonzero(lens > 0).flatten()
        if real.numel():
            emb = self.char_emb(flat[real])
            packed = pack_padded_sequence(emb, lens[real].cpu(), batch_first=True, enforce_sorted=False)
            _, (h, _) = self.char_rnn(packed)
            out[real] = torch.cat([h[0], h[1]], dim=-1)
        return out.view(B, T, -1)

    def features(self, words: torch.Tensor, chars: torch.Tensor | None, char_lens: torch.Tensor | None,
                 mask: torch.Tensor) -> torch.Tensor:
        """Activations that enter the recurrent layer (B x T x D)."""
        x = self.word_emb(words)
        if self.config.use_char:
            x = torch.cat([x, self._char_features(chars, char_lens)], dim=-1)
        x = self.dropout(x)
        maskf = mask[:, :, None].to(x.dtype)
        x = x * maskf
        if self.config.use_conv:
            w = self.config.conv_width
            x = F.pad(x.transpose(1, 2), ((w - 1) // 2, w // 2))
            x = torch.relu(self.conv(x)).transpose(1, 2) * maskf
        if self.config.use_attention:
            x = self.attention(x, mask) * maskf
        return x

    def forward(self, words, chars, char_lens, mask) -> torch.Tensor:
        """Emission scores B x T x num_labels."""
        x = self.features(words, chars, char_lens, mask)
        lengths = mask.sum(1).cpu()
        packed = pack_padded_sequence(x, lengths, batch_first=True, enforce_sorted=False)
        out, _ = self.rnn(packed)
        out, _ = pad_packed_sequence(out, batch_first=True, total_length=words.shape[1])
        return self.proj(self.dropout(out))


@dataclass
class Vocabularies:
    words: Index
    chars: Index
    labels: list[str]
    label_ids: dict[str, int] = field(init=False)

    def __post_init__(self):
        self.label_ids = {lab: i for i, lab in enumerate(self.labels)}
