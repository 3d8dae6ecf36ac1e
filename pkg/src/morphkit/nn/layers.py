"""Network building blocks: embeddings, recurrent cells, scoring heads.

Sequences are processed as Python lists of per-step (batch, dim) tensors so
variable lengths are handled by convex masking: at padded positions the
recurrent state is carried through unchanged, which also makes the state
after the loop equal to the state at each row's last valid step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Parameter, Tensor


@dataclass(frozen=True)
class DropoutConfig:
    unit_dropout_rate: float = 0.5
    word_dropout_rate: float = 0.2
    rng_seed: int = 42

    def __post_init__(self):
        for rate in (self.unit_dropout_rate, self.word_dropout_rate):
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"dropout rate {rate} outside [0, 1]")


def glorot(rng: np.random.Generator, shape, fan_in: int, fan_out: int, dtype) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


def word_dropout(
    token_ids: np.ndarray, rate: float, rng: np.random.Generator, unk_id: int = 0
) -> np.ndarray:
    """Independently replace each id with the unknown id with probability rate."""
    if rate <= 0.0:
        return token_ids
    drop = rng.random(token_ids.shape) < rate
    out = token_ids.copy()
    out[drop] = unk_id
    return out


class Embedding:
    """Trainable lookup table; row 0 is the unknown/padding row."""

    def __init__(self, name: str, rng: np.random.Generator, size: int, dim: int, dtype):
        self.table = Parameter(name, rng.uniform(-0.1, 0.1, size=(size, dim)).astype(dtype), lazy=True)

    def __call__(self, ids: np.ndarray) -> Tensor:
        return ad.gather_rows(self.table, ids)

    def parameters(self) -> list[Parameter]:
        return [self.table]


class Affine:
    def __init__(self, name: str, rng: np.random.Generator, in_dim: int, out_dim: int, dtype):
        self.weight = Parameter(f"{name}.W", glorot(rng, (in_dim, out_dim), in_dim, out_dim, dtype))
        self.bias = Parameter(f"{name}.b", np.zeros(out_dim, dtype=dtype))

    def __call__(self, x: Tensor) -> Tensor:
        return ad.add(ad.matmul(x, self.weight), self.bias)

    def parameters(self) -> list[Parameter]:
        return [self.weight, self.bias]


class GRUCell:
    """Gates z, r; candidate uses the reset-gated previous state."""

    def __init__(self, name: str, rng: np.random.Generator, in_dim: int, hidden: int, dtype):
        self.hidden = hidden
        self.wx = Parameter(f"{name}.Wx", glorot(rng, (in_dim, 3 * hidden), in_dim, hidden, dtype))
        self.wh_zr = Parameter(f"{name}.Wh_zr", glorot(rng, (hidden, 2 * hidden), hidden, hidden, dtype))
        self.wh_n = Parameter(f"{name}.Wh_n", glorot(rng, (hidden, hidden), hidden, hidden, dtype))
        self.bias = Parameter(f"{name}.b", np.zeros(3 * hidden, dtype=dtype))

    def initial_state(self, batch: int, dtype) -> Tensor:
        return ad.constant(np.zeros((batch, self.hidden), dtype=dtype))

    def step(self, x: Tensor, h: Tensor) -> Tensor:
        hidden = self.hidden
        xa = ad.add(ad.matmul(x, self.wx), self.bias)
        hzr = ad.matmul(h, self.wh_zr)
        z = ad.sigmoid(ad.add(ad.narrow(xa, 1, 0, hidden), ad.narrow(hzr, 1, 0, hidden)))
        r = ad.sigmoid(ad.add(ad.narrow(xa, 1, hidden, hidden), ad.narrow(hzr, 1, hidden, hidden)))
        n = ad.tanh(ad.add(ad.narrow(xa, 1, 2 * hidden, hidden), ad.mul(r, ad.matmul(h, self.wh_n))))
        one = ad.constant(np.asarray(1.0, dtype=x.data.dtype))
        return ad.add(ad.mul(z, h), ad.mul(ad.sub(one, z), n))

    def parameters(self) -> list[Parameter]:
        return [self.wx, self.wh_zr, self.wh_n, self.bias]


class LSTMCell:
    """Gate order i, f, o, g; forget bias initialized to 1."""

    def __init__(self, name: str, rng: np.random.Generator, in_dim: int, hidden: int, dtype):
        self.hidden = hidden
        self.wx = Parameter(f"{name}.Wx", glorot(rng, (in_dim, 4 * hidden), in_dim, hidden, dtype))
        self.wh = Parameter(f"{name}.Wh", glorot(rng, (hidden, 4 * hidden), hidden, hidden, dtype))
        bias = np.zeros(4 * hidden, dtype=dtype)
        bias[hidden : 2 * hidden] = 1.0
        self.bias = Parameter(f"{name}.b", bias)

    def initial_state(self, batch: int, dtype) -> tuple[Tensor, Tensor]:
        zero = np.zeros((batch, self.hidden), dtype=dtype)
        return ad.constant(zero.copy()), ad.constant(zero.copy())

    def step(self, x: Tensor, state: tuple[Tensor, Tensor]) -> tuple[Tensor, Tensor]:
        h, c = state
        hidden = self.hidden
        z = ad.add(ad.add(ad.matmul(x, self.wx), ad.matmul(h, self.wh)), self.bias)
        i = ad.sigmoid(ad.narrow(z, 1, 0, hidden))
        f = ad.sigmoid(ad.narrow(z, 1, hidden, hidden))
        o = ad.sigmoid(ad.narrow(z, 1, 2 * hidden, hidden))
        g = ad.tanh(ad.narrow(z, 1, 3 * hidden, hidden))
        c_new = ad.add(ad.mul(f, c), ad.mul(i, g))
        h_new = ad.mul(o, ad.tanh(c_new))
        return h_new, c_new

    def parameters(self) -> list[Parameter]:
        return [self.wx, self.wh, self.bias]


def _blend(mask_col: Tensor, new: Tensor, old: Tensor) -> Tensor:
    # mask 1 -> take new step, mask 0 -> carry old state through padding
    one = ad.constant(np.asarray(1.0, dtype=new.data.dtype))
    return ad.add(ad.mul(mask_col, new), ad.mul(ad.sub(one, mask_col), old))


def run_gru(
    cell: GRUCell, xs: list[Tensor], mask: np.ndarray | None, reverse: bool = False
) -> tuple[list[Tensor], Tensor]:
    """Returns per-position outputs (input order) and the final blended state."""
    if not xs:
        return [], cell.initial_state(0, cell.wx.data.dtype)
    batch = xs[0].data.shape[0]
    dtype = xs[0].data.dtype
    h = cell.initial_state(batch, dtype)
    order = range(len(xs) - 1, -1, -1) if reverse else range(len(xs))
    outputs: list[Tensor | None] = [None] * len(xs)
    for t in order:
        h_new = cell.step(xs[t], h)
        if mask is not None:
            h = _blend(ad.constant(mask[t][:, None].astype(dtype)), h_new, h)
        else:
            h = h_new
        outputs[t] = h
    return outputs, h  # type: ignore[return-value]


def run_lstm(
    cell: LSTMCell, xs: list[Tensor], mask: np.ndarray | None, reverse: bool = False
) -> tuple[list[Tensor], tuple[Tensor, Tensor]]:
    if not xs:
        return [], cell.initial_state(0, cell.wx.data.dtype)
    batch = xs[0].data.shape[0]
    dtype = xs[0].data.dtype
    h, c = cell.initial_state(batch, dtype)
    order = range(len(xs) - 1, -1, -1) if reverse else range(len(xs))
    outputs: list[Tensor | None] = [None] * len(xs)
    for t in order:
        h_new, c_new = cell.step(xs[t], (h, c))
        if mask is not None:
            m = ad.constant(mask[t][:, None].astype(dtype))
            h = _blend(m, h_new, h)
            c = _blend(m, c_new, c)
        else:
            h, c = h_new, c_new
        outputs[t] = h
    return outputs, (h, c)  # type: ignore[return-value]


class BiGRU:
    def __init__(self, name: str, rng: np.random.Generator, in_dim: int, hidden: int, dtype):
        self.fwd = GRUCell(f"{name}.fwd", rng, in_dim, hidden, dtype)
        self.bwd = GRUCell(f"{name}.bwd", rng, in_dim, hidden, dtype)

    def run(self, xs: list[Tensor], mask: np.ndarray | None) -> tuple[list[Tensor], Tensor]:
        """Per-position [fwd; bwd] outputs plus the concatenated final states."""
        fwd_out, fwd_h = run_gru(self.fwd, xs, mask, reverse=False)
        bwd_out, bwd_h = run_gru(self.bwd, xs, mask, reverse=True)
        outs = [ad.concat([f, b], axis=1) for f, b in zip(fwd_out, bwd_out)]
        return outs, ad.concat([fwd_h, bwd_h], axis=1)

    def parameters(self) -> list[Parameter]:
        return self.fwd.parameters() + self.bwd.parameters()


class BiLSTM:
    def __init__(self, name: str, rng: np.random.Generator, in_dim: int, hidden: int, dtype):
        self.fwd = LSTMCell(f"{name}.fwd", rng, in_dim, hidden, dtype)
        self.bwd = LSTMCell(f"{name}.bwd", rng, in_dim, hidden, dtype)

    def run(self, xs: list[Tensor], mask: np.ndarray | None) -> list[Tensor]:
        fwd_out, _ = run_lstm(self.fwd, xs, mask, reverse=False)
        bwd_out, _ = run_lstm(self.bwd, xs, mask, reverse=True)
        return [ad.concat([f, b], axis=1) for f, b in zip(fwd_out, bwd_out)]

    def parameters(self) -> list[Parameter]:
        return self.fwd.parameters() + self.bwd.parameters()


class CharWordEncoder:
    """Character-level word vectors: char embeddings through a bidirectional GRU."""

    def __init__(
        self,
        name: str,
        rng: np.random.Generator,
        charset_size: int,
        char_dim: int,
        gru_dim: int,
        dtype,
    ):
        self.emb = Embedding(f"{name}.chars", rng, charset_size, char_dim, dtype)
        self.gru = BiGRU(f"{name}.gru", rng, char_dim, gru_dim, dtype)
        self.out_dim = 2 * gru_dim

    def encode_words(self, char_ids: np.ndarray, char_mask: np.ndarray) -> Tensor:
        """char_ids (words, max_len) -> (words, 2*gru_dim) final states."""
        n_words, max_len = char_ids.shape
        if max_len == 0 or n_words == 0:
            dtype = self.emb.table.data.dtype
            return ad.constant(np.zeros((n_words, self.out_dim), dtype=dtype))
        xs = [self.emb(char_ids[:, t]) for t in range(max_len)]
        _, final = self.gru.run(xs, char_mask.T)
        return final

    def parameters(self) -> list[Parameter]:
        return self.emb.parameters() + self.gru.parameters()


class BiaffinePairScorer:
    """All-pairs head x dependent scores via projected biaffine attention."""

    def __init__(self, name: str, rng: np.random.Generator, in_dim: int, proj_dim: int, dtype):
        self.head_proj = Affine(f"{name}.head", rng, in_dim, proj_dim, dtype)
        self.dep_proj = Affine(f"{name}.dep", rng, in_dim, proj_dim, dtype)
        self.weight = Parameter(
            f"{name}.U", glorot(rng, (proj_dim + 1, proj_dim + 1), proj_dim, proj_dim, dtype)
        )

    def scores(self, states: Tensor) -> Tensor:
        """states (n, D) -> (n, n) where entry (h, d) scores head h for dependent d."""
        n = states.data.shape[0]
        ones = ad.constant(np.ones((n, 1), dtype=states.data.dtype))
        heads = ad.concat([ad.tanh(self.head_proj(states)), ones], axis=1)
        deps = ad.concat([ad.tanh(self.dep_proj(states)), ones], axis=1)
        return ad.matmul(ad.matmul(heads, self.weight), ad.transpose(deps))

    def parameters(self) -> list[Parameter]:
        return self.head_proj.parameters() + self.dep_proj.parameters() + [self.weight]


class BiaffineLabelScorer:
    """Label scores for (chosen head, dependent) pairs."""

    def __init__(
        self, name: str, rng: np.random.Generator, in_dim: int, proj_dim: int, n_labels: int, dtype
    ):
        self.head_proj = Affine(f"{name}.head", rng, in_dim, proj_dim, dtype)
        self.dep_proj = Affine(f"{name}.dep", rng, in_dim, proj_dim, dtype)
        self.weight = Parameter(
            f"{name}.U",
            glorot(rng, (n_labels, proj_dim + 1, proj_dim + 1), proj_dim, proj_dim, dtype),
        )

    def scores(self, states: Tensor, head_indices: np.ndarray) -> Tensor:
        """states (n+1, D), head_indices (n,) -> (n, n_labels) for dependents 1..n."""
        n_plus_1 = states.data.shape[0]
        dtype = states.data.dtype
        ones = ad.constant(np.ones((n_plus_1, 1), dtype=dtype))
        heads = ad.concat([ad.tanh(self.head_proj(states)), ones], axis=1)
        deps = ad.concat([ad.tanh(self.dep_proj(states)), ones], axis=1)
        dep_rows = ad.narrow(deps, 0, 1, n_plus_1 - 1)
        head_rows = ad.gather_rows(heads, np.asarray(head_indices))
        return ad.label_bilinear(head_rows, self.weight, dep_rows)

    def parameters(self) -> list[Parameter]:
        return self.head_proj.parameters() + self.dep_proj.parameters() + [self.weight]
