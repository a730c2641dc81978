"""Numpy layers with hand-written backward passes.

Arrays are batch-major: sequences are ``(batch, time, features)`` with a
``(batch, time)`` mask holding ones on real positions and zeros on padding.
Padding always follows the real positions of a row. Weight matrices are
``(out, in)`` and applied as ``x @ W.T``. Parameters live in flat dicts
keyed by dotted names; every ``*_forward`` returns a cache that the
matching ``*_backward`` consumes, and gradients come back keyed by the
same names as the parameters they belong to.
"""

from typing import Dict, Optional, Sequence, Tuple
import numpy as np
from scipy.special import expit, softmax
from .constants import INIT_RANGE
from .errors import DimensionMismatch, EmptySequence, NonFiniteValue

Params = Dict[str, np.ndarray]


def init_params(
    shapes: Dict[str, Tuple[int, ...]], seed: int, dtype: str = "float32"
) -> Params:
    """Draw every parameter i.i.d. from U(-0.1, 0.1), in ``shapes`` order.

    Args:
        shapes (dict): Parameter name to shape.
        seed (int): Generator seed; equal seeds give identical parameters.
        dtype (str): Numpy dtype of the returned arrays.
    """
    rng = np.random.default_rng(seed)
    return {
        name: rng.uniform(-INIT_RANGE, INIT_RANGE, size=shape).astype(dtype)
        for name, shape in shapes.items()
    }


def zeros_like_params(params: Params) -> Params:
    return {name: np.zeros_like(value) for name, value in params.items()}


def accumulate(total: Params, grads: Params) -> Params:
    for name, grad in grads.items():
        if name in total:
            total[name] += grad
        else:
            total[name] = grad.copy()
    return total


def dropout_mask(
    rng: np.random.Generator, shape: Tuple[int, ...], rate: float, dtype
) -> np.ndarray:
    """Inverted dropout: kept units are scaled by ``1 / (1 - rate)``."""
    keep = 1.0 - rate
    return (rng.random(shape) < keep).astype(dtype) / keep


# embedding and affine


def embedding_forward(ids: np.ndarray, table: np.ndarray) -> np.ndarray:
    return table[ids]


def embedding_backward(
    dout: np.ndarray, ids: np.ndarray, table: np.ndarray
) -> np.ndarray:
    dtable = np.zeros_like(table)
    np.add.at(dtable, ids.reshape(-1), dout.reshape(-1, table.shape[1]))
    return dtable


def affine_forward(x: np.ndarray, W: np.ndarray, b: np.ndarray) -> np.ndarray:
    return x @ W.T + b


def affine_backward(
    dout: np.ndarray, x: np.ndarray, W: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    flat_out = dout.reshape(-1, W.shape[0])
    flat_x = x.reshape(-1, W.shape[1])
    return dout @ W, flat_out.T @ flat_x, flat_out.sum(axis=0)


# LSTM


def lstm_step_forward(x, h_prev, c_prev, W_x, W_h, b, mask=None):
    """One LSTM step with gates ordered input, forget, cell, output.

    Rows whose mask is 0 carry ``h_prev`` and ``c_prev`` through unchanged.
    """
    hidden = h_prev.shape[1]
    z = x @ W_x.T + h_prev @ W_h.T + b
    i = expit(z[:, :hidden])
    f = expit(z[:, hidden : 2 * hidden])
    g = np.tanh(z[:, 2 * hidden : 3 * hidden])
    o = expit(z[:, 3 * hidden :])
    c_new = f * c_prev + i * g
    tanh_c = np.tanh(c_new)
    h_new = o * tanh_c

    m = np.ones((x.shape[0], 1), dtype=x.dtype) if mask is None else mask[:, None]
    h = m * h_new + (1 - m) * h_prev
    c = m * c_new + (1 - m) * c_prev
    cache = (x, h_prev, c_prev, i, f, g, o, tanh_c, m)
    return h, c, cache


def lstm_step_backward(dh, dc, cache, W_x, W_h):
    x, h_prev, c_prev, i, f, g, o, tanh_c, m = cache
    dh_new = m * dh
    dc_new = m * dc + dh_new * o * (1 - tanh_c**2)

    di = dc_new * g
    df = dc_new * c_prev
    dg = dc_new * i
    do = dh_new * tanh_c
    dz = np.concatenate(
        [di * i * (1 - i), df * f * (1 - f), dg * (1 - g**2), do * o * (1 - o)],
        axis=1,
    )

    dx = dz @ W_x
    dh_prev = dz @ W_h + (1 - m) * dh
    dc_prev = dc_new * f + (1 - m) * dc
    return dx, dh_prev, dc_prev, (dz.T @ x, dz.T @ h_prev, dz.sum(axis=0))


def lstm_forward(xs, mask, params: Params, prefix: str, h0=None, c0=None):
    """Run one LSTM direction over ``xs`` (batch, time, in)."""
    W_x, W_h, b = (params[f"{prefix}.{n}"] for n in ("W_x", "W_h", "b"))
    batch, steps, _ = xs.shape
    hidden = W_h.shape[1]
    h = np.zeros((batch, hidden), dtype=xs.dtype) if h0 is None else h0
    c = np.zeros((batch, hidden), dtype=xs.dtype) if c0 is None else c0

    hs = np.empty((batch, steps, hidden), dtype=xs.dtype)
    caches = []
    for t in range(steps):
        h, c, cache = lstm_step_forward(xs[:, t], h, c, W_x, W_h, b, mask[:, t])
        hs[:, t] = h
        caches.append(cache)
    return hs, (h, c), caches


def lstm_backward(dhs, dh_last, dc_last, caches, params: Params, prefix: str):
    """Backward of :func:`lstm_forward`; ``dhs`` may be None."""
    W_x, W_h = params[f"{prefix}.W_x"], params[f"{prefix}.W_h"]
    dW_x = np.zeros_like(W_x)
    dW_h = np.zeros_like(W_h)
    db = np.zeros_like(params[f"{prefix}.b"])
    dh, dc = dh_last, dc_last
    dxs = None

    for t in reversed(range(len(caches))):
        if dhs is not None:
            dh = dh + dhs[:, t]
        dx, dh, dc, (gW_x, gW_h, gb) = lstm_step_backward(dh, dc, caches[t], W_x, W_h)
        if dxs is None:
            dxs = np.empty((dx.shape[0], len(caches), dx.shape[1]), dtype=dx.dtype)
        dxs[:, t] = dx
        dW_x += gW_x
        dW_h += gW_h
        db += gb

    grads = {f"{prefix}.W_x": dW_x, f"{prefix}.W_h": dW_h, f"{prefix}.b": db}
    return dxs, dh, dc, grads


def _reversal_index(mask: np.ndarray) -> np.ndarray:
    """Per-row index reversing the real positions and fixing the padding.

    The permutation is its own inverse.
    """
    lengths = mask.sum(axis=1).astype(int)[:, None]
    steps = np.arange(mask.shape[1])[None, :]
    return np.where(steps < lengths, lengths - 1 - steps, steps)


def _gather_time(x: np.ndarray, index: np.ndarray) -> np.ndarray:
    return np.take_along_axis(x, index[:, :, None], axis=1)


def _check_sequence(xs: np.ndarray, mask: np.ndarray) -> None:
    if xs.shape[1] == 0 or np.any(mask.sum(axis=1) == 0):
        raise EmptySequence("cannot encode an empty sequence")


def bilstm_forward(xs, mask, params: Params, prefix: str):
    """Bi-directional LSTM layer.

    Returns:
        tuple: per-position states ``(batch, time, 2 * hidden)``, the final
        ``(h, c)`` pair with both directions concatenated, and the cache.
    """
    _check_sequence(xs, mask)
    reverse = _reversal_index(mask)
    hs_f, (h_f, c_f), cache_f = lstm_forward(xs, mask, params, f"{prefix}.fwd")
    hs_b, (h_b, c_b), cache_b = lstm_forward(
        _gather_time(xs, reverse), mask, params, f"{prefix}.bwd"
    )
    out = np.concatenate([hs_f, _gather_time(hs_b, reverse)], axis=2)
    final = (np.concatenate([h_f, h_b], axis=1), np.concatenate([c_f, c_b], axis=1))
    return out, final, (reverse, cache_f, cache_b)


def bilstm_backward(dout, dh_final, dc_final, cache, params: Params, prefix: str):
    reverse, cache_f, cache_b = cache
    hidden = dout.shape[2] // 2
    dxs_f, _, _, grads = lstm_backward(
        dout[:, :, :hidden],
        dh_final[:, :hidden],
        dc_final[:, :hidden],
        cache_f,
        params,
        f"{prefix}.fwd",
    )
    dxs_b, _, _, grads_b = lstm_backward(
        _gather_time(dout[:, :, hidden:], reverse),
        dh_final[:, hidden:],
        dc_final[:, hidden:],
        cache_b,
        params,
        f"{prefix}.bwd",
    )
    grads.update(grads_b)
    return dxs_f + _gather_time(dxs_b, reverse), grads


def bilstm_encode(
    embedded: np.ndarray,
    params: Params,
    prefix: str,
    mask: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, Tuple[np.ndarray, np.ndarray]]:
    """Encode ``embedded`` (batch, time, in) with one bi-directional layer.

    Raises:
        EmptySequence: A row has no real positions.
    """
    if mask is None:
        mask = np.ones(embedded.shape[:2], dtype=embedded.dtype)
    out, final, _ = bilstm_forward(embedded, mask, params, prefix)
    return out, final


def encoder_forward(
    xs,
    mask,
    params: Params,
    prefix: str,
    num_layers: int,
    dropout: float = 0.0,
    rng: Optional[np.random.Generator] = None,
):
    """Stacked bi-LSTM; dropout on the inputs of every layer above the first.

    Dropout is only applied when ``rng`` is given.
    """
    inputs = xs
    finals = []
    caches = []
    for layer in range(num_layers):
        drop = None
        if layer > 0 and dropout > 0 and rng is not None:
            drop = dropout_mask(rng, inputs.shape, dropout, inputs.dtype)
            inputs = inputs * drop
        out, final, cache = bilstm_forward(inputs, mask, params, f"{prefix}.l{layer}")
        finals.append(final)
        caches.append((drop, cache))
        inputs = out
    return inputs, finals, caches


def encoder_backward(dout, dfinals, caches, params: Params, prefix: str):
    grads = {}  # type: Params
    for layer in reversed(range(len(caches))):
        drop, cache = caches[layer]
        dh, dc = dfinals[layer]
        dout, layer_grads = bilstm_backward(
            dout, dh, dc, cache, params, f"{prefix}.l{layer}"
        )
        if drop is not None:
            dout = dout * drop
        grads.update(layer_grads)
    return dout, grads


# fusion


def fuse_forward(finals: Sequence[Tuple[np.ndarray, np.ndarray]], params, prefix):
    """``h_d = W_h [h_1; ...; h_n] + b_h`` and ``c_d = W_c [c_1; ...; c_n] + b_c``."""
    if not finals:
        raise DimensionMismatch("fusion needs at least one encoder final state")
    W_h, b_h = params[f"{prefix}.W_h"], params[f"{prefix}.b_h"]
    W_c, b_c = params[f"{prefix}.W_c"], params[f"{prefix}.b_c"]
    batches = {h.shape[0] for h, _ in finals} | {c.shape[0] for _, c in finals}
    if len(batches) != 1:
        raise DimensionMismatch(f"encoder finals disagree on batch size: {batches}")

    hs = np.concatenate([h for h, _ in finals], axis=1)
    cs = np.concatenate([c for _, c in finals], axis=1)
    if hs.shape[1] != W_h.shape[1] or cs.shape[1] != W_c.shape[1]:
        raise DimensionMismatch(
            f"fusion expects width {W_h.shape[1]}, got {hs.shape[1]}"
        )
    widths = [h.shape[1] for h, _ in finals]
    return (
        (affine_forward(hs, W_h, b_h), affine_forward(cs, W_c, b_c)),
        (hs, cs, widths),
    )


def fuse_backward(dh_d, dc_d, cache, params: Params, prefix: str):
    hs, cs, widths = cache
    dhs, dW_h, db_h = affine_backward(dh_d, hs, params[f"{prefix}.W_h"])
    dcs, dW_c, db_c = affine_backward(dc_d, cs, params[f"{prefix}.W_c"])
    cuts = np.cumsum(widths)[:-1]
    dfinals = list(zip(np.split(dhs, cuts, axis=1), np.split(dcs, cuts, axis=1)))
    grads = {
        f"{prefix}.W_h": dW_h,
        f"{prefix}.b_h": db_h,
        f"{prefix}.W_c": dW_c,
        f"{prefix}.b_c": db_c,
    }
    return dfinals, grads


def fuse(finals, params: Params, prefix: str = "fuse.l0"):
    """Fused decoder initial state ``(h_d, c_d)`` from encoder finals."""
    state, _ = fuse_forward(finals, params, prefix)
    return state


# attention


def dot_score_matrix(hidden: int, enc_dim: int, dtype) -> np.ndarray:
    """Fixed score matrix of dot-product attention.

    Encoder states are twice as wide as the decoder state, so the decoder
    state is scored against both halves: ``[I I]``.
    """
    if enc_dim != 2 * hidden:
        raise DimensionMismatch("dot attention needs encoder width 2 * hidden")
    eye = np.eye(hidden, dtype=dtype)
    return np.concatenate([eye, eye], axis=1)


def attention_forward(h, enc, mask, W_a):
    """Bilinear attention over all encoder positions jointly.

    Args:
        h (ndarray): Decoder state ``(batch, hidden)``.
        enc (ndarray): Encoder states ``(batch, positions, enc_dim)``.
        mask (ndarray): ``(batch, positions)``; masked positions get weight 0.
        W_a (ndarray): Score matrix ``(hidden, enc_dim)``.
    """
    query = h @ W_a
    scores = np.einsum("bsk,bk->bs", enc, query)
    scores = np.where(mask > 0, scores, -np.inf)
    weights = softmax(scores, axis=1)
    context = np.einsum("bs,bsk->bk", weights, enc)
    return context, weights, (h, enc, query, weights)


def attention_backward(dcontext, dweights, cache, W_a):
    h, enc, query, weights = cache
    da = np.einsum("bsk,bk->bs", enc, dcontext)
    if dweights is not None:
        da = da + dweights
    dscores = weights * (da - np.sum(weights * da, axis=1, keepdims=True))
    denc = weights[:, :, None] * dcontext[:, None, :]
    denc += dscores[:, :, None] * query[:, None, :]
    dquery = np.einsum("bs,bsk->bk", dscores, enc)
    return dquery @ W_a.T, denc, h.T @ dquery


def attend(h, enc, W_a, mask=None):
    """Context vector and attention weights for one decoder step."""
    if mask is None:
        mask = np.ones(enc.shape[:2], dtype=enc.dtype)
    context, weights, _ = attention_forward(h, enc, mask, W_a)
    return context, weights


def attentional_forward(context, h, W_c):
    """Attentional state ``tanh(W_c [context; h])``."""
    joined = np.concatenate([context, h], axis=1)
    out = np.tanh(joined @ W_c.T)
    return out, (joined, out, context.shape[1])


def attentional_backward(dout, cache, W_c):
    joined, out, width = cache
    dz = dout * (1 - out**2)
    djoined = dz @ W_c
    return djoined[:, :width], djoined[:, width:], dz.T @ joined


# copy


def copy_gate_forward(context, h, x, params: Params, prefix: str = "copy"):
    """Generation probability ``sigmoid(w_ctx.ctx + w_h.h + w_x.x + b)``."""
    w_ctx, w_h, w_x, b = (params[f"{prefix}.{n}"] for n in ("w_ctx", "w_h", "w_x", "b"))
    p_gen = expit(context @ w_ctx + h @ w_h + x @ w_x + b[0])
    return p_gen, (context, h, x, p_gen)


def copy_gate_backward(dp_gen, cache, params: Params, prefix: str = "copy"):
    context, h, x, p_gen = cache
    dz = dp_gen * p_gen * (1 - p_gen)
    grads = {
        f"{prefix}.w_ctx": context.T @ dz,
        f"{prefix}.w_h": h.T @ dz,
        f"{prefix}.w_x": x.T @ dz,
        f"{prefix}.b": np.array([dz.sum()], dtype=dz.dtype),
    }
    dcontext = dz[:, None] * params[f"{prefix}.w_ctx"][None, :]
    dh = dz[:, None] * params[f"{prefix}.w_h"][None, :]
    dx = dz[:, None] * params[f"{prefix}.w_x"][None, :]
    return dcontext, dh, dx, grads


def copy_distribution(
    logits: np.ndarray,
    p_gen: Optional[np.ndarray],
    attention: Optional[np.ndarray],
    input_ids: Optional[np.ndarray],
    ext_size: int,
):
    """Mixture of the vocabulary softmax and the attention over inputs.

    ``P(w) = p_gen * softmax(logits)(w) + (1 - p_gen) * sum of the attention
    on the input positions holding w``. Ids at or above the vocabulary size
    are input tokens outside the vocabulary. Without a gate the result is
    the plain softmax, padded with zeros up to ``ext_size``.

    Returns:
        tuple: ``(batch, ext_size)`` probabilities and the backward cache.
    """
    batch, vocab = logits.shape
    probs_vocab = softmax(logits, axis=1)
    probs = np.zeros((batch, max(ext_size, vocab)), dtype=logits.dtype)
    if p_gen is None:
        probs[:, :vocab] = probs_vocab
    else:
        probs[:, :vocab] = p_gen[:, None] * probs_vocab
        rows = np.repeat(np.arange(batch), input_ids.shape[1])
        np.add.at(
            probs,
            (rows, input_ids.reshape(-1)),
            ((1 - p_gen)[:, None] * attention).reshape(-1),
        )
    return probs, (probs_vocab, p_gen, attention, input_ids)


def copy_distribution_backward(dprobs, cache):
    """Gradients for ``(logits, p_gen, attention)``; the last two may be None."""
    probs_vocab, p_gen, attention, input_ids = cache
    vocab = probs_vocab.shape[1]
    d_vocab = dprobs[:, :vocab]
    if p_gen is None:
        dpv = d_vocab
        dp_gen = dattention = None
    else:
        dpv = p_gen[:, None] * d_vocab
        d_inputs = np.take_along_axis(dprobs, input_ids, axis=1)
        dp_gen = np.sum(d_vocab * probs_vocab, axis=1) - np.sum(
            attention * d_inputs, axis=1
        )
        dattention = (1 - p_gen)[:, None] * d_inputs
    dlogits = probs_vocab * (dpv - np.sum(probs_vocab * dpv, axis=1, keepdims=True))
    return dlogits, dp_gen, dattention


# gradient checking


class CheckedLayer:
    """Base of the layers :func:`grad_check` understands.

    ``forward(inputs)`` returns ``(out, cache)`` for a dict of input arrays;
    ``backward(dout, cache)`` returns gradients for the float inputs it
    differentiates and for every entry of ``params``.
    """

    params: Params

    def forward(self, inputs: Dict[str, np.ndarray]):
        raise NotImplementedError

    def backward(self, dout, cache) -> Tuple[Params, Params]:
        raise NotImplementedError


def _relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic) + abs(numeric), 1e-5)


def grad_check(
    layer: CheckedLayer,
    inputs: Dict[str, np.ndarray],
    epsilon: float = 1e-5,
    sample_size: int = 200,
    seed: int = 0,
) -> float:
    """Largest relative error between analytic and central-difference gradients.

    The scalar checked is ``sum(R * out)`` for a fixed random ``R``. Arrays
    with more than ``sample_size`` coordinates are checked on a random
    sample of that many coordinates.

    Raises:
        NonFiniteValue: A gradient or a perturbed loss is NaN or infinite.
    """
    rng = np.random.default_rng(seed)
    out, cache = layer.forward(inputs)
    projection = rng.standard_normal(np.shape(out))
    dinputs, dparams = layer.backward(projection, cache)

    def loss() -> float:
        value, _ = layer.forward(inputs)
        return float(np.sum(projection * value))

    targets = [(layer.params, name, grad) for name, grad in dparams.items()]
    targets += [(inputs, name, grad) for name, grad in dinputs.items()]

    worst = 0.0
    for container, name, analytic in targets:
        array = container[name]
        if not np.issubdtype(array.dtype, np.floating):
            continue
        if array.size <= sample_size:
            coordinates = np.arange(array.size)
        else:
            coordinates = rng.choice(array.size, size=sample_size, replace=False)

        for flat_index in coordinates:
            index = np.unravel_index(flat_index, array.shape)
            original = array[index]
            array[index] = original + epsilon
            plus = loss()
            array[index] = original - epsilon
            minus = loss()
            array[index] = original

            numeric = (plus - minus) / (2 * epsilon)
            value = float(analytic[index])
            if not (np.isfinite(numeric) and np.isfinite(value)):
                raise NonFiniteValue(f"non-finite gradient for {name}{list(index)}")
            worst = max(worst, _relative_error(value, numeric))
    return worst


class EmbeddingLayer(CheckedLayer):
    def __init__(self, vocab_size: int, dim: int, seed: int = 0, dtype="float64"):
        self.params = init_params({"E": (vocab_size, dim)}, seed, dtype)

    def forward(self, inputs):
        return embedding_forward(inputs["ids"], self.params["E"]), inputs["ids"]

    def backward(self, dout, cache):
        return {}, {"E": embedding_backward(dout, cache, self.params["E"])}


class AffineLayer(CheckedLayer):
    def __init__(self, in_dim: int, out_dim: int, seed: int = 0, dtype="float64"):
        shapes = {"W": (out_dim, in_dim), "b": (out_dim,)}
        self.params = init_params(shapes, seed, dtype)

    def forward(self, inputs):
        x = inputs["x"]
        return affine_forward(x, self.params["W"], self.params["b"]), x

    def backward(self, dout, cache):
        dx, dW, db = affine_backward(dout, cache, self.params["W"])
        return {"x": dx}, {"W": dW, "b": db}


class LstmCellLayer(CheckedLayer):
    """One LSTM step; the output is ``[h; c]``."""

    def __init__(self, in_dim: int, hidden: int, seed: int = 0, dtype="float64"):
        self.hidden = hidden
        self.params = init_params(
            {
                "cell.W_x": (4 * hidden, in_dim),
                "cell.W_h": (4 * hidden, hidden),
                "cell.b": (4 * hidden,),
            },
            seed,
            dtype,
        )

    def forward(self, inputs):
        p = self.params
        h, c, cache = lstm_step_forward(
            inputs["x"],
            inputs["h"],
            inputs["c"],
            p["cell.W_x"],
            p["cell.W_h"],
            p["cell.b"],
            inputs.get("mask"),
        )
        return np.concatenate([h, c], axis=1), cache

    def backward(self, dout, cache):
        dh, dc = dout[:, : self.hidden], dout[:, self.hidden :]
        dx, dh_prev, dc_prev, (dW_x, dW_h, db) = lstm_step_backward(
            dh, dc, cache, self.params["cell.W_x"], self.params["cell.W_h"]
        )
        grads = {"cell.W_x": dW_x, "cell.W_h": dW_h, "cell.b": db}
        return {"x": dx, "h": dh_prev, "c": dc_prev}, grads


def encoder_shapes(prefix: str, in_dim: int, hidden: int, num_layers: int):
    shapes = {}
    for layer in range(num_layers):
        width = in_dim if layer == 0 else 2 * hidden
        for direction in ("fwd", "bwd"):
            name = f"{prefix}.l{layer}.{direction}"
            shapes[f"{name}.W_x"] = (4 * hidden, width)
            shapes[f"{name}.W_h"] = (4 * hidden, hidden)
            shapes[f"{name}.b"] = (4 * hidden,)
    return shapes


class BiLstmLayer(CheckedLayer):
    """Stacked bi-LSTM encoder; the output is the states plus every final.

    Dropout masks are drawn from a generator re-seeded on every forward
    call, so the layer stays a deterministic function of its inputs.
    """

    def __init__(
        self,
        in_dim: int,
        hidden: int,
        num_layers: int = 1,
        dropout: float = 0.0,
        seed: int = 0,
        dtype="float64",
    ):
        self.num_layers = num_layers
        self.dropout = dropout
        self.seed = seed
        self.params = init_params(
            encoder_shapes("enc", in_dim, hidden, num_layers), seed, dtype
        )

    def forward(self, inputs):
        rng = np.random.default_rng(self.seed) if self.dropout else None
        out, finals, caches = encoder_forward(
            inputs["xs"],
            inputs["mask"],
            self.params,
            "enc",
            self.num_layers,
            self.dropout,
            rng,
        )
        batch = out.shape[0]
        parts = [out.reshape(batch, -1)]
        for h, c in finals:
            parts.extend([h, c])
        return np.concatenate(parts, axis=1), (out.shape, finals, caches)

    def backward(self, dout, cache):
        shape, finals, caches = cache
        batch = shape[0]
        size = int(np.prod(shape[1:]))
        dstates = dout[:, :size].reshape(shape)
        dfinals = []
        offset = size
        for h, c in finals:
            width = h.shape[1]
            dh = dout[:, offset : offset + width]
            dc = dout[:, offset + width : offset + 2 * width]
            dfinals.append((dh, dc))
            offset += 2 * width
        dxs, grads = encoder_backward(dstates, dfinals, caches, self.params, "enc")
        return {"xs": dxs}, grads


class FusionLayer(CheckedLayer):
    """Fusion of ``len(widths)`` encoder finals; the output is ``[h_d; c_d]``."""

    def __init__(self, widths: Sequence[int], hidden: int, seed=0, dtype="float64"):
        self.widths = list(widths)
        total = sum(self.widths)
        self.params = init_params(
            {
                "fuse.W_h": (hidden, total),
                "fuse.b_h": (hidden,),
                "fuse.W_c": (hidden, total),
                "fuse.b_c": (hidden,),
            },
            seed,
            dtype,
        )
        self.hidden = hidden

    def forward(self, inputs):
        finals = [(inputs[f"h{i}"], inputs[f"c{i}"]) for i in range(len(self.widths))]
        (h_d, c_d), cache = fuse_forward(finals, self.params, "fuse")
        return np.concatenate([h_d, c_d], axis=1), cache

    def backward(self, dout, cache):
        dfinals, grads = fuse_backward(
            dout[:, : self.hidden], dout[:, self.hidden :], cache, self.params, "fuse"
        )
        dinputs = {}
        for i, (dh, dc) in enumerate(dfinals):
            dinputs[f"h{i}"] = dh
            dinputs[f"c{i}"] = dc
        return dinputs, grads


class AttentionLayer(CheckedLayer):
    """Attention step; the output is ``[context; weights]``."""

    def __init__(self, hidden: int, enc_dim: int, seed: int = 0, dtype="float64"):
        self.params = init_params({"attn.W_a": (hidden, enc_dim)}, seed, dtype)

    def forward(self, inputs):
        context, weights, cache = attention_forward(
            inputs["h"], inputs["enc"], inputs["mask"], self.params["attn.W_a"]
        )
        return np.concatenate([context, weights], axis=1), (cache, context.shape[1])

    def backward(self, dout, cache):
        cache, width = cache
        dh, denc, dW_a = attention_backward(
            dout[:, :width], dout[:, width:], cache, self.params["attn.W_a"]
        )
        return {"h": dh, "enc": denc}, {"attn.W_a": dW_a}


class CopyGateLayer(CheckedLayer):
    def __init__(
        self, enc_dim: int, hidden: int, emb_dim: int, seed: int = 0, dtype="float64"
    ):
        self.params = init_params(
            {
                "copy.w_ctx": (enc_dim,),
                "copy.w_h": (hidden,),
                "copy.w_x": (emb_dim,),
                "copy.b": (1,),
            },
            seed,
            dtype,
        )

    def forward(self, inputs):
        return copy_gate_forward(inputs["ctx"], inputs["h"], inputs["x"], self.params)

    def backward(self, dout, cache):
        dctx, dh, dx, grads = copy_gate_backward(dout, cache, self.params)
        return {"ctx": dctx, "h": dh, "x": dx}, grads


class AttentionCopyLayer(CheckedLayer):
    """Attention, attentional state, output projection, copy gate and mixture.

    The output is the ``(batch, ext_size)`` copy-augmented distribution.
    """

    def __init__(
        self,
        hidden: int,
        enc_dim: int,
        emb_dim: int,
        vocab: int,
        ext_size: int,
        seed: int = 0,
        dtype="float64",
    ):
        self.ext_size = ext_size
        self.params = init_params(
            {
                "attn.W_a": (hidden, enc_dim),
                "attn.W_c": (hidden, enc_dim + hidden),
                "out.W": (vocab, hidden),
                "out.b": (vocab,),
                "copy.w_ctx": (enc_dim,),
                "copy.w_h": (hidden,),
                "copy.w_x": (emb_dim,),
                "copy.b": (1,),
            },
            seed,
            dtype,
        )

    def forward(self, inputs):
        p = self.params
        h, x = inputs["h"], inputs["x"]
        context, weights, attn_cache = attention_forward(
            h, inputs["enc"], inputs["mask"], p["attn.W_a"]
        )
        state, state_cache = attentional_forward(context, h, p["attn.W_c"])
        logits = affine_forward(state, p["out.W"], p["out.b"])
        p_gen, gate_cache = copy_gate_forward(context, h, x, p)
        probs, mix_cache = copy_distribution(
            logits, p_gen, weights, inputs["src_ids"], self.ext_size
        )
        return probs, (attn_cache, state_cache, state, gate_cache, mix_cache)

    def backward(self, dout, cache):
        p = self.params
        attn_cache, state_cache, state, gate_cache, mix_cache = cache
        dlogits, dp_gen, dweights = copy_distribution_backward(dout, mix_cache)
        dctx_gate, dh_gate, dx, grads = copy_gate_backward(dp_gen, gate_cache, p)
        dstate, grads["out.W"], grads["out.b"] = affine_backward(
            dlogits, state, p["out.W"]
        )
        dctx, dh_state, grads["attn.W_c"] = attentional_backward(
            dstate, state_cache, p["attn.W_c"]
        )
        dh_attn, denc, grads["attn.W_a"] = attention_backward(
            dctx + dctx_gate, dweights, attn_cache, p["attn.W_a"]
        )
        dinputs = {"h": dh_gate + dh_state + dh_attn, "x": dx, "enc": denc}
        return dinputs, grads
