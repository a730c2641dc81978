"""Multi-input encoder-decoder that generates lemma names.

Each configured input has its own stacked bi-LSTM encoder over a shared
input embedding. The final states of all encoders are fused, layer by
layer, into the initial state of the LSTM decoder. With attention the
decoder attends over the positions of all encoders at once; with copy the
output distribution mixes the vocabulary softmax with the attention over
input sub-tokens, so sub-tokens missing from the name vocabulary can still
be produced.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple, Union
import numpy as np
from .config import ModelConfig
from .constants import BOS, EOS, PAD, UNDERSCORE, UNK
from .corpus import LemmaRecord
from .errors import ConfigError, ReferenceTooLong
from .features import Example, InputKind, Preprocessor
from .nnet import (
    CheckedLayer,
    Params,
    accumulate,
    affine_backward,
    affine_forward,
    attention_backward,
    attention_forward,
    attentional_backward,
    attentional_forward,
    copy_distribution,
    copy_distribution_backward,
    copy_gate_backward,
    copy_gate_forward,
    dot_score_matrix,
    dropout_mask,
    encoder_backward,
    encoder_forward,
    encoder_shapes,
    fuse_backward,
    fuse_forward,
    init_params,
    lstm_step_backward,
    lstm_step_forward,
    zeros_like_params,
)
from .subtokenizer import detokenize
from .vocab import Vocab

logger = logging.getLogger(__name__)

_BANNED_IDS = (PAD, BOS, UNK)


def model_shapes(
    config: ModelConfig, input_vocab_size: int, name_vocab_size: int
) -> Dict[str, Tuple[int, ...]]:
    """Name and shape of every parameter, in initialization order."""
    emb, hidden, layers = config.embedding_dim, config.hidden_units, config.num_layers
    enc_dim = 2 * hidden
    shapes = {"src_embedding": (input_vocab_size, emb)}
    for kind in config.inputs:
        shapes.update(encoder_shapes(f"enc.{kind.value}", emb, hidden, layers))

    fused = len(config.inputs) * enc_dim
    for layer in range(layers):
        shapes[f"fuse.l{layer}.W_h"] = (hidden, fused)
        shapes[f"fuse.l{layer}.b_h"] = (hidden,)
        shapes[f"fuse.l{layer}.W_c"] = (hidden, fused)
        shapes[f"fuse.l{layer}.b_c"] = (hidden,)

    shapes["tgt_embedding"] = (name_vocab_size, emb)
    for layer in range(layers):
        width = emb if layer == 0 else hidden
        shapes[f"dec.l{layer}.W_x"] = (4 * hidden, width)
        shapes[f"dec.l{layer}.W_h"] = (4 * hidden, hidden)
        shapes[f"dec.l{layer}.b"] = (4 * hidden,)

    if config.use_attention:
        if config.attention_score == "general":
            shapes["attn.W_a"] = (hidden, enc_dim)
        shapes["attn.W_c"] = (hidden, enc_dim + hidden)
    shapes["out.W"] = (name_vocab_size, hidden)
    shapes["out.b"] = (name_vocab_size,)
    if config.use_copy:
        shapes["copy.w_ctx"] = (enc_dim,)
        shapes["copy.w_h"] = (hidden,)
        shapes["copy.w_x"] = (emb,)
        shapes["copy.b"] = (1,)
    return shapes


@dataclass
class Batch:
    """Padded arrays for a list of examples.

    ``src_ext`` holds, for every encoder position of every input in config
    order, the extended name-vocabulary id of the input sub-token: its name
    vocabulary id, or ``V + k`` for the k-th distinct out-of-vocabulary
    sub-token of the record.
    """

    examples: List[Example]
    inputs: Dict[InputKind, Tuple[np.ndarray, np.ndarray]]
    enc_mask: np.ndarray
    src_ext: Optional[np.ndarray]
    ext_size: int
    oov: List[List[str]]
    target_in: Optional[np.ndarray] = None
    target_out: Optional[np.ndarray] = None
    target_mask: Optional[np.ndarray] = None


@dataclass
class LossResult:
    """Mean per-token negative log likelihood, its gradients and the ids fed
    to the decoder at every step."""

    loss: float
    grads: Params
    decoder_inputs: np.ndarray


@dataclass
class BeamHypothesis:
    token_ids: Tuple[int, ...]
    subtokens: Tuple[str, ...]
    log_prob: float
    finished: bool = False
    emitted: Set[str] = field(default_factory=set)
    states: Optional[List[Tuple[np.ndarray, np.ndarray]]] = None

    @property
    def name(self) -> str:
        return detokenize(self.subtokens) if self.subtokens else ""


@dataclass
class _Encoded:
    enc_all: Optional[np.ndarray]
    enc_mask: np.ndarray
    init_states: List[Tuple[np.ndarray, np.ndarray]]


class NamingModel:
    """Parameters plus everything needed to turn records into names.

    Args:
        config (ModelConfig): Architecture.
        params (dict): Parameter arrays keyed by name.
        name_vocab (Vocab): Output sub-tokens.
        input_vocab (Vocab): Input sub-tokens, shared by all inputs.
        preprocessor (Preprocessor): Record to sub-token sequences.
    """

    def __init__(
        self,
        config: ModelConfig,
        params: Params,
        name_vocab: Vocab,
        input_vocab: Vocab,
        preprocessor: Optional[Preprocessor] = None,
    ) -> None:
        expected = model_shapes(config, len(input_vocab), len(name_vocab))
        actual = {name: tuple(value.shape) for name, value in params.items()}
        if actual != expected:
            missing = sorted(set(expected) ^ set(actual))
            raise ConfigError(f"parameters do not match the config: {missing[:5]}")
        self.config = config
        self.params = params
        self.name_vocab = name_vocab
        self.input_vocab = input_vocab
        self.preprocessor = preprocessor or Preprocessor(
            max_input_len=config.max_input_len
        )
        self.dtype = np.dtype(config.dtype)

    @classmethod
    def create(
        cls,
        config: ModelConfig,
        name_vocab: Vocab,
        input_vocab: Vocab,
        preprocessor: Optional[Preprocessor] = None,
        seed: int = 0,
    ) -> "NamingModel":
        """A model with freshly initialized parameters."""
        shapes = model_shapes(config, len(input_vocab), len(name_vocab))
        params = init_params(shapes, seed, config.dtype)
        return cls(config, params, name_vocab, input_vocab, preprocessor)

    # inputs

    def example(self, record: Union[LemmaRecord, Example]) -> Example:
        if isinstance(record, Example):
            return record
        return self.preprocessor.example(record, self.config.inputs)

    def fits(self, example: Example) -> bool:
        return len(example.target) + 1 <= self.config.max_decode_len

    def _ext_id(self, token: str, oov_index: Dict[str, int]) -> int:
        if token in self.name_vocab:
            return self.name_vocab.id_of(token)
        return len(self.name_vocab) + oov_index.setdefault(token, len(oov_index))

    def _batch(self, examples: Sequence[Example], with_targets: bool = True) -> Batch:
        cfg = self.config
        size = len(examples)
        vocab_size = len(self.name_vocab)

        inputs = {}
        for kind in cfg.inputs:
            sequences = [example.inputs[kind] for example in examples]
            width = max(len(sequence) for sequence in sequences)
            ids = np.full((size, width), PAD, dtype=np.int64)
            mask = np.zeros((size, width), dtype=self.dtype)
            for row, sequence in enumerate(sequences):
                ids[row, : len(sequence)] = self.input_vocab.encode(sequence)
                mask[row, : len(sequence)] = 1
            inputs[kind] = (ids, mask)
        enc_mask = np.concatenate([inputs[kind][1] for kind in cfg.inputs], axis=1)

        oov_indexes = [{} for _ in examples]  # type: List[Dict[str, int]]
        src_ext = None
        if cfg.use_copy:
            src_ext = np.full(enc_mask.shape, PAD, dtype=np.int64)
            for row, example in enumerate(examples):
                offset = 0
                for kind in cfg.inputs:
                    sequence = example.inputs[kind]
                    for position, token in enumerate(sequence):
                        src_ext[row, offset + position] = self._ext_id(
                            token, oov_indexes[row]
                        )
                    offset += inputs[kind][0].shape[1]

        batch = Batch(
            examples=list(examples),
            inputs=inputs,
            enc_mask=enc_mask,
            src_ext=src_ext,
            ext_size=vocab_size + max((len(o) for o in oov_indexes), default=0),
            oov=[list(index) for index in oov_indexes],
        )
        if with_targets:
            self._add_targets(batch, oov_indexes)
        return batch

    def _add_targets(self, batch: Batch, oov_indexes: List[Dict[str, int]]) -> None:
        vocab_size = len(self.name_vocab)
        rows = []
        for example, oov_index in zip(batch.examples, oov_indexes):
            if len(example.target) + 1 > self.config.max_decode_len:
                raise ReferenceTooLong(
                    len(example.target) + 1, self.config.max_decode_len
                )
            ids = []
            for token in example.target:
                if token in self.name_vocab:
                    ids.append(self.name_vocab.id_of(token))
                elif self.config.use_copy and token in oov_index:
                    ids.append(vocab_size + oov_index[token])
                else:
                    ids.append(UNK)
            rows.append(ids + [EOS])

        steps = max(len(row) for row in rows)
        target_out = np.full((len(rows), steps), PAD, dtype=np.int64)
        target_in = np.full((len(rows), steps), PAD, dtype=np.int64)
        target_mask = np.zeros((len(rows), steps), dtype=self.dtype)
        for i, row in enumerate(rows):
            target_out[i, : len(row)] = row
            target_in[i, 0] = BOS
            target_in[i, 1 : len(row)] = [
                t if t < vocab_size else UNK for t in row[:-1]
            ]
            target_mask[i, : len(row)] = 1
        batch.target_in = target_in
        batch.target_out = target_out
        batch.target_mask = target_mask

    # forward

    def _score_matrix(self) -> np.ndarray:
        if self.config.attention_score == "general":
            return self.params["attn.W_a"]
        hidden = self.config.hidden_units
        return dot_score_matrix(hidden, 2 * hidden, self.dtype)

    def _encode(self, batch: Batch, rng: Optional[np.random.Generator] = None):
        cfg, p = self.config, self.params
        table = p["src_embedding"]
        states = []
        finals = []
        caches = []
        for kind in cfg.inputs:
            ids, mask = batch.inputs[kind]
            out, kind_finals, cache = encoder_forward(
                table[ids],
                mask,
                p,
                f"enc.{kind.value}",
                cfg.num_layers,
                cfg.dropout,
                rng,
            )
            states.append(out)
            finals.append(kind_finals)
            caches.append(cache)

        init_states = []
        fuse_caches = []
        for layer in range(cfg.num_layers):
            state, cache = fuse_forward(
                [kind_finals[layer] for kind_finals in finals], p, f"fuse.l{layer}"
            )
            init_states.append(state)
            fuse_caches.append(cache)

        enc_all = np.concatenate(states, axis=1) if cfg.use_attention else None
        encoded = _Encoded(enc_all, batch.enc_mask, init_states)
        return encoded, (caches, fuse_caches, [s.shape[1] for s in states])

    def _step(self, x_ids, states, enc_all, enc_mask, src_ext, ext_size, rng=None):
        """One decoder step for a batch of previous ids."""
        cfg, p = self.config, self.params
        x = p["tgt_embedding"][x_ids]
        inputs = x
        new_states = []
        layer_caches = []
        for layer, (h, c) in enumerate(states):
            drop = None
            if layer > 0 and rng is not None and cfg.dropout > 0:
                drop = dropout_mask(rng, inputs.shape, cfg.dropout, inputs.dtype)
                inputs = inputs * drop
            prefix = f"dec.l{layer}"
            h, c, cache = lstm_step_forward(
                inputs, h, c, p[f"{prefix}.W_x"], p[f"{prefix}.W_h"], p[f"{prefix}.b"]
            )
            new_states.append((h, c))
            layer_caches.append((drop, cache))
            inputs = h
        top = inputs

        context = weights = attn_cache = state_cache = gate_cache = None
        state = top
        if cfg.use_attention:
            context, weights, attn_cache = attention_forward(
                top, enc_all, enc_mask, self._score_matrix()
            )
            state, state_cache = attentional_forward(context, top, p["attn.W_c"])
        logits = affine_forward(state, p["out.W"], p["out.b"])

        p_gen = None
        if cfg.use_copy:
            p_gen, gate_cache = copy_gate_forward(context, top, x, p)
        probs, mix_cache = copy_distribution(logits, p_gen, weights, src_ext, ext_size)
        cache = (
            x_ids,
            layer_caches,
            attn_cache,
            state,
            state_cache,
            gate_cache,
            mix_cache,
        )
        return probs, new_states, cache

    def _step_backward(self, dprobs, dstates_next, cache, grads: Params):
        cfg, p = self.config, self.params
        (x_ids, layer_caches, attn_cache, state) = cache[:4]
        state_cache, gate_cache, mix_cache = cache[4:]

        dlogits, dp_gen, dweights = copy_distribution_backward(dprobs, mix_cache)
        dstate, dW, db = affine_backward(dlogits, state, p["out.W"])
        grads["out.W"] += dW
        grads["out.b"] += db

        dx = np.zeros((len(x_ids), cfg.embedding_dim), dtype=dstate.dtype)
        dtop = np.zeros_like(dstate)
        denc = None
        dcontext = 0.0
        if cfg.use_copy:
            dcontext, dh_gate, dx_gate, gate_grads = copy_gate_backward(
                dp_gen, gate_cache, p
            )
            accumulate(grads, gate_grads)
            dtop += dh_gate
            dx += dx_gate
        if cfg.use_attention:
            dctx_state, dh_state, dW_c = attentional_backward(
                dstate, state_cache, p["attn.W_c"]
            )
            grads["attn.W_c"] += dW_c
            dh_attn, denc, dW_a = attention_backward(
                dcontext + dctx_state, dweights, attn_cache, self._score_matrix()
            )
            if cfg.attention_score == "general":
                grads["attn.W_a"] += dW_a
            dtop += dh_state + dh_attn
        else:
            dtop += dstate

        dstates_prev = [None] * len(layer_caches)
        from_above = dtop
        for layer in reversed(range(len(layer_caches))):
            drop, layer_cache = layer_caches[layer]
            prefix = f"dec.l{layer}"
            dh_next, dc_next = dstates_next[layer]
            dinputs, dh_prev, dc_prev, (dW_x, dW_h, db) = lstm_step_backward(
                dh_next + from_above,
                dc_next,
                layer_cache,
                p[f"{prefix}.W_x"],
                p[f"{prefix}.W_h"],
            )
            grads[f"{prefix}.W_x"] += dW_x
            grads[f"{prefix}.W_h"] += dW_h
            grads[f"{prefix}.b"] += db
            if drop is not None:
                dinputs = dinputs * drop
            dstates_prev[layer] = (dh_prev, dc_prev)
            from_above = dinputs
        dx += from_above
        np.add.at(grads["tgt_embedding"], x_ids, dx)
        return dstates_prev, denc

    def loss_and_grads(
        self,
        examples: Sequence[Union[LemmaRecord, Example]],
        rng: Optional[np.random.Generator] = None,
    ) -> LossResult:
        """Loss of the reference names fed as decoder inputs, and its gradients.

        Step t of the decoder reads reference sub-token t - 1 (BOS at step 0).
        Dropout is applied only when ``rng`` is given.

        Raises:
            ReferenceTooLong: A reference does not fit ``max_decode_len``.
        """
        cfg, p = self.config, self.params
        batch = self._batch([self.example(e) for e in examples])
        encoded, enc_cache = self._encode(batch, rng)
        tiny = np.finfo(self.dtype).tiny
        n_tokens = float(batch.target_mask.sum())
        rows = np.arange(len(batch.examples))

        states = encoded.init_states
        step_caches = []
        step_probs = []
        loss = 0.0
        for t in range(batch.target_in.shape[1]):
            probs, states, cache = self._step(
                batch.target_in[:, t],
                states,
                encoded.enc_all,
                encoded.enc_mask,
                batch.src_ext,
                batch.ext_size,
                rng,
            )
            target_probs = np.maximum(probs[rows, batch.target_out[:, t]], tiny)
            loss -= float(np.sum(np.log(target_probs) * batch.target_mask[:, t]))
            step_caches.append(cache)
            step_probs.append(probs[rows, batch.target_out[:, t]])

        grads = zeros_like_params(p)
        dstates = [(np.zeros_like(h), np.zeros_like(c)) for h, c in states]
        denc_all = None
        for t in reversed(range(len(step_caches))):
            target_probs = step_probs[t]
            weights = batch.target_mask[:, t] / n_tokens
            dprobs = np.zeros((len(rows), batch.ext_size), dtype=self.dtype)
            safe = target_probs > tiny
            dprobs[rows[safe], batch.target_out[safe, t]] = (
                -weights[safe] / target_probs[safe]
            )
            dstates, denc = self._step_backward(dprobs, dstates, step_caches[t], grads)
            if denc is not None:
                denc_all = denc if denc_all is None else denc_all + denc

        self._encode_backward(batch, dstates, denc_all, enc_cache, grads)
        return LossResult(loss / n_tokens, grads, batch.target_in.copy())

    def _encode_backward(self, batch, dinit_states, denc_all, enc_cache, grads):
        cfg, p = self.config, self.params
        caches, fuse_caches, widths = enc_cache
        dfinals = [[] for _ in cfg.inputs]
        for layer in range(cfg.num_layers):
            dh, dc = dinit_states[layer]
            layer_finals, fuse_grads = fuse_backward(
                dh, dc, fuse_caches[layer], p, f"fuse.l{layer}"
            )
            accumulate(grads, fuse_grads)
            for index, final in enumerate(layer_finals):
                dfinals[index].append(final)

        offset = 0
        for index, kind in enumerate(cfg.inputs):
            ids, _ = batch.inputs[kind]
            width = widths[index]
            if denc_all is None:
                dout = np.zeros(
                    (ids.shape[0], width, 2 * cfg.hidden_units), dtype=self.dtype
                )
            else:
                dout = denc_all[:, offset : offset + width]
            offset += width
            dxs, enc_grads = encoder_backward(
                dout, dfinals[index], caches[index], p, f"enc.{kind.value}"
            )
            accumulate(grads, enc_grads)
            np.add.at(
                grads["src_embedding"],
                ids.reshape(-1),
                dxs.reshape(-1, dxs.shape[2]),
            )

    def forward_loss(self, record: Union[LemmaRecord, Example]) -> float:
        """Mean per-step negative log likelihood of the record's name."""
        return self.loss_and_grads([record]).loss

    # decoding

    def _ext_texts(self, oov: List[str]) -> List[str]:
        return self.name_vocab.texts + oov

    def _start(self, record):
        example = self.example(record)
        batch = self._batch([example], with_targets=False)
        encoded, _ = self._encode(batch)
        return batch, encoded

    def next_token_distribution(
        self, record: Union[LemmaRecord, Example], prefix: Sequence[str] = ()
    ) -> Tuple[np.ndarray, List[str]]:
        """Output distribution after feeding BOS and ``prefix``.

        Returns:
            tuple: probabilities over the extended vocabulary and the
            sub-token text of every extended id.
        """
        batch, encoded = self._start(record)
        texts = self._ext_texts(batch.oov[0])
        index = {text: i for i, text in enumerate(texts)}
        ids = [BOS] + [index.get(token, UNK) for token in prefix]
        vocab_size = len(self.name_vocab)

        states = encoded.init_states
        probs = None
        for previous in ids:
            x_ids = np.array([previous if previous < vocab_size else UNK])
            probs, states, _ = self._step(
                x_ids,
                states,
                encoded.enc_all,
                encoded.enc_mask,
                batch.src_ext,
                batch.ext_size,
            )
        return probs[0], texts

    def beam_search(
        self,
        record: Union[LemmaRecord, Example],
        beam_size: Optional[int] = None,
        top_k: Optional[int] = None,
    ) -> List[BeamHypothesis]:
        """Beam search over sub-tokens under the repetition ban.

        A sub-token other than ``_`` never occurs twice in a hypothesis and
        PAD, BOS and UNK are never produced. EOS is always available, so at
        least one hypothesis comes back; EOS first yields the empty name.
        Every step keeps the ``beam_size`` best expansions; those ending
        in EOS leave the beam as finished hypotheses. Results are ranked by
        total log probability (mean per token with length normalization),
        ties broken by the lexicographically smaller id sequence.
        """
        cfg = self.config
        beam_size = beam_size or cfg.beam_size
        top_k = min(top_k or beam_size, beam_size)
        batch, encoded = self._start(record)
        vocab_size = len(self.name_vocab)
        texts = self._ext_texts(batch.oov[0])
        ids_of_text = {text: i for i, text in enumerate(texts)}

        initial = [(h[0], c[0]) for h, c in encoded.init_states]
        live = [BeamHypothesis((), (), 0.0, states=initial)]
        finished = []  # type: List[BeamHypothesis]
        for step in range(cfg.max_decode_len):
            count = len(live)
            previous = np.array(
                [h.token_ids[-1] if h.token_ids else BOS for h in live], dtype=np.int64
            )
            previous[previous >= vocab_size] = UNK
            states = [
                (
                    np.stack([h.states[layer][0] for h in live]),
                    np.stack([h.states[layer][1] for h in live]),
                )
                for layer in range(cfg.num_layers)
            ]
            enc_all = (
                np.repeat(encoded.enc_all, count, axis=0)
                if encoded.enc_all is not None
                else None
            )
            src_ext = (
                np.repeat(batch.src_ext, count, axis=0)
                if batch.src_ext is not None
                else None
            )
            probs, new_states, _ = self._step(
                previous,
                states,
                enc_all,
                np.repeat(encoded.enc_mask, count, axis=0),
                src_ext,
                batch.ext_size,
            )

            with np.errstate(divide="ignore"):
                log_probs = np.log(probs.astype(np.float64))
            log_probs[:, EOS] = np.log(
                np.maximum(probs[:, EOS].astype(np.float64), np.finfo(np.float64).tiny)
            )
            log_probs[:, list(_BANNED_IDS)] = -np.inf
            for row, hypothesis in enumerate(live):
                banned = [ids_of_text[text] for text in hypothesis.emitted]
                log_probs[row, banned] = -np.inf

            scores = np.array([h.log_prob for h in live])[:, None] + log_probs
            flat = scores.reshape(-1)
            order = np.lexsort((np.arange(flat.size), -flat))
            shortlist = [i for i in order[:beam_size] if np.isfinite(flat[i])]
            candidates = sorted(
                shortlist,
                key=lambda i: (
                    -flat[i],
                    live[i // scores.shape[1]].token_ids + (i % scores.shape[1],),
                ),
            )

            next_live = []
            for flat_index in candidates:
                row, token = divmod(int(flat_index), scores.shape[1])
                parent = live[row]
                token_ids = parent.token_ids + (token,)
                score = float(flat[flat_index])
                if token == EOS:
                    finished.append(
                        BeamHypothesis(token_ids, parent.subtokens, score, True)
                    )
                    continue
                text = texts[token]
                emitted = set(parent.emitted)
                if text != UNDERSCORE:
                    emitted.add(text)
                next_live.append(
                    BeamHypothesis(
                        token_ids,
                        parent.subtokens + (text,),
                        score,
                        False,
                        emitted,
                        [(h[row], c[row]) for h, c in new_states],
                    )
                )
            live = next_live
            if not live or self._done(finished, live, beam_size):
                break

        ranked = sorted(finished, key=self._rank_key)
        if len(ranked) < top_k:
            extra = sorted(live, key=self._rank_key)[: top_k - len(ranked)]
            ranked = sorted(ranked + extra, key=self._rank_key)
        for hypothesis in ranked:
            hypothesis.states = None
        logger.debug("beam search: %d finished, %d live", len(finished), len(live))
        return ranked[:top_k]

    def _rank_score(self, hypothesis: BeamHypothesis) -> float:
        if self.config.length_normalize and hypothesis.token_ids:
            return hypothesis.log_prob / len(hypothesis.token_ids)
        return hypothesis.log_prob

    def _rank_key(self, hypothesis: BeamHypothesis):
        return (-self._rank_score(hypothesis), hypothesis.token_ids)

    def _done(self, finished, live, beam_size: int) -> bool:
        if len(finished) < beam_size or self.config.length_normalize:
            return False
        kth_best = sorted((h.log_prob for h in finished), reverse=True)[beam_size - 1]
        return max(h.log_prob for h in live) <= kth_best

    def suggest(
        self, record: Union[LemmaRecord, Example], k: int = 5
    ) -> List[Tuple[str, float]]:
        """Up to ``k`` distinct names with their log probabilities, best first."""
        hypotheses = self.beam_search(record, beam_size=max(k, self.config.beam_size))
        suggestions = []
        seen = set()
        for hypothesis in hypotheses:
            if hypothesis.name in seen:
                continue
            seen.add(hypothesis.name)
            suggestions.append((hypothesis.name, hypothesis.log_prob))
        return suggestions[:k]


class ModelLossLayer(CheckedLayer):
    """Adapter exposing the full reference-fed loss to gradient checking."""

    def __init__(self, model: NamingModel, examples: Sequence[Example]) -> None:
        self.model = model
        self.examples = list(examples)
        self.params = model.params

    def forward(self, inputs):
        result = self.model.loss_and_grads(self.examples)
        return np.array(result.loss), result.grads

    def backward(self, dout, cache):
        return {}, {name: float(dout) * grad for name, grad in cache.items()}
