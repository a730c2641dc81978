"""Mini-batch Adam training with validation checkpoints and early stopping."""

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union
import numpy as np
from .checkpoint import save_checkpoint
from .config import ModelConfig, TrainConfig
from .corpus import LemmaRecord
from .errors import ConfigMismatch, EmptyTrainSet, NonFiniteValue
from .features import Example
from .model import NamingModel
from .nnet import Params

logger = logging.getLogger(__name__)


class Adam:
    """Adam with bias correction, updating parameters in place.

    Args:
        params (dict): Parameters to optimize.
        learning_rate (float): Step size.
    """

    def __init__(
        self,
        params: Params,
        learning_rate: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        epsilon: float = 1e-8,
    ) -> None:
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.t = 0
        self.m = {name: np.zeros_like(value) for name, value in params.items()}
        self.v = {name: np.zeros_like(value) for name, value in params.items()}

    def step(self, params: Params, grads: Params) -> None:
        self.t += 1
        correction1 = 1 - self.beta1**self.t
        correction2 = 1 - self.beta2**self.t
        for name, grad in grads.items():
            m, v = self.m[name], self.v[name]
            m *= self.beta1
            m += (1 - self.beta1) * grad
            v *= self.beta2
            v += (1 - self.beta2) * grad * grad
            update = (m / correction1) / (np.sqrt(v / correction2) + self.epsilon)
            params[name] -= (self.learning_rate * update).astype(params[name].dtype)


def clip_gradients(grads: Params, max_norm: float) -> float:
    """Scale ``grads`` in place to a global L2 norm of at most ``max_norm``.

    Returns:
        float: The norm before clipping.

    Raises:
        NonFiniteValue: The norm is NaN or infinite.
    """
    squares = (float(np.sum(g.astype(np.float64) ** 2)) for g in grads.values())
    norm = math.sqrt(sum(squares))
    if not math.isfinite(norm):
        raise NonFiniteValue("non-finite gradient norm")
    if max_norm > 0 and norm > max_norm:
        scale = max_norm / norm
        for grad in grads.values():
            grad *= scale
    return norm


class EarlyStopping:
    """Tracks validation losses at checkpoints.

    Training stops once ``patience`` consecutive checkpoints fail to improve
    on the best loss so far; the best checkpoint is the one to keep.
    """

    def __init__(self, patience: int) -> None:
        self.patience = patience
        self.best_loss = math.inf
        self.best_index = None  # type: Optional[int]
        self.bad_checkpoints = 0
        self.history = []  # type: List[float]

    def update(self, loss: float) -> bool:
        """Record a checkpoint's validation loss; True when it is the new best."""
        self.history.append(loss)
        if loss < self.best_loss:
            self.best_loss = loss
            self.best_index = len(self.history)
            self.bad_checkpoints = 0
            return True
        self.bad_checkpoints += 1
        return False

    @property
    def should_stop(self) -> bool:
        return self.bad_checkpoints >= self.patience


def simulate_early_stopping(
    val_losses: Sequence[float], patience: int, checkpoint_interval: int
) -> Tuple[int, int]:
    """Step at which training stops and step of the checkpoint returned."""
    stopper = EarlyStopping(patience)
    stop_step = 0
    for index, loss in enumerate(val_losses, start=1):
        stopper.update(loss)
        stop_step = index * checkpoint_interval
        if stopper.should_stop:
            break
    return stop_step, (stopper.best_index or 0) * checkpoint_interval


@dataclass
class TrainResult:
    """Outcome of a training run.

    Args:
        model (NamingModel): The model, holding the best-validation parameters.
        log (list of dict): One entry per checkpoint.
        steps (int): Optimizer steps taken.
        best_step (int): Step of the returned parameters.
        stopped_early (bool): Patience ran out before ``max_steps``.
    """

    model: NamingModel
    log: List[dict] = field(default_factory=list)
    steps: int = 0
    best_step: int = 0
    stopped_early: bool = False


def _examples(model: NamingModel, records: Sequence[LemmaRecord]) -> List[Example]:
    examples = []
    for record in records:
        example = model.example(record)
        if not model.fits(example):
            logger.warning(
                "skipping %s: %d name sub-tokens exceed max_decode_len %d",
                record.qualified_name,
                len(example.target),
                model.config.max_decode_len,
            )
            continue
        examples.append(example)
    return examples


def evaluate_loss(
    model: NamingModel, examples: Sequence[Example], batch_size: int
) -> float:
    """Token-weighted mean loss over ``examples``, without dropout."""
    total = 0.0
    tokens = 0
    for start in range(0, len(examples), batch_size):
        batch = examples[start : start + batch_size]
        count = sum(len(example.target) + 1 for example in batch)
        total += model.loss_and_grads(batch).loss * count
        tokens += count
    return total / tokens


def _copy_params(params: Params) -> Params:
    return {name: value.copy() for name, value in params.items()}


def train(
    model: NamingModel,
    train_records: Sequence[LemmaRecord],
    val_records: Sequence[LemmaRecord] = (),
    config: Optional[TrainConfig] = None,
    log_path: Optional[Union[str, Path]] = None,
    checkpoint_dir: Optional[Union[str, Path]] = None,
) -> TrainResult:
    """Train ``model`` in place.

    Every ``checkpoint_interval`` steps the validation loss is computed; the
    parameters of the best checkpoint are restored at the end. Without
    validation records the final parameters are kept.

    Args:
        model (NamingModel): Model to train.
        train_records (list of LemmaRecord): Training data.
        val_records (list of LemmaRecord): Validation data.
        config (TrainConfig): Optimization recipe.
        log_path (str): Where to write the JSON-lines training log.
        checkpoint_dir (str): Where to save a checkpoint on every improvement.

    Raises:
        EmptyTrainSet: No usable training record.
    """
    config = config or TrainConfig()
    examples = _examples(model, train_records)
    if not examples:
        raise EmptyTrainSet("no training record fits the model")
    val_examples = _examples(model, val_records)

    rng = np.random.default_rng(config.seed)
    dropout_rng = np.random.default_rng([config.seed, 1])
    optimizer = Adam(model.params, config.learning_rate)
    stopper = EarlyStopping(config.early_stop_patience)
    result = TrainResult(model)
    best_params = None  # type: Optional[Params]

    log_file = None
    if log_path is not None:
        Path(log_path).parent.mkdir(parents=True, exist_ok=True)
        log_file = open(log_path, "w", encoding="utf-8")

    order = []  # type: List[int]
    losses = []  # type: List[float]
    try:
        for step in range(1, config.max_steps + 1):
            if len(order) < config.batch_size:
                order += list(rng.permutation(len(examples)))
            batch = [examples[i] for i in order[: config.batch_size]]
            del order[: config.batch_size]

            loss_result = model.loss_and_grads(batch, rng=dropout_rng)
            clip_gradients(loss_result.grads, config.max_grad_norm)
            optimizer.step(model.params, loss_result.grads)
            losses.append(loss_result.loss)
            result.steps = step

            if step % config.checkpoint_interval and step != config.max_steps:
                continue
            entry = {"step": step, "train_loss": float(np.mean(losses))}
            losses = []
            if val_examples:
                val_loss = evaluate_loss(model, val_examples, config.batch_size)
                entry["val_loss"] = val_loss
                if stopper.update(val_loss):
                    best_params = _copy_params(model.params)
                    result.best_step = step
                    if checkpoint_dir is not None:
                        path = Path(checkpoint_dir) / f"step-{step}.ckpt"
                        save_checkpoint(model, path, seed=config.seed, step=step)
                        entry["checkpoint_path"] = str(path)
            logger.info(
                "step %d train_loss %.4f val_loss %s",
                step,
                entry["train_loss"],
                f"{entry['val_loss']:.4f}" if "val_loss" in entry else "-",
            )
            result.log.append(entry)
            if log_file is not None:
                log_file.write(json.dumps(entry, sort_keys=True) + "\n")
            if stopper.should_stop:
                logger.info(
                    "early stop at step %d, best step %d", step, result.best_step
                )
                result.stopped_early = True
                break
    finally:
        if log_file is not None:
            log_file.close()

    if best_params is not None:
        model.params.update(best_params)
    else:
        result.best_step = result.steps
    return result


_ARCHITECTURE_FIELDS = (
    "inputs",
    "embedding_dim",
    "hidden_units",
    "num_layers",
    "use_attention",
    "use_copy",
    "attention_score",
)


def _architecture(config: ModelConfig) -> Dict[str, object]:
    return {name: getattr(config, name) for name in _ARCHITECTURE_FIELDS}


def fine_tune(
    model: NamingModel,
    train_records: Sequence[LemmaRecord],
    val_records: Sequence[LemmaRecord] = (),
    config: Optional[TrainConfig] = None,
    expected: Optional[ModelConfig] = None,
    **kwargs,
) -> TrainResult:
    """Continue training a loaded model on new data with the same recipe.

    The vocabularies stay fixed: new sub-tokens are read as UNK and can
    still be produced by copying when the model copies.

    Raises:
        ConfigMismatch: ``expected`` describes another architecture.
    """
    if expected is not None and _architecture(expected) != _architecture(model.config):
        raise ConfigMismatch(
            f"checkpoint is {model.config.name}, fine-tuning asked for {expected.name}"
        )
    config = config or TrainConfig()
    if config.max_steps == 0:
        return TrainResult(model)
    return train(model, train_records, val_records, config, **kwargs)
