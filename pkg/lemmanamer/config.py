"""Model and training configuration, model names and run config files.

Model names compose the inputs, then the optional mechanisms, with ``+``:
``ln-s+bsexpl1+attn+copy`` reads statement and trimmed k-tree inputs, with
attention and copy. The ``ln-`` prefix is optional.
"""

import itertools
import sys
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Dict, Iterator, Optional, Sequence, Tuple, Union
from .constants import (
    BATCH_SIZE,
    BEAM_SIZE,
    CHECKPOINT_INTERVAL,
    DROPOUT,
    EARLY_STOP_PATIENCE,
    EMBEDDING_DIMS,
    HIDDEN_UNITS,
    LEARNING_RATE,
    MAX_DECODE_LEN,
    MAX_GRAD_NORM,
    MAX_INPUT_LEN,
    MAX_STEPS,
    NUM_LAYERS,
)
from .errors import ConfigError, InvalidModelName
from .features import InputKind
from .utils import _default_seed, _read_text

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

MODEL_NAME_PREFIX = "ln-"
ATTENTION = "attn"
COPY = "copy"
ATTENTION_SCORES = ("general", "dot")
DTYPES = ("float32", "float64")
RUN_CONFIG_TABLES = ("model", "train", "trim", "preprocess")


def parse_model_name(name: str) -> Tuple[Tuple[InputKind, ...], bool, bool]:
    """Inputs, attention flag and copy flag of a model name.

    Raises:
        InvalidModelName: Unknown part, no input, repeated part, parts out
            of order, or copy without attention.
    """
    body = name
    if name.startswith(MODEL_NAME_PREFIX):
        body = name[len(MODEL_NAME_PREFIX) :]
    parts = body.split("+")
    kinds = {kind.value: kind for kind in InputKind}

    inputs = []
    use_attention = use_copy = False
    for part in parts:
        if part in kinds:
            if use_attention or use_copy:
                raise InvalidModelName(name, f"input {part!r} after a mechanism")
            if kinds[part] in inputs:
                raise InvalidModelName(name, f"input {part!r} repeated")
            inputs.append(kinds[part])
        elif part == ATTENTION:
            if use_attention or use_copy:
                raise InvalidModelName(name, "misplaced 'attn'")
            use_attention = True
        elif part == COPY:
            if use_copy:
                raise InvalidModelName(name, "'copy' repeated")
            use_copy = True
        else:
            raise InvalidModelName(name, f"unknown part {part!r}")

    if not inputs:
        raise InvalidModelName(name, "no input")
    if use_copy and not use_attention:
        raise InvalidModelName(name, "'copy' requires 'attn'")
    return tuple(inputs), use_attention, use_copy


@dataclass(frozen=True)
class ModelConfig:
    """Architecture and decoding hyperparameters.

    Args:
        inputs (tuple of InputKind): Encoders, one per input.
        embedding_dim (int): Token embedding size.
        hidden_units (int): Hidden size of each LSTM direction and of the decoder.
        num_layers (int): Stacked LSTM layers in encoders and decoder.
        dropout (float): Rate between stacked layers while training.
        use_attention (bool): Attend over all encoder positions.
        use_copy (bool): Mix copying from the inputs into the output.
        beam_size (int): Beam width.
        max_decode_len (int): Longest sub-token sequence decoded, EOS included.
        attention_score (str): ``general`` (bilinear) or ``dot``.
        length_normalize (bool): Rank finished beams by mean log probability.
        max_input_len (int): Input sequences are truncated to this length.
        dtype (str): Parameter dtype.
    """

    inputs: Tuple[InputKind, ...]
    embedding_dim: int = EMBEDDING_DIMS[0]
    hidden_units: int = HIDDEN_UNITS[0]
    num_layers: int = NUM_LAYERS[0]
    dropout: float = DROPOUT
    use_attention: bool = False
    use_copy: bool = False
    beam_size: int = BEAM_SIZE
    max_decode_len: int = MAX_DECODE_LEN
    attention_score: str = "general"
    length_normalize: bool = False
    max_input_len: int = MAX_INPUT_LEN
    dtype: str = "float32"

    def __post_init__(self) -> None:
        inputs = tuple(InputKind(kind) for kind in self.inputs)
        object.__setattr__(self, "inputs", inputs)
        if not inputs:
            raise ConfigError("a model needs at least one input")
        if len(set(inputs)) != len(inputs):
            raise ConfigError("model inputs must be distinct")
        if self.use_copy and not self.use_attention:
            raise ConfigError("the copy mechanism requires attention")
        for name in (
            "embedding_dim",
            "hidden_units",
            "num_layers",
            "beam_size",
            "max_decode_len",
            "max_input_len",
        ):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0 <= self.dropout < 1:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.attention_score not in ATTENTION_SCORES:
            raise ConfigError(f"unknown attention score {self.attention_score!r}")
        if self.dtype not in DTYPES:
            raise ConfigError(f"unsupported dtype {self.dtype!r}")

    @classmethod
    def from_name(cls, name: str, **overrides) -> "ModelConfig":
        inputs, use_attention, use_copy = parse_model_name(name)
        return cls(
            inputs=inputs, use_attention=use_attention, use_copy=use_copy, **overrides
        )

    @property
    def name(self) -> str:
        return model_name(self)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["inputs"] = [kind.value for kind in self.inputs]
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        values = dict(data)
        name = values.pop("name", None)
        _check_keys(cls, values, "model")
        if name is not None:
            inputs, use_attention, use_copy = parse_model_name(name)
            values.update(
                inputs=inputs, use_attention=use_attention, use_copy=use_copy
            )
        if "inputs" not in values:
            raise ConfigError("model config needs 'name' or 'inputs'")
        try:
            return cls(**values)
        except ValueError as e:
            raise ConfigError(f"invalid model config: {e}")


def model_name(config: ModelConfig) -> str:
    parts = [kind.value for kind in config.inputs]
    if config.use_attention:
        parts.append(ATTENTION)
    if config.use_copy:
        parts.append(COPY)
    return MODEL_NAME_PREFIX + "+".join(parts)


def iter_grid(
    inputs: Sequence[InputKind],
    use_attention: bool,
    use_copy: bool,
    **overrides,
) -> Iterator[ModelConfig]:
    """Every embedding size, hidden size and depth of the search space."""
    for embedding_dim, hidden_units, num_layers in itertools.product(
        EMBEDDING_DIMS, HIDDEN_UNITS, NUM_LAYERS
    ):
        yield ModelConfig(
            inputs=tuple(inputs),
            embedding_dim=embedding_dim,
            hidden_units=hidden_units,
            num_layers=num_layers,
            use_attention=use_attention,
            use_copy=use_copy,
            **overrides,
        )


@dataclass(frozen=True)
class TrainConfig:
    """Optimization recipe.

    Args:
        learning_rate (float): Adam step size.
        checkpoint_interval (int): Steps between validation checkpoints.
        early_stop_patience (int): Checkpoints without improvement before stopping.
        max_steps (int): Hard limit on optimizer steps.
        batch_size (int): Records per step.
        seed (int): Shuffling and dropout seed; resolved from the
            environment when None.
        max_grad_norm (float): Global gradient norm clip, 0 disables clipping.
    """

    learning_rate: float = LEARNING_RATE
    checkpoint_interval: int = CHECKPOINT_INTERVAL
    early_stop_patience: int = EARLY_STOP_PATIENCE
    max_steps: int = MAX_STEPS
    batch_size: int = BATCH_SIZE
    seed: Optional[int] = None
    max_grad_norm: float = MAX_GRAD_NORM

    def __post_init__(self) -> None:
        object.__setattr__(self, "seed", _default_seed(self.seed))
        if self.learning_rate <= 0:
            raise ConfigError(
                f"learning_rate must be positive, got {self.learning_rate}"
            )
        if self.early_stop_patience < 1:
            raise ConfigError("early_stop_patience must be >= 1")
        if self.checkpoint_interval < 1 or self.batch_size < 1:
            raise ConfigError("checkpoint_interval and batch_size must be >= 1")
        if self.max_steps < 0 or self.max_grad_norm < 0:
            raise ConfigError("max_steps and max_grad_norm must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        _check_keys(cls, data, "train")
        return cls(**data)

    def with_overrides(self, **values) -> "TrainConfig":
        return replace(self, **{k: v for k, v in values.items() if v is not None})


def _check_keys(cls, data: dict, table: str) -> None:
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown [{table}] options: {sorted(unknown)}")


def load_run_config(source: Union[str, Path]) -> Dict[str, dict]:
    """Read a TOML run configuration with optional tables
    ``[model]``, ``[train]``, ``[trim]`` and ``[preprocess]``."""
    try:
        data = tomllib.loads(_read_text(source))
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"invalid run config {source}: {e}")
    unknown = set(data) - set(RUN_CONFIG_TABLES)
    if unknown:
        raise ConfigError(f"unknown run config tables: {sorted(unknown)}")
    return {table: dict(data.get(table, {})) for table in RUN_CONFIG_TABLES}
