"""Checkpoint files.

A checkpoint is one line of JSON header, a newline, then every parameter
as little-endian 32-bit floats in header order, cast back to the model
dtype on load. The header carries the model config, the parameter names
and shapes, both vocabularies, the lexicon and the trimming used for the
inputs, so a checkpoint alone reproduces suggestions.
"""

import json
from pathlib import Path
from typing import Optional, Tuple, Union
import numpy as np
from .config import ModelConfig
from .constants import CHECKPOINT_VERSION
from .errors import CheckpointMismatch, ConfigError
from .features import Preprocessor
from .model import NamingModel, model_shapes
from .subtokenizer import Lexicon
from .trimming import TrimConfig
from .utils import _read_bytes
from .vocab import Vocab

_WIRE_DTYPE = np.dtype("<f4")


def _header(model: NamingModel, seed: Optional[int], step: Optional[int]) -> dict:
    preprocessor = model.preprocessor
    return {
        "version": CHECKPOINT_VERSION,
        "config": model.config.to_dict(),
        "names": list(model.params),
        "shapes": [list(value.shape) for value in model.params.values()],
        "dtype": model.config.dtype,
        "seed": seed,
        "step": step,
        "name_vocab": model.name_vocab.to_json(),
        "input_vocab": model.input_vocab.to_json(),
        "lexicon": preprocessor.lexicon.to_dict(),
        "trim": preprocessor.trim_config.to_dict(),
        "max_input_len": preprocessor.max_input_len,
    }


def dumps_checkpoint(
    model: NamingModel, seed: Optional[int] = None, step: Optional[int] = None
) -> bytes:
    header = json.dumps(_header(model, seed, step), sort_keys=True)
    body = b"".join(
        np.ascontiguousarray(value, dtype=_WIRE_DTYPE).tobytes()
        for value in model.params.values()
    )
    return header.encode("utf-8") + b"\n" + body


def save_checkpoint(
    model: NamingModel,
    path: Union[str, Path],
    seed: Optional[int] = None,
    step: Optional[int] = None,
) -> Path:
    """Write ``model`` to ``path``; equal parameters give identical bytes."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(dumps_checkpoint(model, seed, step))
    return path


def loads_checkpoint(data: bytes) -> Tuple[NamingModel, dict]:
    """Model and header of a serialized checkpoint.

    Raises:
        CheckpointMismatch: Unknown version, or a header that disagrees with
            the stored parameters or with the architecture it names.
    """
    newline = data.find(b"\n")
    if newline < 0:
        raise CheckpointMismatch("checkpoint has no header line")
    try:
        header = json.loads(data[:newline].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointMismatch(f"unreadable checkpoint header: {e}")
    if header.get("version") != CHECKPOINT_VERSION:
        raise CheckpointMismatch(
            f"checkpoint version {header.get('version')}, expected {CHECKPOINT_VERSION}"
        )

    try:
        config = ModelConfig.from_dict(header["config"])
        preprocessor = Preprocessor(
            lexicon=Lexicon.from_dict(header["lexicon"]),
            trim_config=TrimConfig.from_dict(header["trim"]),
            max_input_len=header["max_input_len"],
        )
        name_vocab = Vocab.from_json(header["name_vocab"])
        input_vocab = Vocab.from_json(header["input_vocab"])
        names, shapes = header["names"], [tuple(s) for s in header["shapes"]]
    except (KeyError, TypeError, ConfigError) as e:
        raise CheckpointMismatch(f"invalid checkpoint header: {e}")

    expected = model_shapes(config, len(input_vocab), len(name_vocab))
    if dict(zip(names, shapes)) != expected or len(names) != len(expected):
        raise CheckpointMismatch("parameter shapes do not match the stored config")

    body = data[newline + 1 :]
    total = sum(int(np.prod(shape)) for shape in shapes) * _WIRE_DTYPE.itemsize
    if len(body) != total:
        raise CheckpointMismatch(f"expected {total} bytes of parameters, got {len(body)}")

    values = np.frombuffer(body, dtype=_WIRE_DTYPE)
    params = {}
    offset = 0
    for name, shape in zip(names, shapes):
        size = int(np.prod(shape))
        chunk = values[offset : offset + size].reshape(shape)
        params[name] = chunk.astype(config.dtype)
        offset += size
    model = NamingModel(config, params, name_vocab, input_vocab, preprocessor)
    return model, header


def load_checkpoint(source: Union[str, Path]) -> Tuple[NamingModel, dict]:
    """Read a checkpoint from a path or an http(s) URL."""
    return loads_checkpoint(_read_bytes(source))
