import json
import numpy as np
import pytest
from conftest import make_record
from lemmanamer.checkpoint import (
    dumps_checkpoint,
    load_checkpoint,
    loads_checkpoint,
    save_checkpoint,
)
from lemmanamer.errors import CheckpointMismatch


@pytest.fixture
def model(tiny_model):
    records = [
        make_record(name, ["forall", "m", "n", ",", "m", op, "n", "=", "n", op, "m"])
        for name, op in [("addnC", "+"), ("mulnC", "*")]
    ]
    return tiny_model(records, seed=2)


def split(data):
    newline = data.index(b"\n")
    return json.loads(data[:newline]), data[newline + 1 :]


def join(header, body):
    return json.dumps(header).encode("utf-8") + b"\n" + body


class TestCheckpoint:
    def test_round_trip(self, model, tmp_path):
        path = tmp_path / "out" / "model.ckpt"
        save_checkpoint(model, path, seed=9, step=40)
        loaded, header = load_checkpoint(path)
        assert header["seed"] == 9
        assert header["step"] == 40
        assert loaded.config == model.config
        assert loaded.name_vocab == model.name_vocab
        assert loaded.input_vocab == model.input_vocab
        assert list(loaded.params) == list(model.params)
        for name, value in model.params.items():
            np.testing.assert_array_equal(loaded.params[name], value.astype(np.float32))
            assert loaded.params[name].dtype == value.dtype
        assert dumps_checkpoint(loaded, seed=9, step=40) == path.read_bytes()

    def test_identical_bytes(self, model):
        assert dumps_checkpoint(model, 1, 2) == dumps_checkpoint(model, 1, 2)

    def test_preprocessing_travels_with_the_model(self, model):
        for value in model.params.values():
            value[...] = value.astype(np.float32)
        loaded, _ = loads_checkpoint(dumps_checkpoint(model))
        record = make_record("addnC", ["forall", "m", ",", "m", "+", "0", "=", "m"])
        assert loaded.suggest(record, k=2) == model.suggest(record, k=2)

    def test_body_layout(self, model):
        header, body = split(dumps_checkpoint(model))
        first = header["names"][0]
        expected = model.params[first].astype("<f4").tobytes()
        assert body.startswith(expected)
        assert header["dtype"] == "float64"
        assert len(body) == 4 * sum(v.size for v in model.params.values())


class TestCorruption:
    def test_no_header_line(self):
        with pytest.raises(CheckpointMismatch):
            loads_checkpoint(b"\x00\x01\x02")

    def test_unreadable_header(self):
        with pytest.raises(CheckpointMismatch):
            loads_checkpoint(b"{version\n")

    def test_version(self, model):
        header, body = split(dumps_checkpoint(model))
        header["version"] = 99
        with pytest.raises(CheckpointMismatch):
            loads_checkpoint(join(header, body))

    def test_shapes(self, model):
        header, body = split(dumps_checkpoint(model))
        header["shapes"][0][0] += 1
        with pytest.raises(CheckpointMismatch):
            loads_checkpoint(join(header, body))

    def test_missing_field(self, model):
        header, body = split(dumps_checkpoint(model))
        del header["lexicon"]
        with pytest.raises(CheckpointMismatch):
            loads_checkpoint(join(header, body))

    def test_truncated_body(self, model):
        data = dumps_checkpoint(model)
        with pytest.raises(CheckpointMismatch):
            loads_checkpoint(data[:-8])
