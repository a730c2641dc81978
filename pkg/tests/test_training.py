import json
import numpy as np
import pytest
from conftest import make_record
from lemmanamer.config import ModelConfig, TrainConfig
from lemmanamer.errors import ConfigMismatch, EmptyTrainSet, NonFiniteValue
from lemmanamer.training import (
    Adam,
    EarlyStopping,
    clip_gradients,
    evaluate_loss,
    fine_tune,
    simulate_early_stopping,
    train,
)


@pytest.fixture
def records():
    laws = [
        ("addnC", "+", "comm"),
        ("mulnC", "*", "comm"),
        ("addnA", "+", "assoc"),
        ("mulnA", "*", "assoc"),
    ]
    return [
        make_record(name, ["forall", "m", "n", ",", kind, "(", "m", op, "n", ")"])
        for name, op, kind in laws
    ]


def recipe(**values):
    defaults = dict(
        learning_rate=0.05,
        checkpoint_interval=2,
        early_stop_patience=3,
        max_steps=6,
        batch_size=2,
        seed=5,
    )
    defaults.update(values)
    return TrainConfig(**defaults)


class TestOptimizer:
    def test_first_adam_step_moves_by_learning_rate(self):
        params = {"w": np.array([5.0])}
        Adam(params, learning_rate=0.1).step(params, {"w": np.array([3.0])})
        assert params["w"][0] == pytest.approx(4.9)

    def test_clipping(self):
        grads = {"a": np.array([3.0]), "b": np.array([[4.0]])}
        assert clip_gradients(grads, 1.0) == pytest.approx(5.0)
        assert grads["a"][0] == pytest.approx(0.6)
        assert grads["b"][0, 0] == pytest.approx(0.8)

    def test_clipping_disabled(self):
        grads = {"a": np.array([30.0])}
        clip_gradients(grads, 0)
        assert grads["a"][0] == 30.0

    def test_non_finite(self):
        with pytest.raises(NonFiniteValue):
            clip_gradients({"a": np.array([np.nan])}, 1.0)


class TestEarlyStopping:
    def test_stop_and_restore_points(self):
        assert simulate_early_stopping([5, 4, 4.1, 4.2, 4.3], 3, 200) == (1000, 400)

    def test_never_stops_while_improving(self):
        assert simulate_early_stopping([5, 4, 3, 2], 3, 10) == (40, 40)

    def test_counter_resets(self):
        stopper = EarlyStopping(patience=2)
        for loss in (3.0, 3.5, 2.0, 2.5):
            stopper.update(loss)
        assert not stopper.should_stop
        stopper.update(2.2)
        assert stopper.should_stop
        assert stopper.best_index == 3


class TestTrain:
    def test_run_writes_log_and_checkpoints(self, records, tiny_model, tmp_path):
        model = tiny_model(records)
        result = train(
            model,
            records,
            records[:2],
            recipe(),
            log_path=tmp_path / "train_log.jsonl",
            checkpoint_dir=tmp_path / "checkpoints",
        )
        entries = [
            json.loads(line)
            for line in (tmp_path / "train_log.jsonl").read_text().splitlines()
        ]
        assert [entry["step"] for entry in entries] == [2, 4, 6]
        assert entries == result.log
        assert all("val_loss" in entry for entry in entries)
        assert (tmp_path / "checkpoints" / "step-2.ckpt").exists()
        assert result.steps == 6
        assert result.best_step in (2, 4, 6)

    def test_loss_goes_down(self, records, tiny_model):
        model = tiny_model(records)
        examples = [model.example(record) for record in records]
        before = evaluate_loss(model, examples, batch_size=4)
        train(model, records, config=recipe(max_steps=40, checkpoint_interval=10))
        assert evaluate_loss(model, examples, batch_size=4) < before

    def test_deterministic(self, records, tiny_model):
        first = tiny_model(records)
        second = tiny_model(records)
        train(first, records, records[:2], recipe())
        train(second, records, records[:2], recipe())
        for name, value in first.params.items():
            np.testing.assert_array_equal(second.params[name], value)

    def test_dropout_is_seeded(self, records, tiny_model):
        first = tiny_model(records, num_layers=2, dropout=0.5)
        second = tiny_model(records, num_layers=2, dropout=0.5)
        train(first, records, config=recipe())
        train(second, records, config=recipe())
        for name, value in first.params.items():
            np.testing.assert_array_equal(second.params[name], value)

    def test_nothing_fits(self, records, tiny_model):
        model = tiny_model(records, max_decode_len=1)
        with pytest.raises(EmptyTrainSet):
            train(model, records, config=recipe())


class TestFineTune:
    def test_architecture_must_match(self, records, tiny_model):
        model = tiny_model(records)
        other = ModelConfig.from_name("ln-s+attn", embedding_dim=8, hidden_units=6)
        with pytest.raises(ConfigMismatch):
            fine_tune(model, records, expected=other)

    def test_zero_steps_keeps_parameters(self, records, tiny_model):
        model = tiny_model(records)
        before = {name: value.copy() for name, value in model.params.items()}
        result = fine_tune(
            model, records, config=recipe(max_steps=0), expected=model.config
        )
        assert result.steps == 0
        for name, value in before.items():
            np.testing.assert_array_equal(model.params[name], value)

    def test_continues_training(self, records, tiny_model):
        model = tiny_model(records)
        train(model, records[:2], config=recipe())
        new_lemma = make_record("addnCA", ["forall", "m", "n", "p", ",", "m", "+"])
        result = fine_tune(model, [new_lemma], config=recipe(max_steps=2))
        assert result.steps == 2
