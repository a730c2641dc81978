import pytest
from lemmanamer.config import (
    ModelConfig,
    TrainConfig,
    iter_grid,
    load_run_config,
    model_name,
    parse_model_name,
)
from lemmanamer.constants import DEFAULT_SEED, SEED_ENV_VAR
from lemmanamer.errors import ConfigError, InvalidModelName
from lemmanamer.features import InputKind


class TestModelNames:
    @pytest.mark.parametrize(
        "name, inputs, attention, copy",
        [
            ("ln-s", (InputKind.STMT,), False, False),
            ("s+attn", (InputKind.STMT,), True, False),
            (
                "ln-s+bsexpl1+attn+copy",
                (InputKind.STMT, InputKind.TRIMMED_KTREE),
                True,
                True,
            ),
            ("ln-fsexp+bsexp", (InputKind.STREE, InputKind.KTREE), False, False),
        ],
    )
    def test_parse(self, name, inputs, attention, copy):
        assert parse_model_name(name) == (inputs, attention, copy)

    @pytest.mark.parametrize(
        "name",
        [
            "ln-",
            "ln-attn",
            "ln-s+s",
            "ln-s+attn+bsexp",
            "ln-s+copy",
            "ln-s+attn+attn",
            "ln-s+tree",
            "ln-s+copy+attn",
        ],
    )
    def test_invalid(self, name):
        with pytest.raises(InvalidModelName):
            parse_model_name(name)

    def test_name_is_canonical(self):
        config = ModelConfig.from_name("s+bsexpl1+attn+copy")
        assert config.name == "ln-s+bsexpl1+attn+copy"
        assert model_name(ModelConfig.from_name(config.name)) == config.name


class TestModelConfig:
    def test_defaults(self):
        config = ModelConfig.from_name("ln-s+attn")
        assert config.embedding_dim == 200
        assert config.hidden_units == 200
        assert config.num_layers == 1
        assert config.dropout == 0.5
        assert config.beam_size == 5
        assert config.attention_score == "general"

    @pytest.mark.parametrize(
        "overrides",
        [
            {"hidden_units": 0},
            {"dropout": 1.0},
            {"attention_score": "additive"},
            {"dtype": "float16"},
            {"beam_size": 0},
        ],
    )
    def test_validation(self, overrides):
        with pytest.raises(ConfigError):
            ModelConfig.from_name("ln-s+attn", **overrides)

    def test_copy_needs_attention(self):
        with pytest.raises(ConfigError):
            ModelConfig(inputs=(InputKind.STMT,), use_copy=True)

    def test_dict_form(self):
        config = ModelConfig.from_name("ln-bsexpl1+attn+copy", hidden_units=7)
        assert ModelConfig.from_dict(config.to_dict()) == config
        from_name = ModelConfig.from_dict({"name": config.name, "hidden_units": 7})
        assert from_name == config

    def test_bad_dict(self):
        with pytest.raises(ConfigError):
            ModelConfig.from_dict({"name": "ln-s", "width": 3})
        with pytest.raises(ConfigError):
            ModelConfig.from_dict({"hidden_units": 3})
        with pytest.raises(ConfigError):
            ModelConfig.from_dict({"inputs": ["tree"]})

    def test_grid(self):
        grid = list(iter_grid([InputKind.STMT], True, True))
        assert len(grid) == 27
        sizes = {(c.embedding_dim, c.hidden_units, c.num_layers) for c in grid}
        assert len(sizes) == 27
        assert all(c.name == "ln-s+attn+copy" for c in grid)


class TestTrainConfig:
    def test_seed_resolution(self, monkeypatch):
        monkeypatch.delenv(SEED_ENV_VAR, raising=False)
        assert TrainConfig().seed == DEFAULT_SEED
        monkeypatch.setenv(SEED_ENV_VAR, "12")
        assert TrainConfig().seed == 12
        assert TrainConfig(seed=3).seed == 3

    def test_overrides_skip_none(self):
        config = TrainConfig(seed=1).with_overrides(max_steps=10, batch_size=None)
        assert config.max_steps == 10
        assert config.batch_size == 32

    def test_validation(self):
        with pytest.raises(ConfigError):
            TrainConfig(learning_rate=0)
        with pytest.raises(ConfigError):
            TrainConfig(early_stop_patience=0)
        with pytest.raises(ConfigError):
            TrainConfig.from_dict({"epochs": 3})


class TestRunConfig:
    def test_tables(self, tmp_path):
        path = tmp_path / "run.toml"
        path.write_text(
            '[model]\nname = "ln-s+attn"\nhidden_units = 16\n\n'
            "[train]\nmax_steps = 40\n\n[trim]\nvariant = \"depth\"\n"
        )
        config = load_run_config(path)
        assert config["model"] == {"name": "ln-s+attn", "hidden_units": 16}
        assert config["train"] == {"max_steps": 40}
        assert config["trim"] == {"variant": "depth"}
        assert config["preprocess"] == {}

    def test_errors(self, tmp_path):
        path = tmp_path / "run.toml"
        path.write_text("[optimizer]\nlr = 1\n")
        with pytest.raises(ConfigError):
            load_run_config(path)
        path.write_text("[model\n")
        with pytest.raises(ConfigError):
            load_run_config(path)

    def test_url(self, monkeypatch):
        class Response:
            text = "[train]\nmax_steps = 5\n"

            def raise_for_status(self):
                pass

        calls = []

        def fake_get(url, timeout):
            calls.append((url, timeout))
            return Response()

        monkeypatch.setattr("lemmanamer.utils.get", fake_get)
        config = load_run_config("https://example.org/run.toml")
        assert config["train"] == {"max_steps": 5}
        assert calls == [("https://example.org/run.toml", 10)]
