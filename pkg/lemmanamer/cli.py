"""Command line interface.

Every command writes its outputs and a ``manifest.json`` into ``--out``;
``lemmanamer replay <manifest>`` runs the recorded command again.
"""

import argparse
import json
import logging
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Sequence
from requests import RequestException
from . import __version__
from .checkpoint import load_checkpoint, save_checkpoint
from .config import ModelConfig, TrainConfig, load_run_config
from .constants import OUTLIER_QUANTILE, SIGNIFICANCE_LEVEL, SPLIT_FRACTIONS, TOP_K
from .corpus import (
    DatasetSplit,
    corpus_report,
    filter_outliers,
    load_dataset,
    save_dataset,
    split_by_document,
    trim_record,
)
from .errors import ConfigError, LeakageError, LemmaNamerError, MissingReference
from .features import Preprocessor
from .metrics import (
    average_reports,
    bootstrap_compare,
    evaluate_suggestions,
    report,
)
from .model import NamingModel
from .retrieval import build_index
from .subtokenizer import Lexicon, default_lexicon, load_lexicon
from .synthetic import GeneratorSpec, write_corpus
from .training import fine_tune, train
from .trimming import TrimConfig, standard_keep_fraction
from .utils import _default_seed, _read_text
from .vocab import build_vocab

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
MANIFEST = "manifest.json"
_HEAD_KEYS = ("location_heads", "qualified_name_heads")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _write_json(path: Path, data) -> None:
    with open(path, "w", encoding="utf-8") as file:
        json.dump(data, file, indent=2, sort_keys=True)
        file.write("\n")


def _write_lines(path: Path, rows: Sequence[dict]) -> None:
    with open(path, "w", encoding="utf-8") as file:
        for row in rows:
            file.write(json.dumps(row, ensure_ascii=False) + "\n")


def _read_lines(source) -> List[dict]:
    lines = _read_text(source).splitlines()
    return [json.loads(line) for line in lines if line.strip()]


class _Run:
    """Output directory plus the manifest describing how it was produced."""

    def __init__(self, args: argparse.Namespace, argv: Sequence[str]) -> None:
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.manifest = {
            "command": args.command,
            "argv": list(argv),
            "version": __version__,
            "started": _now(),
            "config": {},
            "inputs": {},
            "outputs": {},
        }  # type: Dict[str, object]

    def path(self, name: str) -> Path:
        path = self.out / name
        self.manifest["outputs"][name] = str(path)
        return path

    def finish(self) -> None:
        self.manifest["finished"] = _now()
        _write_json(self.out / MANIFEST, self.manifest)


# configuration


def _tables(args) -> Dict[str, dict]:
    if getattr(args, "config", None):
        return load_run_config(args.config)
    return {"model": {}, "train": {}, "trim": {}, "preprocess": {}}


def _lexicon(args, tables) -> Lexicon:
    source = getattr(args, "lexicon", None) or tables["preprocess"].get("lexicon")
    return load_lexicon(source) if source else default_lexicon()


def _trim_config(args, tables, records=()) -> TrimConfig:
    values = dict(tables["trim"])
    for flag, key in (
        ("trim_variant", "variant"),
        ("max_depth", "max_depth"),
        ("target_nodes", "target_node_count"),
        ("keep_fraction", "keep_fraction"),
    ):
        if getattr(args, flag, None) is not None:
            values[key] = getattr(args, flag)
    if values.get("variant") == "random" and "seed" not in values:
        values["seed"] = _default_seed(getattr(args, "seed", None))
    if getattr(args, "trim_match_standard", False):
        if values.get("variant") != "random":
            raise ConfigError("--trim-match-standard needs --trim-variant random")
        heads = TrimConfig.from_dict(
            {key: values[key] for key in _HEAD_KEYS if key in values}
        )
        trees = [tree for record in records for tree in (record.stree, record.ktree)]
        values.pop("target_node_count", None)
        values["keep_fraction"] = standard_keep_fraction(trees, heads)
        logger.info("random trimming keeps %.3f of each tree", values["keep_fraction"])
    return TrimConfig.from_dict(values)


def _model_config(args, tables) -> ModelConfig:
    values = dict(tables["model"])
    if args.model:
        values.pop("inputs", None)
        values["name"] = args.model
    for key in ("embedding_dim", "hidden_units", "num_layers", "beam_size", "dropout"):
        if getattr(args, key, None) is not None:
            values[key] = getattr(args, key)
    if getattr(args, "max_input_len", None) is not None:
        values["max_input_len"] = args.max_input_len
    return ModelConfig.from_dict(values)


def _train_config(args, tables) -> TrainConfig:
    config = TrainConfig.from_dict(dict(tables["train"]))
    return config.with_overrides(
        max_steps=args.steps,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        checkpoint_interval=args.checkpoint_interval,
        early_stop_patience=args.patience,
        seed=args.seed,
    )


def _records_for(args, tier: str):
    records = load_dataset(args.data)
    if not getattr(args, "split", None):
        return records
    return DatasetSplit.load(args.split).select(records, tier)


def _suggestion_rows(model: NamingModel, records, k: int) -> List[dict]:
    rows = []
    for record in records:
        suggestions = model.suggest(record, k)
        rows.append(
            {
                "qname": record.qualified_name,
                "suggestions": [
                    {"name": name, "log_prob": log_prob}
                    for name, log_prob in suggestions
                ],
            }
        )
    return rows


# commands


def cmd_preprocess(args, run: _Run) -> None:
    tables = _tables(args)
    settings = tables["preprocess"]
    lexicon = _lexicon(args, tables)
    quantile = args.outlier_quantile
    if quantile is None:
        quantile = settings.get("outlier_quantile", OUTLIER_QUANTILE)
    fractions = tuple(args.fractions or settings.get("fractions", SPLIT_FRACTIONS))
    seed = _default_seed(args.seed if args.seed is not None else settings.get("seed"))

    records = filter_outliers(load_dataset(args.dataset), quantile)
    trim_config = _trim_config(args, tables, records)
    processed = [trim_record(record, trim_config) for record in records]
    save_dataset(processed, run.path("processed.jsonl"), lexicon)

    split = split_by_document(processed, fractions, seed)
    if args.tier:
        tiers = {}
        for item in args.tier:
            name, _, docs = item.partition("=")
            tiers[name] = tuple(doc for doc in docs.split(",") if doc)
        split = DatasetSplit(split.train, split.val, split.test, split.seed, tiers)
    split.save(run.path("split.json"))

    run.manifest["inputs"] = {"dataset": str(args.dataset)}
    run.manifest["config"] = {
        "trim": trim_config.to_dict(),
        "outlier_quantile": quantile,
        "fractions": list(fractions),
        "lexicon": lexicon.to_dict(),
    }
    run.manifest["seed"] = seed
    logger.info("preprocessed %d lemmas", len(processed))


def cmd_stats(args, run: _Run) -> None:
    tables = _tables(args)
    records = load_dataset(args.dataset)
    trim_config = _trim_config(args, tables, records)
    result = corpus_report(records, trim_config, _lexicon(args, tables))
    _write_json(run.path("stats.json"), result.to_json())
    print(result.format_table())
    run.manifest["inputs"] = {"dataset": str(args.dataset)}
    run.manifest["config"] = {"trim": trim_config.to_dict()}


def cmd_train(args, run: _Run) -> None:
    tables = _tables(args)
    model_config = _model_config(args, tables)
    train_config = _train_config(args, tables)
    train_records = _records_for(args, args.train_tier)
    val_records = _records_for(args, args.val_tier) if args.split else []
    preprocessor = Preprocessor(
        _lexicon(args, tables),
        _trim_config(args, tables, train_records),
        model_config.max_input_len,
    )

    name_vocab, input_vocab = build_vocab(
        train_records, model_config.inputs, preprocessor
    )
    model = NamingModel.create(
        model_config, name_vocab, input_vocab, preprocessor, seed=train_config.seed
    )
    result = train(
        model,
        train_records,
        val_records,
        train_config,
        log_path=run.path("train_log.jsonl"),
        checkpoint_dir=run.out / "checkpoints",
    )
    save_checkpoint(
        model, run.path("model.ckpt"), seed=train_config.seed, step=result.best_step
    )

    run.manifest["inputs"] = {"data": str(args.data), "split": args.split}
    run.manifest["config"] = {
        "model": model_config.to_dict(),
        "train": train_config.to_dict(),
        "train_tier": args.train_tier,
        "val_tier": args.val_tier,
    }
    run.manifest["seed"] = train_config.seed
    run.manifest["result"] = {
        "steps": result.steps,
        "best_step": result.best_step,
        "stopped_early": result.stopped_early,
    }


def cmd_suggest(args, run: _Run) -> None:
    model, header = load_checkpoint(args.checkpoint)
    if args.beam_size:
        model.config = replace(model.config, beam_size=args.beam_size)
    records = _records_for(args, args.tier)
    rows = _suggestion_rows(model, records, args.k)
    _write_lines(run.path("suggestions.jsonl"), rows)
    run.manifest["inputs"] = {
        "checkpoint": str(args.checkpoint),
        "data": str(args.data),
        "split": args.split,
    }
    run.manifest["config"] = {
        "k": args.k,
        "tier": args.tier,
        "model": model.config.to_dict(),
    }
    run.manifest["seed"] = header.get("seed")


def _load_suggestions(source) -> Dict[str, List[str]]:
    return {
        row["qname"]: [item["name"] for item in row["suggestions"]]
        for row in _read_lines(source)
    }


def _per_lemma(runs: Sequence[Dict[str, List[str]]], references) -> List[list]:
    return [evaluate_suggestions(suggestions, references) for suggestions in runs]


def _mean_scores(scored_runs: Sequence[list], metric: str) -> Dict[str, float]:
    totals = {}  # type: Dict[str, float]
    for scores in scored_runs:
        for score in scores:
            totals[score.qualified_name] = (
                totals.get(score.qualified_name, 0.0)
                + getattr(score, metric) / len(scored_runs)
            )
    return totals


def cmd_evaluate(args, run: _Run) -> None:
    references = {r.qualified_name: r.name for r in load_dataset(args.references)}
    runs = [_load_suggestions(path) for path in args.suggestions]
    scored = _per_lemma(runs, references)
    averaged = average_reports(report(scores) for scores in scored)
    result = {
        "model": args.model,
        "split": args.split_name,
        "runs": len(runs),
        "seed": _default_seed(args.seed),
        **averaged.to_json(),
        "percent": averaged.format_percent(),
    }

    if args.compare:
        other = _per_lemma([_load_suggestions(p) for p in args.compare], references)
        result["comparison"] = {}
        for metric in ("bleu4", "frag_acc", "top1", "top5"):
            mine, theirs = _mean_scores(scored, metric), _mean_scores(other, metric)
            for qname in mine:
                if qname not in theirs:
                    raise MissingReference(qname)
            result["comparison"][metric] = bootstrap_compare(
                [mine[q] for q in sorted(mine)],
                [theirs[q] for q in sorted(mine)],
                seed=result["seed"],
            )
        result["significant"] = {
            metric: p < SIGNIFICANCE_LEVEL for metric, p in result["comparison"].items()
        }

    _write_json(run.path("report.json"), result)
    print(" ".join(f"{k}={v}" for k, v in averaged.format_percent().items()))
    run.manifest["inputs"] = {
        "suggestions": [str(p) for p in args.suggestions],
        "references": str(args.references),
        "compare": [str(p) for p in args.compare or []],
    }
    run.manifest["seed"] = result["seed"]


def cmd_baseline(args, run: _Run) -> None:
    tables = _tables(args)
    records = load_dataset(args.data)
    split = DatasetSplit.load(args.split)
    index = build_index(
        split.select(records, args.train_tier),
        subtokenized=not args.raw,
        lexicon=_lexicon(args, tables),
    )
    index.save(run.path("index.json"))
    rows = []
    for record in split.select(records, args.test_tier):
        rows.append(
            {
                "qname": record.qualified_name,
                "suggestions": [
                    {"name": name, "score": score}
                    for name, score in index.retrieve(record, args.k)
                ],
            }
        )
    _write_lines(run.path("suggestions.jsonl"), rows)
    run.manifest["inputs"] = {"data": str(args.data), "split": str(args.split)}
    run.manifest["config"] = {
        "train_tier": args.train_tier,
        "test_tier": args.test_tier,
        "subtokenized": not args.raw,
        "k": args.k,
    }


def cmd_finetune(args, run: _Run) -> None:
    tables = _tables(args)
    model, header = load_checkpoint(args.checkpoint)
    expected = ModelConfig.from_name(args.model) if args.model else None
    train_config = _train_config(args, tables)
    result = fine_tune(
        model,
        _records_for(args, args.train_tier),
        _records_for(args, args.val_tier) if args.split else [],
        train_config,
        expected=expected,
        log_path=run.path("train_log.jsonl"),
        checkpoint_dir=run.out / "checkpoints",
    )
    save_checkpoint(
        model, run.path("model.ckpt"), seed=train_config.seed, step=result.best_step
    )
    run.manifest["inputs"] = {
        "checkpoint": str(args.checkpoint),
        "data": str(args.data),
        "split": args.split,
    }
    run.manifest["config"] = {
        "train": train_config.to_dict(),
        "model": model.config.to_dict(),
    }
    run.manifest["seed"] = train_config.seed


def cmd_crossset(args, run: _Run) -> None:
    if not args.split:
        raise ConfigError("crossset needs --split")
    split = DatasetSplit.load(args.split)
    train_docs = split.docs_for(args.train_tier)
    test_docs = split.docs_for(args.test_tier)
    shared = train_docs & test_docs
    if shared:
        raise LeakageError(
            f"tiers {args.train_tier} and {args.test_tier} share {sorted(shared)[:5]}"
        )
    cmd_train(args, run)
    model, _ = load_checkpoint(run.out / "model.ckpt")
    test_records = _records_for(args, args.test_tier)
    rows = _suggestion_rows(model, test_records, args.k)
    _write_lines(run.path("suggestions.jsonl"), rows)

    references = {r.qualified_name: r.name for r in test_records}
    suggestions = {
        row["qname"]: [s["name"] for s in row["suggestions"]] for row in rows
    }
    result = report(evaluate_suggestions(suggestions, references))
    _write_json(
        run.path("report.json"),
        {
            "model": run.manifest["config"]["model"],
            "train_tier": args.train_tier,
            "test_tier": args.test_tier,
            **result.to_json(),
            "percent": result.format_percent(),
        },
    )
    run.manifest["config"]["test_tier"] = args.test_tier


def cmd_generate(args, run: _Run) -> None:
    spec = GeneratorSpec(
        n_docs=args.n_docs,
        lemmas_per_doc=args.lemmas_per_doc,
        naming_rule=args.naming_rule,
        convention=args.convention,
        local_fraction=args.local_fraction,
        doc_prefix=args.doc_prefix,
        seed=args.seed,
    )
    records = write_corpus(spec, run.path("corpus.jsonl"))
    run.manifest["config"] = {"generator": spec.to_dict()}
    run.manifest["seed"] = spec.seed
    logger.info("generated %d lemmas in %d documents", len(records), spec.n_docs)


# parser


def _add_trim_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--trim-variant", choices=["standard", "keep-category", "depth", "random"]
    )
    parser.add_argument("--max-depth", type=int)
    parser.add_argument("--target-nodes", type=int)
    parser.add_argument("--keep-fraction", type=float)
    parser.add_argument(
        "--trim-match-standard",
        action="store_true",
        help="random trimming keeps as many nodes as standard trimming on average",
    )


def _add_train_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--steps", type=int, help="maximum optimizer steps")
    parser.add_argument("--batch-size", type=int)
    parser.add_argument("--learning-rate", type=float)
    parser.add_argument("--checkpoint-interval", type=int)
    parser.add_argument("--patience", type=int, help="early stopping patience")


def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", help="model name, e.g. ln-s+bsexpl1+attn+copy")
    parser.add_argument("--embedding-dim", type=int)
    parser.add_argument("--hidden-units", type=int)
    parser.add_argument("--num-layers", type=int)
    parser.add_argument("--dropout", type=float)
    parser.add_argument("--beam-size", type=int)
    parser.add_argument("--max-input-len", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lemmanamer", description="Generate and evaluate lemma names."
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument(
        "--log-level",
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
    )
    commands = parser.add_subparsers(dest="command", required=True)

    def command(name: str, handler, help: str) -> argparse.ArgumentParser:
        sub = commands.add_parser(name, help=help)
        sub.set_defaults(handler=handler)
        sub.add_argument("--out", required=True, help="output directory")
        sub.add_argument("--seed", type=int)
        sub.add_argument("--config", help="TOML run configuration")
        return sub

    sub = command("preprocess", cmd_preprocess, "filter, trim and split a dataset")
    sub.add_argument("dataset")
    sub.add_argument("--lexicon")
    sub.add_argument("--outlier-quantile", type=float)
    sub.add_argument("--fractions", type=float, nargs=3)
    sub.add_argument(
        "--tier", action="append", help="extra split tier as NAME=DOC,DOC,..."
    )
    _add_trim_flags(sub)

    sub = command("stats", cmd_stats, "corpus and tree statistics")
    sub.add_argument("dataset")
    sub.add_argument("--lexicon")
    _add_trim_flags(sub)

    for name, handler, help in (
        ("train", cmd_train, "train a naming model"),
        ("crossset", cmd_crossset, "train on one tier and evaluate on another"),
    ):
        sub = command(name, handler, help)
        sub.add_argument("--data", required=True, help="processed dataset")
        sub.add_argument("--split", help="split manifest")
        sub.add_argument("--train-tier", default="train")
        sub.add_argument("--val-tier", default="val")
        sub.add_argument("--lexicon")
        _add_model_flags(sub)
        _add_train_flags(sub)
        _add_trim_flags(sub)
        if name == "crossset":
            sub.add_argument("--test-tier", default="test")
            sub.add_argument("-k", type=int, default=TOP_K)

    sub = command("suggest", cmd_suggest, "suggest names with a trained model")
    sub.add_argument("--checkpoint", required=True)
    sub.add_argument("--data", required=True)
    sub.add_argument("--split")
    sub.add_argument("--tier", default="test")
    sub.add_argument("-k", type=int, default=TOP_K)
    sub.add_argument("--beam-size", type=int)

    sub = command("evaluate", cmd_evaluate, "score suggestions against references")
    sub.add_argument("--suggestions", nargs="+", required=True, help="one file per run")
    sub.add_argument("--references", required=True, help="dataset with true names")
    sub.add_argument("--compare", nargs="+", help="runs of a second model")
    sub.add_argument("--model")
    sub.add_argument("--split-name", default="test")

    sub = command("baseline", cmd_baseline, "tf-idf nearest neighbour baseline")
    sub.add_argument("--data", required=True)
    sub.add_argument("--split", required=True)
    sub.add_argument("--train-tier", default="train")
    sub.add_argument("--test-tier", default="test")
    sub.add_argument("--raw", action="store_true", help="index whole tokens")
    sub.add_argument("--lexicon")
    sub.add_argument("-k", type=int, default=TOP_K)

    sub = command("finetune", cmd_finetune, "continue training on new data")
    sub.add_argument("--checkpoint", required=True)
    sub.add_argument("--data", required=True)
    sub.add_argument("--split")
    sub.add_argument("--train-tier", default="train")
    sub.add_argument("--val-tier", default="val")
    sub.add_argument("--model", help="expected model name")
    _add_train_flags(sub)

    sub = command("generate", cmd_generate, "write a synthetic corpus")
    sub.add_argument("--n-docs", type=int, default=5)
    sub.add_argument("--lemmas-per-doc", type=int, default=10)
    sub.add_argument("--naming-rule", choices=["ktree", "stmt"], default="ktree")
    sub.add_argument("--convention", choices=["suffix", "prefix"], default="suffix")
    sub.add_argument("--local-fraction", type=float, default=0.2)
    sub.add_argument("--doc-prefix", default="Doc")

    replay = commands.add_parser("replay", help="re-run a command from its manifest")
    replay.add_argument("manifest")
    return parser


def _replay_argv(manifest_path: str) -> List[str]:
    manifest = json.loads(_read_text(manifest_path))
    if "argv" not in manifest:
        raise ConfigError(f"{manifest_path} is not a run manifest")
    return list(manifest["argv"])


def run(argv: Sequence[str]) -> None:
    args = build_parser().parse_args(argv)
    logging.getLogger().setLevel(args.log_level)
    if args.command == "replay":
        run(_replay_argv(args.manifest))
        return
    if args.command in ("train", "crossset") and not args.model:
        if not _tables(args)["model"]:
            raise ConfigError("--model or a [model] table is required")
    recorder = _Run(args, argv)
    args.handler(args, recorder)
    recorder.finish()


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(level=logging.INFO, format=LOG_FORMAT)
    try:
        run(argv)
    except LemmaNamerError as e:
        logger.error("%s", e)
        return e.exit_code
    except RequestException as e:
        logger.error("download failed: %s", e)
        return 4
    except (FileNotFoundError, json.JSONDecodeError) as e:
        logger.error("%s", e)
        return 3
    return 0
