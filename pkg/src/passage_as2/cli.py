"""Command-line entry point: ``passage-as2 <subcommand>``.

Subcommands
-----------
gen-synthetic   write a seeded planted-signal raw corpus
build-corpus    window, label and split a raw corpus
train           train one model from a run config
eval            run a pipeline mode over a split, write metrics/answers/run log
cost-report     aggregate run logs into the prediction-cost table

Exit status is 0 on success and 2 on a validation error (bad config value,
missing input file or checkpoint).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

from . import config as config_mod
from .config import FORMAT_VERSION, ConfigError, RunConfig
from .corpus import GROUPS, build_corpus, load_raw, load_split, read_jsonl, save_split, split_stats
from .pipeline import cost_report, evaluate_pipeline, group_filter
from .synthetic import SyntheticConfig, gen_synthetic
from .training import TrainedModel, train

log = logging.getLogger("passage_as2")


class ValidationError(ValueError):
    pass


def _dump(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _parse_set(items: Sequence[str]) -> dict[str, Any]:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(item, "overrides take the form section.key=value")
        key, raw = item.split("=", 1)
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def _run_config(args) -> RunConfig:
    overrides = _parse_set(args.set)
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    return config_mod.load(args.config, overrides)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_gen_synthetic(args) -> int:
    overrides = {k: v for k, v in (("positive_rate", args.positive_rate), ("distractor_rate", args.distractor_rate),
                                   ("n_markers", args.n_markers)) if v is not None}
    try:
        cfg = SyntheticConfig(n_questions=args.n_questions, seed=args.seed, **overrides)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    out = Path(args.out_dir)
    docs, questions, labels = gen_synthetic(args.n_questions, args.seed, out, **overrides)
    snapshot = {k: list(v) if isinstance(v, tuple) else v for k, v in vars(cfg).items()}
    _write(out / "manifest.json", _dump({"format_version": FORMAT_VERSION, "config": snapshot,
                                         "documents": len(docs), "questions": len(questions),
                                         "qa_labels": len(labels)}))
    print(f"wrote {len(questions)} questions, {len(docs)} documents, {len(labels)} labels to {out}")
    return 0


def cmd_build_corpus(args) -> int:
    in_dir = Path(args.in_dir)
    for name in ("documents.jsonl", "questions.jsonl", "qa_labels.jsonl"):
        if not (in_dir / name).exists():
            raise ValidationError(f"missing input file {in_dir / name}")
    docs, questions, labels = load_raw(in_dir)
    splits = build_corpus(docs, questions, labels, group=args.group, seed=args.seed)
    out = Path(args.out_dir)
    stats = []
    for split in splits.values():
        save_split(split, out)
        stats.append(split_stats(split))
    _write(out / "stats.json", _dump({"format_version": FORMAT_VERSION,
                                      "config": {"in_dir": str(in_dir), "group": args.group, "seed": args.seed},
                                      "splits": stats}))
    for s in stats:
        print(f"{s['split']:5s}  questions {s['questions']:5d}  QP {s['qp_pairs']:6d} ({s['qp_pos']} pos)"
              f"  QA {s['qa_pairs']:6d} ({s['qa_pos']} pos)")
    return 0


def _load_split(cfg: RunConfig, name: str):
    root = Path(cfg.data.corpus_dir)
    if not (root / name / "passages.jsonl").exists():
        raise ValidationError(f"data.corpus_dir: no {name} split under {root}")
    return load_split(root, name)


def cmd_train(args) -> int:
    cfg = _run_config(args)
    train_split, dev = _load_split(cfg, "train"), _load_split(cfg, "dev")
    if cfg.data.group != "all":
        train_split.passages = group_filter(train_split, cfg.data.group, cfg.seed)
    model = train(train_split, cfg.train_config(), dev=dev)
    out = model.save(cfg.train.out_dir)
    metrics = {"format_version": FORMAT_VERSION, "mode": model.mode, "split": "dev",
               "passage_group": "all", **model.metrics, "config": cfg.to_dict()}
    _write(out / "metrics.json", _dump(metrics))
    print(f"saved {model.mode} model to {out}: " + ", ".join(f"{k}={v:.4f}" for k, v in sorted(model.metrics.items())))
    return 0


_ROLES = {"as2": ("sentence",), "peasi_top1": ("pr", "easi"), "peasi_all_as2": ("pr", "easi", "sentence")}


def _load_models(cfg: RunConfig) -> dict[str, TrainedModel]:
    paths = {"pr": cfg.pipeline.pr_model, "easi": cfg.pipeline.easi_model, "sentence": cfg.pipeline.sentence_model}
    cache: dict[str, TrainedModel] = {}
    models = {}
    for role in _ROLES[cfg.pipeline.mode]:
        path = paths[role]
        if path is None:
            raise ConfigError(f"pipeline.{role}_model", f"required for mode {cfg.pipeline.mode}")
        if not (Path(path) / "checkpoint.json").exists():
            raise ConfigError(f"pipeline.{role}_model", f"missing checkpoint under {path}")
        if path not in cache:
            cache[path] = TrainedModel.load(path)
        models[role] = cache[path]
    return models


def cmd_eval(args) -> int:
    cfg = _run_config(args)
    split = _load_split(cfg, cfg.eval.split)
    models = _load_models(cfg)
    pool = group_filter(split, cfg.eval.group, cfg.seed)
    metrics, results = evaluate_pipeline(cfg.pipeline.mode, split, models, top_n=cfg.pipeline.top_n,
                                         passages=pool, retrieve_top_n=cfg.pipeline.retrieve_top_n)
    out = Path(cfg.eval.out_dir)
    _write(out / "metrics.json", _dump({"format_version": FORMAT_VERSION, "mode": cfg.pipeline.mode,
                                        "passage_group": cfg.eval.group, "split": cfg.eval.split,
                                        **metrics, "config": cfg.to_dict()}))
    _write(out / "answers.jsonl", "".join(json.dumps(r.to_record(), sort_keys=True) + "\n" for r in results))
    _write(out / "run_log.jsonl", "".join(json.dumps({"format_version": FORMAT_VERSION, **r.to_log()},
                                                     sort_keys=True) + "\n" for r in results))
    shown = ", ".join(f"{k}={v:.4f}" for k, v in metrics.items() if isinstance(v, float))
    print(f"{cfg.pipeline.mode} on {cfg.eval.split} ({cfg.eval.group}): {shown}, n={metrics['n_questions']}")
    return 0


def cmd_cost_report(args) -> int:
    cfg = _run_config(args)
    paths = list(args.run_log or cfg.eval.run_logs)
    if not paths:
        raise ConfigError("eval.run_logs", "give at least one run log")
    records = []
    for p in paths:
        if not Path(p).exists():
            raise ConfigError("eval.run_logs", f"missing run log {p}")
        records.extend(read_jsonl(p))
    report = cost_report(records, cfg.pipeline.costs)
    out = Path(cfg.eval.out_dir)
    text = report.render()
    _write(out / "cost_report.txt", text + "\n")
    _write(out / "cost_report.json", _dump({"format_version": FORMAT_VERSION, **report.to_dict(),
                                            "config": cfg.to_dict()}))
    print(text)
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="passage-as2", description="Passage reranking and in-place answer "
                                     "sentence extraction at desk scale.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log training progress")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-synthetic", help="write a seeded planted-signal raw corpus")
    g.add_argument("--n-questions", type=int, default=500)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out-dir", required=True)
    g.add_argument("--positive-rate", type=float)
    g.add_argument("--distractor-rate", type=float)
    g.add_argument("--n-markers", type=int)
    g.set_defaults(fn=cmd_gen_synthetic)

    b = sub.add_parser("build-corpus", help="window, label and split a raw corpus")
    b.add_argument("--in-dir", required=True)
    b.add_argument("--out-dir", required=True)
    b.add_argument("--group", choices=GROUPS, default="all")
    b.add_argument("--seed", type=int, required=True)
    b.set_defaults(fn=cmd_build_corpus)

    for name, fn, help_ in (("train", cmd_train, "train one model"),
                            ("eval", cmd_eval, "evaluate a pipeline mode"),
                            ("cost-report", cmd_cost_report, "aggregate run logs into a cost table")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="JSON run config")
        p.add_argument("--seed", type=int, help="overrides the config seed")
        p.add_argument("--set", action="append", metavar="PATH=VALUE",
                       help="override a config field, e.g. --set train.lr=0.002 (value parsed as JSON)")
        if name == "cost-report":
            p.add_argument("--run-log", action="append", help="run log to include (default: eval.run_logs)")
        p.set_defaults(fn=fn)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.fn(args)
    except (ConfigError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
