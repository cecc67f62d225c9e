"""Command-line interface.

Subcommands: ``train-center``, ``train-ranker``, ``predict``, ``evaluate``,
``selfcheck``. Options may also come from a ``--config`` file of ``key=value``
lines; explicit flags override file values. ``--model`` may be repeated where
a command needs both a center and a ranker checkpoint (each checkpoint knows
its own kind).
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .center import CenterModel
from .diffengine import ParamStore
from .pipeline import (RunConfig, evaluate, load_dataset, predict,
                       split_records, train_center, train_ranker)
from .ranker import RankerModel


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", help="reaction file (reactants>reagents>products per line)")
    parser.add_argument("--model", action="append", default=None,
                        help="checkpoint path; repeatable. For train-ranker: the "
                             "center checkpoint or 'oracle'")
    parser.add_argument("--out", help="output checkpoint or report path")
    parser.add_argument("--k", type=int, default=None, help="top-K reactive pairs")
    parser.add_argument("--depth", type=int, default=None, help="relabeling rounds")
    parser.add_argument("--hidden", type=int, default=None, help="hidden width")
    parser.add_argument("--max-changes", type=int, default=None,
                        help="max simultaneous bond edits per candidate")
    parser.add_argument("--epochs", type=int, default=None)
    parser.add_argument("--batch", type=int, default=None)
    parser.add_argument("--lr", type=float, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--variant", choices=["local", "global", "wln", "wldn"],
                        default=None)
    parser.add_argument("--augment-truth", action="store_true", default=None,
                        help="insert the true product when enumeration misses it")
    parser.add_argument("--config", help="key=value config file; flags override")
    parser.add_argument("--decay", type=float, default=None,
                        help="per-epoch learning-rate decay factor")
    parser.add_argument("--split", default=None,
                        help="train,dev,test fractions, e.g. 0.8,0.1,0.1")
    parser.add_argument("-v", "--verbose", action="store_true")


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides = {}
    for key in ("data", "out", "k", "depth", "hidden", "max_changes", "epochs",
                "batch", "lr", "seed", "variant", "augment_truth", "decay"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "split", None):
        overrides["split"] = tuple(float(x) for x in args.split.split(","))
    if args.config:
        return RunConfig.from_file(args.config, **overrides)
    cfg = RunConfig()
    for key, value in overrides.items():
        cfg = replace(cfg, **{key: value})
    return cfg


def _load_models(paths: list[str] | None):
    """Sort checkpoints into (center, ranker) by their recorded kind."""
    center = ranker = None
    for path in paths or []:
        store = ParamStore.load(path)
        kind = store.metadata.get("kind")
        if kind == "center":
            center = CenterModel.from_store(store)
        elif kind == "ranker":
            ranker = RankerModel.from_store(store)
        else:
            raise SystemExit(f"{path}: unknown checkpoint kind {kind!r}")
    return center, ranker


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="rxnpred",
        description="template-free reaction outcome prediction")
    sub = parser.add_subparsers(dest="command", required=True)

    p_center = sub.add_parser("train-center", help="train the reactive-pair scorer")
    p_ranker = sub.add_parser("train-ranker", help="train the candidate ranker")
    p_predict = sub.add_parser("predict", help="predict products for reactant SMILES")
    p_predict.add_argument("smiles", help="reactant SMILES (atom maps optional)")
    p_predict.add_argument("--top-n", type=int, default=5)
    p_eval = sub.add_parser("evaluate", help="score a test file with both models")
    p_self = sub.add_parser("selfcheck", help="run gradient and oracle suites")
    for p in (p_center, p_ranker, p_predict, p_eval, p_self):
        _add_common(p)

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    if args.command == "selfcheck":
        from .selfcheck import run_selfcheck
        failures = 0
        for result in run_selfcheck(seed=args.seed or 0):
            status = "PASS" if result.passed else "FAIL"
            print(f"[{status}] {result.name}: {result.detail}")
            failures += int(not result.passed)
        return 1 if failures else 0

    cfg = _config_from_args(args)

    if args.command == "train-center":
        if cfg.variant not in ("local", "global"):
            cfg = replace(cfg, variant="local")
        result = train_center(cfg)
        last = result.history[-1]
        print(f"saved {result.checkpoint} (best epoch {result.best_epoch}, "
              f"final train coverage@{cfg.k} {last['train_coverage']:.3f})")
        return 0

    if args.command == "train-ranker":
        if cfg.variant not in ("wln", "wldn"):
            cfg = replace(cfg, variant="wldn")
        center_path = (args.model or ["oracle"])[0]
        cfg = replace(cfg, center=center_path)
        result = train_ranker(cfg)
        last = result.history[-1]
        print(f"saved {result.checkpoint} (best epoch {result.best_epoch}, "
              f"final train P@1 {last['train_p1']:.3f})")
        return 0

    center, ranker = _load_models(args.model)
    if center is None or ranker is None:
        raise SystemExit("this command needs --model for both a center and a "
                         "ranker checkpoint")

    if args.command == "predict":
        result = predict(args.smiles, center, ranker, k=cfg.k,
                         top_n=args.top_n, max_changes=cfg.max_changes,
                         max_candidates=cfg.max_candidates)
        if result.reason:
            print(f"no candidates: {result.reason}")
            return 1
        print(f"top pairs: {result.top_pairs}; {result.n_candidates} candidates"
              + (" (truncated)" if result.truncated else ""))
        for rank, product in enumerate(result.products, 1):
            edit_text = ", ".join(f"({u},{v})->{bond}" for u, v, bond in product.edits)
            print(f"{rank}. {product.smiles}  score={product.score:.4f}  [{edit_text}]")
        return 0

    if args.command == "evaluate":
        if cfg.data is None:
            raise SystemExit("evaluate needs --data")
        records = load_dataset(cfg.data, cfg.max_atoms)
        _, _, test = split_records(records, cfg.split)
        subset = test if test else records
        report = evaluate(subset, center, ranker, cfg)
        print(report.table())
        print()
        for line in report.lines():
            print(line)
        if cfg.out:
            with open(cfg.out, "w", encoding="utf-8") as fh:
                fh.write("\n".join(report.lines()) + "\n")
        return 0

    raise SystemExit(f"unhandled command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
