"""Command-line entry point: ``python -m afn <command> ...``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import glob
import json
import logging
import sys
from pathlib import Path

from . import synth
from .analysis import inspect_checkpoints
from .checkpoint import build_model, load_checkpoint, read_document, save_checkpoint
from .data import DataError, fit_schema, load_dataset
from .ensemble import (
    evaluate_ensemble,
    is_ensemble_document,
    load_ensemble,
    save_ensemble,
    train_ensemble,
)
from .gradcheck import GRADCHECK_TOLERANCE, tiny_problem
from .model import ModelConfig
from .training import NumericError, TrainConfig, evaluate, grad_check, train, write_metrics_log

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 2, 3, 4

log = logging.getLogger("afn")


def _hidden(text: str) -> tuple:
    text = text.strip()
    if text in ("", "0", "none"):
        return ()
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"--hidden expects comma-separated widths, got {text!r}")


def _onoff(text: str) -> bool:
    if text not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return text == "on"


def _model_config(args) -> ModelConfig:
    return ModelConfig(
        embed_dim=args.embed_dim,
        log_neurons=args.log_neurons,
        hidden=args.hidden,
        bn=args.bn,
        ln_bn_site=args.ln_bn_site,
        max_order=args.max_order,
    )


def _train_config(args) -> TrainConfig:
    return TrainConfig(learning_rate=args.lr, batch_size=args.batch, max_epochs=args.epochs,
                       patience=args.patience, seed=args.seed)


def _train_one(kind, schema, train_set, val_set, args, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    cfg = _model_config(args)
    if kind == "hofm" and not 2 <= cfg.max_order <= len(schema):
        raise ValueError(f"max-order must be >= 2 and <= the number of fields ({len(schema)})")
    model = build_model(kind, schema, cfg, seed=args.seed)
    on_step = on_epoch = None
    if kind == "afn":
        snap_dir = out / "snapshots"
        snap_dir.mkdir(exist_ok=True)

        def snap(m, step, epoch):
            save_checkpoint(m, snap_dir / f"snap_{step:08d}.json", step=step, epoch=epoch)

        every = args.snapshot_every
        if every > 0:
            on_step = lambda m, step, epoch: step % every == 0 and snap(m, step, epoch)  # noqa: E731
        else:
            on_epoch = lambda m, rec, step: snap(m, step, rec.epoch)  # noqa: E731

    result = train(model, train_set, val_set, _train_config(args), on_step=on_step, on_epoch=on_epoch)
    ckpt = out / "checkpoint.json"
    save_checkpoint(model, ckpt, step=result.steps, best_epoch=result.best_epoch,
                    best_val_auc=result.best_auc)
    write_metrics_log(result.log, out / "metrics.csv")
    print(f"{kind}: best_epoch={result.best_epoch} val_auc={result.best_auc!r} -> {ckpt}")
    return ckpt


def cmd_train(args) -> int:
    schema = fit_schema(args.data)
    train_set = load_dataset(args.data, schema)
    val_set = load_dataset(args.val, schema)
    out = Path(args.out)
    if args.model != "afn+":
        _train_one(args.model, schema, train_set, val_set, args, out)
        return 0
    afn_ckpt = _train_one("afn", schema, train_set, val_set, args, out / "afn")
    dnn_ckpt = _train_one("dnn", schema, train_set, val_set, args, out / "dnn")
    params, report = train_ensemble(afn_ckpt, dnn_ckpt, train_set, val_set, _train_config(args))
    save_ensemble(out / "ensemble.json", params, Path("afn") / "checkpoint.json",
                  Path("dnn") / "checkpoint.json")
    print(f"afn+: w1={params.w1!r} w2={params.w2!r} b={params.b!r} val_logloss={report.val_logloss!r} "
          f"(afn {report.afn_val_logloss!r}, dnn {report.dnn_val_logloss!r})")
    return 0


def cmd_evaluate(args) -> int:
    if not Path(args.ckpt).is_file():
        raise FileNotFoundError(f"checkpoint not found: {args.ckpt}")
    doc = read_document(args.ckpt)
    if is_ensemble_document(doc):
        params, afn, dnn = load_ensemble(args.ckpt, doc)
        dataset = load_dataset(args.data, afn.schema)
        metrics = evaluate_ensemble(params, afn, dnn, dataset)
    else:
        model = load_checkpoint(args.ckpt)
        dataset = load_dataset(args.data, model.schema)
        metrics = evaluate(model, dataset)
    print(f"auc={metrics.auc!r} logloss={metrics.logloss!r}")
    if args.metrics_out:
        path = Path(args.metrics_out)
        fresh = not path.exists() or path.stat().st_size == 0
        with open(path, "a", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if fresh:
                w.writerow(["ckpt", "data", "auc", "logloss"])
            w.writerow([args.ckpt, args.data, repr(metrics.auc), repr(metrics.logloss)])
    return 0


def cmd_ensemble(args) -> int:
    afn = load_checkpoint(args.afn)
    schema = afn.schema
    train_set = load_dataset(args.data, schema)
    val_set = load_dataset(args.val, schema)
    params, report = train_ensemble(afn, load_checkpoint(args.dnn), train_set, val_set,
                                    steps=args.steps, learning_rate=args.lr)
    save_ensemble(args.out, params, Path(args.afn).resolve(), Path(args.dnn).resolve())
    print(f"w1={params.w1!r} w2={params.w2!r} b={params.b!r} val_logloss={report.val_logloss!r}")
    return 0


def cmd_inspect(args) -> int:
    paths = sorted(glob.glob(args.ckpt_glob))
    written = inspect_checkpoints(paths, args.out, top_k=args.top_k, case_path=args.case_ckpt)
    for p in written.values():
        print(p)
    return 0


def cmd_gradcheck(args) -> int:
    model, batch = tiny_problem(args.model, seed=args.seed, bn=args.bn)
    result = grad_check(model, batch, h=args.h)
    print(f"max_rel_error={result.max_rel_error:.3e}")
    for name, err in result.per_param.items():
        log.info("%s %.3e", name, err)
    return 0 if result.max_rel_error <= GRADCHECK_TOLERANCE else EXIT_NUMERIC


def cmd_gen_synth(args) -> int:
    planted = synth.write_synth(args.out, args.n, args.seed, args.pattern, args.fields,
                                args.cardinality, args.pattern_seed)
    print(json.dumps({"fields": list(planted.fields), "values": list(planted.values)}))
    return 0


def cmd_fit_schema(args) -> int:
    schema = fit_schema(args.data)
    text = json.dumps([f.to_dict() for f in schema], indent=1)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="afn", description="Adaptive factorization networks and baselines")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train one model class on a TSV dataset")
    t.add_argument("--model", required=True, choices=["lr", "fm", "hofm", "dnn", "afn", "afn+"])
    t.add_argument("--data", required=True, help="training TSV; also fits the schema")
    t.add_argument("--val", required=True)
    t.add_argument("--out", required=True, help="output directory")
    t.add_argument("--log-neurons", type=int, default=32)
    t.add_argument("--hidden", type=_hidden, default=(32, 32), help="e.g. 400,400,400; '' for none")
    t.add_argument("--embed-dim", type=int, default=8)
    t.add_argument("--max-order", type=int, default=3)
    t.add_argument("--lr", type=float, default=0.001)
    t.add_argument("--batch", type=int, default=4096)
    t.add_argument("--epochs", type=int, default=20)
    t.add_argument("--patience", type=int, default=3)
    t.add_argument("--bn", type=_onoff, default=True, help="on|off")
    t.add_argument("--ln-bn-site", choices=["ln", "sum"], default="ln")
    t.add_argument("--snapshot-every", type=int, default=0,
                   help="AFN snapshot cadence in steps; 0 snapshots at each epoch end")
    t.add_argument("--seed", type=int, default=0)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("evaluate", help="AUC and log loss of a checkpoint on a dataset")
    e.add_argument("--ckpt", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--metrics-out")
    e.set_defaults(func=cmd_evaluate)

    en = sub.add_parser("ensemble", help="blend trained AFN and DNN checkpoints")
    en.add_argument("--afn", required=True)
    en.add_argument("--dnn", required=True)
    en.add_argument("--data", required=True)
    en.add_argument("--val", required=True)
    en.add_argument("--out", required=True)
    en.add_argument("--steps", type=int, default=2000)
    en.add_argument("--lr", type=float, default=0.01)
    en.set_defaults(func=cmd_ensemble)

    i = sub.add_parser("inspect-orders", help="order tables from AFN snapshots")
    i.add_argument("--ckpt-glob", required=True)
    i.add_argument("--out", default=".")
    i.add_argument("--top-k", type=int, default=None)
    i.add_argument("--case-ckpt", default=None, help="checkpoint for the case study (default: last snapshot)")
    i.set_defaults(func=cmd_inspect)

    g = sub.add_parser("gradcheck", help="finite-difference check on a tiny model")
    g.add_argument("--model", default="afn", choices=["lr", "fm", "hofm", "dnn", "afn"])
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--bn", type=_onoff, default=True)
    g.add_argument("--h", type=float, default=1e-5)
    g.set_defaults(func=cmd_gradcheck)

    s = sub.add_parser("gen-synth", help="write a synthetic dataset")
    s.add_argument("--pattern", default="cross3", choices=list(synth.PATTERNS))
    s.add_argument("--out", required=True)
    s.add_argument("--n", type=int, default=50000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--fields", type=int, default=8)
    s.add_argument("--cardinality", type=int, default=10)
    s.add_argument("--pattern-seed", type=int, default=0)
    s.set_defaults(func=cmd_gen_synth)

    f = sub.add_parser("fit-schema", help="print the schema fitted on a TSV file")
    f.add_argument("--data", required=True)
    f.add_argument("--out")
    f.set_defaults(func=cmd_fit_schema)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except (DataError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
