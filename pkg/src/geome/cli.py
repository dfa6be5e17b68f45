"""Command-line entry point.

Subcommands: train, eval, score, inspect, gen-synth, sweep.  Every
subcommand is deterministic under a fixed --seed.  Heavy imports happen
after argument parsing so that --threads can bound BLAS parallelism.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

DEFAULTS = {"lr": 0.1, "batch": 1000, "dim": 1000, "lambda": 0.01, "epochs": 100}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geome",
        description="Geometric-algebra knowledge graph embeddings",
    )
    parser.add_argument("--threads", type=int, default=None,
                        help="bound BLAS worker threads (default: library choice)")
    sub = parser.add_subparsers(dest="command", required=True)

    tr = sub.add_parser("train", help="train a model and write a checkpoint")
    tr.add_argument("--model", choices=["geome1d", "geome2d", "geome3d"], default="geome2d")
    tr.add_argument("--train", required=True, help="training triples TSV")
    tr.add_argument("--valid", required=True, help="validation triples TSV")
    tr.add_argument("--test", default=None, help="optional test TSV, evaluated after training")
    tr.add_argument("--dim", type=int, default=DEFAULTS["dim"])
    tr.add_argument("--lambda", dest="lambda_reg", type=float, default=DEFAULTS["lambda"])
    tr.add_argument("--lr", type=float, default=DEFAULTS["lr"])
    tr.add_argument("--batch", type=int, default=DEFAULTS["batch"])
    tr.add_argument("--epochs", type=int, default=DEFAULTS["epochs"])
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--out", required=True, help="checkpoint path")
    tr.add_argument("--init-std", type=float, default=1e-2)
    tr.add_argument("--eval-every", type=int, default=5)
    tr.add_argument("--patience", type=int, default=3)
    tr.add_argument("--precision", choices=["f32", "f64"], default="f64")
    tr.add_argument("--constrain-symmetric", action="append", default=[],
                    metavar="REL", help="penalize |phi(h,REL,t)-phi(t,REL,h)|^2")
    tr.add_argument("--constrain-inverse", action="append", default=[],
                    metavar="R1,R2", help="penalize |phi(h,R1,t)-phi(t,R2,h)|^2")
    tr.add_argument("--constraint-weight", type=float, default=1.0)

    ev = sub.add_parser("eval", help="filtered link-prediction metrics")
    ev.add_argument("--ckpt", required=True)
    ev.add_argument("--ckpt2", default=None, help="second checkpoint for ensemble scoring")
    ev.add_argument("--test", required=True)
    ev.add_argument("--filter", required=True,
                    help="comma-separated TSV files whose triples are filtered out")
    ev.add_argument("--raw", action="store_true", help="skip filtering (diagnostic only)")

    sc = sub.add_parser("score", help="print the score of one triple")
    sc.add_argument("--ckpt", required=True)
    sc.add_argument("--triple", required=True, help='tab-separated "h<TAB>r<TAB>t"')

    ins = sub.add_parser("inspect", help="blade-group norms of a relation embedding")
    ins.add_argument("--ckpt", required=True)
    ins.add_argument("--relation", required=True)
    ins.add_argument("--pair", default=None, help="partner relation for conjugacy distance")

    gs = sub.add_parser("gen-synth", help="generate a synthetic pattern graph")
    gs.add_argument("--out", required=True, help="output directory")
    gs.add_argument("--entities", type=int, default=200)
    gs.add_argument("--sym", type=int, default=2)
    gs.add_argument("--antisym", type=int, default=2)
    gs.add_argument("--inverse-pairs", type=int, default=2)
    gs.add_argument("--compositions", type=int, default=2)
    gs.add_argument("--density", type=float, default=0.02)
    gs.add_argument("--seed", type=int, default=0)
    gs.add_argument("--test-fraction", type=float, default=0.3)
    gs.add_argument("--valid-fraction", type=float, default=0.1)

    sw = sub.add_parser("sweep", help="retrain across dimensionalities, emit CSV")
    sw.add_argument("--model", choices=["geome1d", "geome2d", "geome3d"], default="geome2d")
    sw.add_argument("--train", required=True)
    sw.add_argument("--valid", required=True)
    sw.add_argument("--test", required=True)
    sw.add_argument("--dims", default="20,50,100,200,500,1000")
    sw.add_argument("--lambda", dest="lambda_reg", type=float, default=DEFAULTS["lambda"])
    sw.add_argument("--lr", type=float, default=DEFAULTS["lr"])
    sw.add_argument("--batch", type=int, default=DEFAULTS["batch"])
    sw.add_argument("--epochs", type=int, default=DEFAULTS["epochs"])
    sw.add_argument("--seed", type=int, default=0)
    sw.add_argument("--out", required=True, help="CSV path")
    return parser


def _load_splits(train_path, valid_path, test_path):
    from . import data

    train = data.load_triples(train_path)
    valid = data.load_triples(valid_path, train.entity_ids, train.relation_ids)
    test = None
    if test_path:
        test = data.load_triples(test_path, train.entity_ids, train.relation_ids)
    return train, valid, test


def _train_config(args, grade):
    from .train import TrainConfig

    return TrainConfig(
        dim_k=args.dim,
        grade=grade,
        lr=args.lr,
        batch_size=args.batch,
        lambda_reg=args.lambda_reg,
        max_epochs=args.epochs,
        seed=args.seed,
        init_std=getattr(args, "init_std", 1e-2),
        eval_every=getattr(args, "eval_every", 5),
        patience=getattr(args, "patience", 3),
        precision=getattr(args, "precision", "f64"),
        constraint_weight=getattr(args, "constraint_weight", 1.0),
    )


def _config_echo(args, grade, raw_relations):
    return {
        "model": args.model,
        "grade": grade,
        "dim_k": args.dim,
        "lr": args.lr,
        "batch": args.batch,
        "lambda": args.lambda_reg,
        "epochs": args.epochs,
        "seed": args.seed,
        "reciprocal": True,
        "num_raw_relations": raw_relations,
    }


def _cmd_train(args) -> int:
    from . import data
    from .model import MODEL_GRADES
    from .train import augment_reciprocal, fit

    grade = MODEL_GRADES[args.model]
    train_raw, valid, test = _load_splits(args.train, args.valid, args.test)
    print(
        f"train model={args.model} lr={args.lr} b={args.batch} k={args.dim} "
        f"lambda={args.lambda_reg} epochs={args.epochs} seed={args.seed} "
        f"entities={train_raw.n_entities} relations={train_raw.n_relations} "
        f"triples={train_raw.n_triples}",
        flush=True,
    )
    store = augment_reciprocal(train_raw)
    cfg = _train_config(args, grade)

    sym_ids = []
    for name in args.constrain_symmetric:
        if name not in store.relation_ids:
            raise ValueError(f"unknown relation {name!r} in --constrain-symmetric")
        sym_ids.append(store.relation_ids[name])
    inv_pairs = []
    for spec in args.constrain_inverse:
        names = spec.split(",")
        if len(names) != 2:
            raise ValueError(f"--constrain-inverse expects R1,R2; got {spec!r}")
        for name in names:
            if name not in store.relation_ids:
                raise ValueError(f"unknown relation {name!r} in --constrain-inverse")
        inv_pairs.append((store.relation_ids[names[0]], store.relation_ids[names[1]]))
    cfg.constrain_symmetric = tuple(sym_ids)
    cfg.constrain_inverse = tuple(inv_pairs)

    table, history = fit(store, valid, cfg)
    data.save_checkpoint(table, _config_echo(args, grade, train_raw.n_relations), args.out)
    print(f"checkpoint={args.out} best_epoch={history.best_epoch} "
          f"best_mrr={history.best_mrr:.6f}", flush=True)

    if test is not None:
        from .evaluation import FilterIndex, evaluate_split

        filt = FilterIndex.from_stores([train_raw, valid, test])
        metrics = evaluate_split(table, test, filt, use_reciprocal=True)
        print(metrics.to_text())
        print(metrics.to_json())
    return 0


def _load_model(path):
    from . import data

    table, config = data.load_checkpoint(path)
    if table.entity_names is None or table.relation_names is None:
        raise ValueError(f"checkpoint {path} carries no dictionaries")
    return table, config


def _cmd_eval(args) -> int:
    from . import data
    from .evaluation import FilterIndex, evaluate_split

    table, config = _load_model(args.ckpt)
    tables = [table]
    if args.ckpt2:
        other, other_config = _load_model(args.ckpt2)
        if other.entity_names != table.entity_names or \
                other.relation_names != table.relation_names:
            raise ValueError("ensemble checkpoints were built from different dictionaries")
        tables.append(other)
        config = {**other_config, **config}

    ent_ids = {n: i for i, n in enumerate(table.entity_names)}
    rel_ids = {n: i for i, n in enumerate(table.relation_names)}
    test = data.load_triples(args.test, ent_ids, rel_ids)
    filter_stores = [data.load_triples(p, ent_ids, rel_ids)
                     for p in args.filter.split(",") if p]
    filt = FilterIndex.from_stores(filter_stores)
    metrics = evaluate_split(
        tables, test, filt,
        use_reciprocal=bool(config.get("reciprocal", True)),
        filtered=not args.raw,
    )
    print(metrics.to_text())
    print(metrics.to_json())
    return 0


def _cmd_score(args) -> int:
    from .model import score_triple

    table, _ = _load_model(args.ckpt)
    fields = args.triple.split("\t")
    if len(fields) != 3:
        raise ValueError('expected --triple "h<TAB>r<TAB>t"')
    h, r, t = fields
    ent_ids = {n: i for i, n in enumerate(table.entity_names)}
    rel_ids = {n: i for i, n in enumerate(table.relation_names)}
    for name, ids, kind in ((h, ent_ids, "entity"), (r, rel_ids, "relation"),
                            (t, ent_ids, "entity")):
        if name not in ids:
            raise ValueError(f"unknown {kind} {name!r}")
    print(f"{score_triple(table, ent_ids[h], rel_ids[r], ent_ids[t]):.12g}")
    return 0


def _cmd_inspect(args) -> int:
    from .model import inspect_relation

    table, _ = _load_model(args.ckpt)
    rel_ids = {n: i for i, n in enumerate(table.relation_names)}
    if args.relation not in rel_ids:
        raise ValueError(f"unknown relation {args.relation!r}")
    partner = None
    if args.pair is not None:
        if args.pair not in rel_ids:
            raise ValueError(f"unknown relation {args.pair!r}")
        partner = rel_ids[args.pair]
    report = inspect_relation(table, rel_ids[args.relation], partner)
    for line in report.lines():
        print(line)
    return 0


def _cmd_gen_synth(args) -> int:
    from . import data

    spec = data.SyntheticSpec(
        n_entities=args.entities,
        n_sym=args.sym,
        n_antisym=args.antisym,
        n_inverse_pairs=args.inverse_pairs,
        n_comp_triples=args.compositions,
        density=args.density,
        seed=args.seed,
        test_fraction=args.test_fraction,
        valid_fraction=args.valid_fraction,
    )
    train, valid, test, manifest = data.gen_synthetic_kg(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    data.save_triples(train, out / "train.tsv")
    data.save_triples(valid, out / "valid.tsv")
    data.save_triples(test, out / "test.tsv")
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    print(f"out={out} entities={train.n_entities} relations={train.n_relations} "
          f"train={train.n_triples} valid={valid.n_triples} test={test.n_triples}",
          flush=True)
    return 0


def _cmd_sweep(args) -> int:
    from .evaluation import FilterIndex, evaluate_split
    from .model import MODEL_GRADES
    from .train import augment_reciprocal, fit

    grade = MODEL_GRADES[args.model]
    train_raw, valid, test = _load_splits(args.train, args.valid, args.test)
    store = augment_reciprocal(train_raw)
    filt = FilterIndex.from_stores([train_raw, valid, test])
    dims = [int(d) for d in args.dims.split(",") if d]
    if not dims:
        raise ValueError("--dims must list at least one dimensionality")

    rows = []
    for dim in dims:
        args.dim = dim
        cfg = _train_config(args, grade)
        print(f"sweep dim={dim}", flush=True)
        table, _ = fit(store, valid, cfg)
        metrics = evaluate_split(table, test, filt, use_reciprocal=True)
        rows.append((dim, metrics.mrr, metrics.hits[10]))
        print(f"sweep dim={dim} mrr={metrics.mrr:.6f} hits10={metrics.hits[10]:.6f}",
              flush=True)

    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("dim,mrr,hits10\n")
        for dim, mrr, hits10 in rows:
            fh.write(f"{dim},{mrr:.6f},{hits10:.6f}\n")
    print(f"csv={args.out}", flush=True)
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "eval": _cmd_eval,
    "score": _cmd_score,
    "inspect": _cmd_inspect,
    "gen-synth": _cmd_gen_synth,
    "sweep": _cmd_sweep,
}


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None:
        if args.threads < 1:
            raise ValueError("--threads must be >= 1")
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                    "NUMEXPR_NUM_THREADS"):
            os.environ[var] = str(args.threads)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, IndexError, OSError, RuntimeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
