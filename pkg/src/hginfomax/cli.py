"""Command-line entry point: train / eval / sweep / project / gen-synthetic.

Configuration is a flat `key = value` text file validated against a closed
schema; command-line `--set key=value` overrides win over the file, which
wins over built-in defaults. The effective config is echoed into the output
directory. Exit codes: 0 success, 1 runtime failure, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import clustering, dataio, evaluation
from .graph import materialize_metapath
from .objective import TrainConfig, train


class ConfigError(ValueError):
    pass


def _parse_bool(s):
    if str(s).lower() in ("1", "true", "yes", "on"):
        return True
    if str(s).lower() in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {s!r}")


# key -> (parser, default, help)
SCHEMA = {
    "dataset": (str, "", "path to the dataset directory"),
    "out": (str, "out", "output directory"),
    "split_metapath": (str, "", "meta-path whose edges are hidden (default: first)"),
    "theta": (float, 0.5, "global/cluster loss mix in [0,1]"),
    "dim": (int, 16, "embedding dimension d"),
    "heads": (int, 4, "attention heads per meta-path (must divide dim)"),
    "d_att": (int, 128, "semantic attention hidden width"),
    "clusters": (int, 3, "cluster count R"),
    "beta": (float, 100.0, "assignment sharpness"),
    "kmeans_iters": (int, 10, "soft k-means iterations per refit"),
    "lr": (float, 1e-3, "learning rate"),
    "max_epochs": (int, 1000, "training epoch cap"),
    "patience": (int, 20, "early-stopping patience"),
    "seed": (int, 0, "master RNG seed"),
    "val_frac": (float, 0.05, "validation edge fraction"),
    "test_frac": (float, 0.10, "test edge fraction"),
    "activation": (str, "elu", "encoder nonlinearity: elu|tanh|sigmoid"),
    "eq8_literal": (_parse_bool, False, "use the printed assignment sign (audit only)"),
    "bilinear": (_parse_bool, False, "learned bilinear discriminator matrix"),
    "normalize_features": (_parse_bool, True, "row-L2 normalize input features"),
}


def load_config(path=None, overrides=()):
    cfg = {k: d for k, (_, d, _) in SCHEMA.items()}

    def apply(key, value, where):
        if key not in SCHEMA:
            raise ConfigError(f"{where}: unknown config key {key!r}")
        try:
            cfg[key] = SCHEMA[key][0](value)
        except (ValueError, ConfigError) as exc:
            raise ConfigError(f"{where}: bad value for {key!r}: {exc}") from exc

    if path:
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key = value")
                key, value = (s.strip() for s in line.split("=", 1))
                apply(key, value, f"{path}:{lineno}")
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = (s.strip() for s in item.split("=", 1))
        apply(key, value, "--set")
    if not 0.0 <= cfg["theta"] <= 1.0:
        raise ConfigError(f"theta must be in [0,1], got {cfg['theta']}")
    return cfg


def _train_config(cfg) -> TrainConfig:
    return TrainConfig(theta=cfg["theta"], embed_dim=cfg["dim"], heads=cfg["heads"],
                       d_att=cfg["d_att"], clusters=cfg["clusters"], beta=cfg["beta"],
                       kmeans_iters=cfg["kmeans_iters"], learning_rate=cfg["lr"],
                       max_epochs=cfg["max_epochs"], patience=cfg["patience"],
                       seed=cfg["seed"], activation=cfg["activation"],
                       eq8_literal=cfg["eq8_literal"], bilinear=cfg["bilinear"])


def _fmt(x):
    return "%.17g" % x


def _load_and_split(cfg):
    if not cfg["dataset"]:
        raise ConfigError("no dataset path configured")
    if not os.path.isdir(cfg["dataset"]):
        raise ConfigError(f"dataset directory not found: {cfg['dataset']}")
    bundle = dataio.load_dataset(cfg["dataset"], normalize_features=cfg["normalize_features"])
    mpgs = [materialize_metapath(bundle.graph, spec) for spec in bundle.metapaths]
    names = [s.name for s in bundle.metapaths]
    split_name = cfg["split_metapath"] or names[0]
    if split_name not in names:
        raise ConfigError(f"split_metapath {split_name!r} not among {names}")
    idx = names.index(split_name)
    split = evaluation.split_edges(mpgs[idx], cfg["seed"],
                                   val_frac=cfg["val_frac"], test_frac=cfg["test_frac"])
    train_mpgs = list(mpgs)
    train_mpgs[idx] = split.train_mpg
    return bundle, train_mpgs, split


def run_training(cfg):
    """Shared train pipeline: split, train, metrics on both partitions."""
    bundle, train_mpgs, split = _load_and_split(cfg)
    result = train(train_mpgs, bundle.features, _train_config(cfg))
    H = result.output.fused
    metrics = {}
    for part, pos, neg in (("val", split.val_pos, split.val_neg),
                           ("test", split.test_pos, split.test_neg)):
        ps = evaluation.score_pairs(H, pos)
        ns = evaluation.score_pairs(H, neg)
        metrics[f"{part}_auc"] = evaluation.auc(ps, ns)
        metrics[f"{part}_ap"] = evaluation.average_precision(ps, ns)
    return bundle, split, result, metrics


def _write_outputs(cfg, bundle, result, metrics):
    out = cfg["out"]
    os.makedirs(out, exist_ok=True)
    hard = np.argmax(result.cluster_state.assignments, axis=1)
    dataio.write_embeddings(result.output.fused, hard, os.path.join(out, "embeddings.hef"))
    np.savez(os.path.join(out, "params.npz"), **result.params.to_dict())
    with open(os.path.join(out, "train.log"), "w", encoding="utf-8", newline="\n") as fh:
        for epoch, lg, lc, total in result.log:
            fh.write(f"{epoch}\t{_fmt(lg)}\t{_fmt(lc)}\t{_fmt(total)}\n")
    with open(os.path.join(out, "metrics.txt"), "w", encoding="utf-8", newline="\n") as fh:
        for key, value in metrics.items():
            fh.write(f"{key}={_fmt(value)}\n")
    with open(os.path.join(out, "config.txt"), "w", encoding="utf-8", newline="\n") as fh:
        for key in SCHEMA:
            fh.write(f"{key} = {cfg[key]}\n")


def cmd_train(args):
    cfg = load_config(args.config, args.set or ())
    if args.out:
        cfg["out"] = args.out
    bundle, split, result, metrics = run_training(cfg)
    _write_outputs(cfg, bundle, result, metrics)
    print(f"val auc={_fmt(metrics['val_auc'])} ap={_fmt(metrics['val_ap'])}")
    print(f"outputs written to {cfg['out']}")
    return 0


def cmd_eval(args):
    cfg = load_config(args.config, args.set or ())
    if not os.path.exists(args.embeddings):
        raise ConfigError(f"embeddings file not found: {args.embeddings}")
    H, _ = dataio.read_embeddings(args.embeddings)
    bundle, _, split = _load_and_split(cfg)
    if H.shape[0] != bundle.graph.target_count:
        raise ConfigError(f"embeddings have {H.shape[0]} rows, dataset has "
                          f"{bundle.graph.target_count} target nodes")
    ps = evaluation.score_pairs(H, split.test_pos)
    ns = evaluation.score_pairs(H, split.test_neg)
    line = f"auc={_fmt(evaluation.auc(ps, ns))} ap={_fmt(evaluation.average_precision(ps, ns))}"
    if args.clusters:
        state = clustering.fit(H, args.clusters, cfg["beta"], cfg["kmeans_iters"], cfg["seed"])
        sil = evaluation.silhouette(H, np.argmax(state.assignments, axis=1))
        line += f" sil={_fmt(sil)}"
    print(line)
    return 0


def _parse_values(spec_str, param):
    cast = float if param == "theta" else int
    if ":" in spec_str:
        start, stop, step = (float(x) for x in spec_str.split(":"))
        n = int(round((stop - start) / step)) + 1
        vals = [round(start + i * step, 10) for i in range(n)]
    else:
        vals = [cast(x) for x in spec_str.split(",") if x.strip()]
    if not vals:
        raise ConfigError("empty sweep value list")
    return vals


def cmd_sweep(args):
    cfg = load_config(args.config, args.set or ())
    key = {"theta": "theta", "R": "clusters", "clusters": "clusters"}.get(args.param)
    if key is None:
        raise ConfigError(f"unknown sweep parameter {args.param!r} (use theta or R)")
    values = _parse_values(args.values, "theta" if key == "theta" else "R")
    print("value\tauc\tap\tsil")
    for value in values:
        run_cfg = dict(cfg)
        run_cfg[key] = SCHEMA[key][0](value)
        _, _, result, metrics = run_training(run_cfg)
        hard = np.argmax(result.cluster_state.assignments, axis=1)
        try:
            sil = evaluation.silhouette(result.output.fused, hard)
        except evaluation.EvalError:
            sil = float("nan")
        print(f"{value}\t{_fmt(metrics['test_auc'])}\t{_fmt(metrics['test_ap'])}\t{_fmt(sil)}")
    return 0


def cmd_project(args):
    if args.clusters < 2:
        raise ConfigError("need at least 2 clusters to project")
    if not os.path.exists(args.embeddings):
        raise ConfigError(f"embeddings file not found: {args.embeddings}")
    H, _ = dataio.read_embeddings(args.embeddings)
    xy = evaluation.pca_project(H, 2)
    state = clustering.fit(H, args.clusters, args.beta, 10, args.seed)
    hard = np.argmax(state.assignments, axis=1)
    dest = open(args.out, "w", encoding="utf-8", newline="\n") if args.out else sys.stdout
    try:
        for i in range(H.shape[0]):
            dest.write(f"{i}\t{_fmt(xy[i, 0])}\t{_fmt(xy[i, 1])}\t{hard[i]}\n")
    finally:
        if args.out:
            dest.close()
    return 0


def cmd_gen_synthetic(args):
    spec = dataio.SyntheticSpec(n_target=args.n_target, n_aux=args.n_aux,
                                n_comm=args.n_comm, p_in=args.p_in, p_out=args.p_out,
                                feature_dim=args.feature_dim,
                                feature_noise_sigma=args.noise, seed=args.seed)
    dataio.save_dataset(dataio.generate_synthetic(spec), args.out)
    print(f"synthetic dataset written to {args.out}")
    return 0


def _schema_help():
    return "config keys: " + "; ".join(f"{k} ({h}, default {d})"
                                       for k, (_, d, h) in SCHEMA.items())


def build_parser():
    parser = argparse.ArgumentParser(prog="hginfomax",
                                     description="Unsupervised heterogeneous-graph "
                                                 "embedding via cluster-level infomax.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key; " + _schema_help())

    p = sub.add_parser("train", help="train and write embeddings/log/metrics",
                       epilog=_schema_help())
    common(p)
    p.add_argument("--out", help="output directory (overrides config key 'out')")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="link-prediction metrics on the test partition",
                       epilog=_schema_help())
    common(p)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--clusters", type=int, default=0,
                   help="also report the silhouette score with this many clusters")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="one full run per hyperparameter value",
                       epilog=_schema_help())
    common(p)
    p.add_argument("--param", required=True, help="theta or R")
    p.add_argument("--values", required=True,
                   help="comma list (3,4,5) or start:stop:step (0.1:0.9:0.1)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("project", help="2-D PCA projection with hard cluster labels")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--clusters", type=int, required=True)
    p.add_argument("--beta", type=float, default=100.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output file (default: stdout)")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("gen-synthetic", help="write a planted-community dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--n-target", type=int, default=300)
    p.add_argument("--n-aux", type=int, default=150)
    p.add_argument("--n-comm", type=int, default=3)
    p.add_argument("--p-in", type=float, default=0.05)
    p.add_argument("--p-out", type=float, default=0.005)
    p.add_argument("--feature-dim", type=int, default=16)
    p.add_argument("--noise", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen_synthetic)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - one-line diagnostic, non-zero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
