"""Experiment harness.

Subcommands::

    mimlearn gen       --config cfg.json --out DIR [--seed S]
    mimlearn train     --config cfg.json --out DIR [--seed S]
    mimlearn eval      --model model.json --data data.csv --out metrics.json
    mimlearn sweep     --config cfg.json --out DIR [--threads N]
    mimlearn sq-build  --kind {rcn|contrastive} --k K --out H.json
    mimlearn sq-verify --h H.json --degree D --method {quad|mc} [--n N]

Experiment structure lives in the JSON config; flags carry only paths, the
seed, and the thread count.  Exit codes: 0 success, 2 config error, 3
runtime error.
"""

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .directions import DirectionFinderConfig
from .errors import ConfigError, MimError
from .learner import BatchSampler, LearnerConfig, learn, opt_of_rcn, zero_one_error
from .models import (
    ConfusionMatrix,
    IntersectionOfHalfspaces,
    MulticlassLinearClassifier,
    NoiseSpec,
    dataset_from_csv,
    dataset_to_csv,
    sample_dataset,
    symmetric_confusion,
)
from .partition import load_classifier, save_classifier
from .sq import (
    build_contrastive_confusion_matrix,
    build_rcn_confusion_matrix,
    verify_moment_matching,
)
from .validation import rng_from_seed

METRICS_HEADER = "trial,seed,K,d,noise_kind,noise_rate,opt_est,test_error,k_final,iters"


def _require(obj, key, where):
    if key not in obj:
        raise ConfigError(f"missing config field: {where}.{key}" if where else f"missing config field: {key}")
    return obj[key]


def _load_config(path):
    try:
        with open(path) as f:
            return json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from None


def build_concept(cobj, seed=0, k_override=None, d_override=None):
    kind = _require(cobj, "kind", "concept")
    if kind == "mlc":
        weights = np.asarray(_require(cobj, "weights", "concept"), dtype=float)
        biases = np.asarray(_require(cobj, "biases", "concept"), dtype=float)
        return MulticlassLinearClassifier(weights.reshape(len(biases), -1), biases)
    if kind == "intersection":
        weights = np.asarray(_require(cobj, "weights", "concept"), dtype=float)
        biases = np.asarray(_require(cobj, "biases", "concept"), dtype=float)
        return IntersectionOfHalfspaces(weights.reshape(len(biases), -1), biases)
    if kind in ("mlc-random", "intersection-random"):
        k = int(k_override if k_override is not None else _require(cobj, "K", "concept"))
        d = int(d_override if d_override is not None else _require(cobj, "d", "concept"))
        span = int(cobj.get("span_dim", min(k, d)))
        rng = rng_from_seed(seed, stream=7)
        span_rows = np.linalg.qr(rng.standard_normal((d, span)), mode="reduced")[0].T
        mix = rng.standard_normal((k, span))
        weights = mix @ span_rows
        weights /= np.linalg.norm(weights, axis=1, keepdims=True)
        biases = np.zeros(k)
        if kind == "mlc-random":
            return MulticlassLinearClassifier(weights, biases)
        return IntersectionOfHalfspaces(weights, biases)
    raise ConfigError(f"unknown concept kind: {kind}")


def build_noise(nobj, n_labels, rate_override=None):
    if nobj is None:
        return NoiseSpec()
    kind = _require(nobj, "kind", "noise")
    if kind == "none":
        return NoiseSpec()
    if kind == "adversarial":
        rate = float(rate_override if rate_override is not None else _require(nobj, "rate", "noise"))
        return NoiseSpec(kind="adversarial", rate=rate, strategy=nobj.get("strategy", "uniform-flip"))
    if kind in ("rcn", "contrastive"):
        matrix = nobj.get("matrix")
        if matrix == "circulant":
            built = (
                build_rcn_confusion_matrix(n_labels)
                if kind == "rcn"
                else build_contrastive_confusion_matrix(n_labels)
            )
        elif matrix == "symmetric":
            built = symmetric_confusion(n_labels, float(_require(nobj, "gamma", "noise")))
        elif matrix is None:
            raise ConfigError("missing config field: noise.matrix")
        else:
            built = ConfusionMatrix(np.asarray(matrix, dtype=float), gamma=float(nobj.get("gamma", 0.0)))
        return NoiseSpec(kind=kind, matrix=built)
    raise ConfigError(f"unknown noise kind: {kind}")


def build_learner_config(lobj, seed):
    fobj = lobj.get("finder", {})
    finder = DirectionFinderConfig(
        eps=float(fobj.get("eps", 0.1)),
        cube_eps=float(fobj.get("cube_eps", 0.25)),
        sigma=float(fobj.get("sigma", 0.05)),
        m=int(fobj.get("m", 1)),
        eta=fobj.get("eta"),
        t_eig=fobj.get("t_eig"),
        k_hint=int(fobj.get("k_hint", 2)),
        noise_mult=float(fobj.get("noise_mult", 5.0)),
    )
    return LearnerConfig(
        mode=_require(lobj, "mode", "learner"),
        T=lobj.get("T"),
        n_per_iter=int(_require(lobj, "n_per_iter", "learner")),
        finder=finder,
        final_eps=lobj.get("final_eps"),
        basis_dim_cap=lobj.get("basis_dim_cap"),
        seed=seed,
    )


def _seed_list(cfg, seed_flag):
    if "seeds" in cfg:
        return [int(s) for s in cfg["seeds"]]
    base = int(seed_flag if seed_flag is not None else cfg.get("seed", 0))
    trials = int(cfg.get("trials", 1))
    return [base + t for t in range(trials)]


def cmd_gen(args):
    cfg = _load_config(args.config)
    data = _require(cfg, "data", "")
    n = int(_require(data, "n", "data"))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for trial, seed in enumerate(_seed_list(cfg, args.seed)):
        concept = build_concept(_require(cfg, "concept", ""), seed=seed, d_override=data.get("d"))
        noise = build_noise(cfg.get("noise"), len(concept.label_set))
        ds = sample_dataset(concept, noise, n, seed)
        dataset_to_csv(ds, str(out / f"trial{trial:03d}.csv"))
    print(f"wrote {len(_seed_list(cfg, args.seed))} dataset file(s) to {out}")
    return 0


def _run_single_training(cfg, seed):
    concept = build_concept(_require(cfg, "concept", ""), seed=seed)
    noise = build_noise(cfg.get("noise"), len(concept.label_set))
    lcfg = build_learner_config(_require(cfg, "learner", ""), seed)
    source = BatchSampler(concept, noise, lcfg.n_per_iter, seed)
    classifier, trace = learn(source, lcfg)
    return concept, noise, lcfg, classifier, trace


def cmd_train(args):
    cfg = _load_config(args.config)
    seed = int(args.seed if args.seed is not None else cfg.get("seed", 0))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _, _, _, classifier, trace = _run_single_training(cfg, seed)
    save_classifier(classifier, str(out / "model.json"))
    trace.to_csv(str(out / "trace.csv"))
    print(f"trained: {trace.iterations} productive iteration(s), subspace dim {trace.k_final}")
    return 0


def _confusion_table(classifier, dataset):
    labels = list(dataset.label_set)
    pos = {lab: i for i, lab in enumerate(labels)}
    table = np.zeros((len(labels), len(labels)), dtype=np.int64)
    preds = classifier.predict(dataset.xs)
    for truth, pred in zip(dataset.ys, preds):
        table[pos[int(truth)], pos[int(pred)]] += 1
    return labels, table


def cmd_eval(args):
    classifier = load_classifier(args.model)
    dataset = dataset_from_csv(args.data, label_set=classifier.label_set)
    labels, table = _confusion_table(classifier, dataset)
    metrics = {
        "error": zero_one_error(classifier, dataset),
        "n": dataset.n,
        "labels": labels,
        "confusion": table.tolist(),
    }
    with open(args.out, "w") as f:
        json.dump(metrics, f, indent=2)
    print(f"error={metrics['error']:.6f}")
    return 0


def _sweep_cell(cfg, trial, seed, k, d, rate):
    concept = build_concept(
        _require(cfg, "concept", ""), seed=seed, k_override=k, d_override=d
    )
    noise = build_noise(cfg.get("noise"), len(concept.label_set), rate_override=rate)
    lcfg = build_learner_config(_require(cfg, "learner", ""), seed)
    source = BatchSampler(concept, noise, lcfg.n_per_iter, seed)
    classifier, trace = learn(source, lcfg)
    eval_n = int(cfg.get("eval_n", 100_000))
    test = sample_dataset(concept, noise, eval_n, seed + 10_000_019)
    err = zero_one_error(classifier, test)
    if noise.kind == "adversarial":
        opt = math.floor(noise.rate * lcfg.n_per_iter) / lcfg.n_per_iter
    elif noise.kind in ("rcn", "contrastive"):
        opt = opt_of_rcn(concept, noise.matrix, 200_000, seed=seed)[0]
    else:
        opt = 0.0
    return (
        f"{trial},{seed},{k},{d},{noise.kind},{rate if rate is not None else 0.0},"
        f"{opt:.6f},{err:.6f},{trace.k_final},{trace.iterations}"
    )


def cmd_sweep(args):
    cfg = _load_config(args.config)
    sweep = _require(cfg, "sweep", "")
    rates = sweep.get("rates", [None])
    ks = sweep.get("Ks", [None])
    ds = sweep.get("ds", [None])
    seeds = _seed_list(cfg, args.seed)
    cells = [
        (trial, seed, k, d, rate)
        for rate in rates
        for k in ks
        for d in ds
        for trial, seed in enumerate(seeds)
    ]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = [None] * len(cells)

    def run(i):
        trial, seed, k, d, rate = cells[i]
        rows[i] = _sweep_cell(cfg, trial, seed, k, d, rate)

    if args.threads > 1 and cells:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            list(pool.map(run, range(len(cells))))
    else:
        for i in range(len(cells)):
            run(i)
    table = METRICS_HEADER + "\n" + "".join(r + "\n" for r in rows)
    (out / "metrics.csv").write_text(table)
    print(table, end="")
    return 0


def cmd_sq_build(args):
    if args.kind == "rcn":
        matrix = build_rcn_confusion_matrix(args.k)
    else:
        matrix = build_contrastive_confusion_matrix(args.k)
    with open(args.out, "w") as f:
        json.dump(
            {"kind": args.kind, "K": args.k, "gamma": matrix.gamma, "entries": matrix.entries.tolist()},
            f,
            indent=2,
        )
    print(f"wrote {args.kind} confusion matrix for K={args.k} (margin {matrix.gamma:.6g})")
    return 0


def cmd_sq_verify(args):
    with open(args.h) as f:
        obj = json.load(f)
    matrix = ConfusionMatrix(np.asarray(obj["entries"], dtype=float), gamma=float(obj.get("gamma", 0.0)))
    method = {"quad": "quadrature", "mc": "mc"}[args.method]
    dev = verify_moment_matching(
        matrix, int(obj["K"]), args.degree, method=method, n_mc=args.n, seed=args.seed or 0
    )
    print(f"max deviation: {dev:.12e}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="mimlearn", description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--threads", type=int, default=1, help="parallel trials in sweeps")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="sample datasets to CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("train", help="train a model, writing model.json and trace.csv")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate a model on a dataset CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("sweep", help="grid of trainings over noise rate, K, d")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("sq-build", help="build a moment-matched confusion matrix")
    p.add_argument("--kind", choices=["rcn", "contrastive"], required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_sq_build)

    p = sub.add_parser("sq-verify", help="report the max moment deviation of a matrix")
    p.add_argument("--h", required=True)
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--method", choices=["quad", "mc"], default="quad")
    p.add_argument("--n", type=int, default=1_000_000)
    p.set_defaults(fn=cmd_sq_verify)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (MimError, OSError, ValueError, KeyError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
