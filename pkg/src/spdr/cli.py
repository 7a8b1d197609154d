"""Command-line interface: ``spdr <command> --config FILE [options]``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numerical failure.
"""

import argparse
import sys
import warnings

import numpy as np

from . import __version__
from .divergences import MetricKind, beta_is_pd, gram_matrix, pairwise
from .dr import DrProblem, fit, fit_eig, transform
from .evaluation import clustering_accuracy, kernel_kmeans, kmeans, nmi, nn_classify
from .exceptions import DataError, InvalidParameterError, NumericalError, SpdrError
from .grassmann import CgConfig, orthonormality_error
from .io import (RunConfig, load_bundle, load_projection, save_bundle, save_projection,
                 write_csv, write_json)
from .means import MeanConfig, frechet_mean
from .synth import SynthParams, make_synthetic

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3
COMMANDS = ("synth", "fit", "sweep", "transform", "dist", "mean", "classify", "cluster")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser():
    parser = _Parser(prog="spdr", description="Dimensionality reduction on SPD manifolds.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="key = value parameter file")
    parser.add_argument("--in", dest="input", help="input bundle")
    parser.add_argument("--train", help="training bundle")
    parser.add_argument("--proj", help="projection file (transform)")
    parser.add_argument("--out", help="output path (or prefix for synth)")
    parser.add_argument("--seed", type=int, help="overrides the config seed")
    return parser


def _need(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        flags = ", ".join("--" + ("in" if n == "input" else n) for n in missing)
        raise UsageError(f"{args.command} requires {flags}")


def _cg_config(cfg):
    return CgConfig(
        max_iters=cfg.max_iters, grad_tolerance=cfg.grad_tolerance,
        initial_step=cfg.initial_step, shrink_factor=cfg.shrink_factor,
        max_evals=cfg.max_evals, restart_period=cfg.restart_period,
        direction_rule=cfg.direction_rule,
    )


def _load(path, cfg):
    return load_bundle(path, strict=cfg.strict_load)


def _solver(cfg):
    metric = MetricKind.parse(cfg.metric)
    if cfg.solver != "auto":
        return cfg.solver
    eig_ok = metric in (MetricKind.LOG_EUCLIDEAN, MetricKind.FROBENIUS)
    return "eig" if eig_ok and cfg.mode == "supervised" else "cg"


def _problem(bundle, cfg, m):
    if cfg.mode == "supervised":
        if bundle.labels is None:
            raise DataError("supervised fitting needs a labelled bundle")
        return DrProblem.supervised(bundle.matrices, bundle.labels, cfg.metric, m,
                                    nu_w=cfg.nu_w, nu_b=cfg.nu_b)
    return DrProblem.unsupervised(bundle.matrices, cfg.metric, m)


def _run_fit(bundle, cfg, m):
    problem = _problem(bundle, cfg, m)
    if _solver(cfg) == "eig":
        return fit_eig(problem, max_outer=cfg.max_outer, tol=cfg.eig_tolerance)
    return fit(problem, _cg_config(cfg), seed=cfg.seed)


def cmd_synth(args, cfg):
    _need(args, "out")
    params = SynthParams(
        n_classes=cfg.n_classes, n=cfg.n, intrinsic_dim=cfg.intrinsic_dim,
        train_per_class=cfg.train_per_class, test_per_class=cfg.test_per_class,
        sigma=cfg.sigma, separation=cfg.separation, eps=cfg.eps, seed=cfg.seed,
    )
    data = make_synthetic(params)
    save_bundle(args.out + ".train.spdb", data.X_train, data.y_train)
    save_bundle(args.out + ".test.spdb", data.X_test, data.y_test)
    write_json(args.out + ".manifest.json", {"generator": params.to_dict(),
                                             "subspace": data.subspace.tolist()})


def cmd_fit(args, cfg):
    _need(args, "train", "out")
    if cfg.target_dim is None:
        raise InvalidParameterError("fit requires target_dim in the config")
    bundle = _load(args.train, cfg)
    W, report = _run_fit(bundle, cfg, cfg.target_dim)
    save_projection(args.out, W)
    out = report.to_dict()
    out.update(metric=cfg.metric, mode=cfg.mode, n=bundle.n, target_dim=cfg.target_dim,
               orthonormality_error=orthonormality_error(W), seed=cfg.seed)
    write_json(args.out + ".report.json", out)


def cmd_sweep(args, cfg):
    _need(args, "train", "input", "out")
    if not cfg.m_grid:
        raise InvalidParameterError("sweep requires m_grid in the config")
    train, test = _load(args.train, cfg), _load(args.input, cfg)
    if train.labels is None or test.labels is None:
        raise DataError("sweep needs labelled train and test bundles")
    base = float(np.mean(nn_classify(train.matrices, train.labels, test.matrices, cfg.metric)
                         == test.labels))
    rows = []
    for m in cfg.m_grid:
        W, report = _run_fit(train, cfg, m)
        pred = nn_classify(transform(train.matrices, W), train.labels,
                           transform(test.matrices, W), cfg.metric)
        rows.append((m, float(np.mean(pred == test.labels)), report.final_cost))
    write_csv(args.out, [(0, base, float("nan"))] + rows, header=("m", "accuracy", "final_cost"))


def cmd_transform(args, cfg):
    _need(args, "input", "proj", "out")
    bundle = _load(args.input, cfg)
    W = load_projection(args.proj)
    save_bundle(args.out, transform(bundle.matrices, W), bundle.labels)


def cmd_dist(args, cfg):
    _need(args, "input", "out")
    X = _load(args.input, cfg).matrices
    other = _load(args.train, cfg).matrices if args.train else None
    write_csv(args.out, pairwise(X, cfg.metric, other=other))


def cmd_mean(args, cfg):
    _need(args, "input", "out")
    X = _load(args.input, cfg).matrices
    M = frechet_mean(X, cfg.metric, MeanConfig(max_iters=cfg.max_iters))
    save_bundle(args.out, M[None])


def cmd_classify(args, cfg):
    _need(args, "train", "input", "out")
    train, query = _load(args.train, cfg), _load(args.input, cfg)
    if train.labels is None:
        raise DataError("classify needs a labelled training bundle")
    pred = nn_classify(train.matrices, train.labels, query.matrices, cfg.metric)
    write_csv(args.out, pred[:, None], header=("label",))
    if query.labels is not None:
        write_json(args.out + ".json", {"accuracy": float(np.mean(pred == query.labels)),
                                        "metric": cfg.metric, "count": len(pred)})


def cmd_cluster(args, cfg):
    _need(args, "input", "out")
    bundle = _load(args.input, cfg)
    k = cfg.k
    if k is None:
        if bundle.labels is None:
            raise InvalidParameterError("cluster requires k when the bundle has no labels")
        k = len(np.unique(bundle.labels))
    if cfg.cluster_method == "kernel":
        if cfg.beta is None:
            raise InvalidParameterError("kernel clustering requires beta")
        metric = MetricKind.parse(cfg.metric)
        if metric is MetricKind.STEIN and not beta_is_pd(bundle.n, cfg.beta):
            raise InvalidParameterError(
                f"beta={cfg.beta} does not give a positive definite Stein kernel for n={bundle.n}"
            )
        K = gram_matrix(bundle.matrices, metric, cfg.beta)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            result = kernel_kmeans(K, k, seed=cfg.seed, max_iters=cfg.max_iters)
    else:
        result = kmeans(bundle.matrices, k, cfg.metric, seed=cfg.seed, max_iters=cfg.max_iters)
    write_csv(args.out, result.assignments[:, None], header=("cluster",))
    summary = {"k": k, "method": cfg.cluster_method, "metric": cfg.metric,
               "inertia": result.inertia, "iterations": result.n_iter,
               "gram_clipped": result.clipped}
    if bundle.labels is not None:
        summary["accuracy"] = clustering_accuracy(result.assignments, bundle.labels)
        summary["nmi"] = nmi(result.assignments, bundle.labels)
    write_json(args.out + ".json", summary)


HANDLERS = {name: globals()["cmd_" + name] for name in COMMANDS}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        cfg = RunConfig.load(args.config) if args.config else RunConfig()
        if args.seed is not None:
            cfg = cfg.replace(seed=args.seed)
        HANDLERS[args.command](args, cfg)
    except UsageError as exc:
        print(f"spdr: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvalidParameterError as exc:
        print(f"spdr: invalid parameter: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"spdr: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"spdr: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except SpdrError as exc:
        print(f"spdr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
