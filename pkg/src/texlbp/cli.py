"""Command-line entry point: ``texlbp {extract,eval,predict,map}``.

Exit codes: 0 success, 1 runtime or I/O failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .classifier import DistanceMetric, KnnConfig, knn_predict
from .evaluation import cross_validate, loo_split, render_report, stratified_kfold
from .features import build_store, extract_multi, format_configs, read_store, write_store
from .image_io import load_dataset, load_image, write_pgm
from .lbp import VARIANTS, LbpConfig, lbp_map

log = logging.getLogger("texlbp")

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2

# ValueError covers data-dependent failures such as a class smaller than the fold count
RUNTIME_ERRORS = (OSError, ValueError)


class UsageError(Exception):
    pass


def _pairs(text: str) -> list[tuple[int, float]]:
    out = []
    for part in text.split(","):
        bits = part.strip().split(":")
        try:
            if len(bits) != 2:
                raise ValueError
            p, r = int(bits[0]), float(bits[1])
            LbpConfig(p, r)
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad neighborhood {part!r}, expected P:R") from None
        out.append((p, r))
    return out


def _k_list(text: str) -> list[int]:
    try:
        ks = [int(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad k list {text!r}") from None
    if not ks or any(k < 1 for k in ks):
        raise argparse.ArgumentTypeError("k values must be positive integers")
    return ks


def _scheme(text: str) -> tuple[str, int]:
    if text == "loo":
        return ("loo", 0)
    if text.startswith("kfold:"):
        try:
            n = int(text[len("kfold:"):])
        except ValueError:
            n = 0
        if n >= 2:
            return ("kfold", n)
    raise argparse.ArgumentTypeError(f"scheme must be 'loo' or 'kfold:N' with N >= 2, got {text!r}")


def _positive_real(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        v = -1.0
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def _non_negative_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        v = -1
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text!r}")
    return v


def _positive_int(text: str) -> int:
    v = _non_negative_int(text)
    if v == 0:
        raise argparse.ArgumentTypeError("expected a positive integer, got 0")
    return v


def _add_knn_flags(p: argparse.ArgumentParser, multi_k: bool) -> None:
    p.add_argument("--metric", choices=("chi2", "minkowski"), default="chi2")
    p.add_argument("--minkowski-p", type=_positive_real, default=2.0, metavar="REAL")
    if multi_k:
        p.add_argument("--k", type=_k_list, default=[1], metavar="LIST")
    else:
        p.add_argument("--k", type=_positive_int, default=1)
    p.add_argument("--weighting", choices=("uniform", "inverse"), default="uniform")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="texlbp", description="Multi-neighborhood LBP texture classification")
    sub = parser.add_subparsers(dest="command", required=True)

    threads = argparse.ArgumentParser(add_help=False)
    threads.add_argument("--threads", type=_non_negative_int, default=0, metavar="N",
                         help="worker threads (0 = all cores)")

    ex = sub.add_parser("extract", parents=[threads], help="extract a feature store from an image tree")
    ex.add_argument("--images", required=True, metavar="DIR")
    ex.add_argument("--pairs", type=_pairs, required=True, metavar="P:R[,P:R...]")
    ex.add_argument("--variant", choices=VARIANTS, default="riu2")
    ex.add_argument("--out", required=True, metavar="FILE")

    ev = sub.add_parser("eval", parents=[threads], help="cross-validate k-NN on a feature store")
    ev.add_argument("--features", required=True, metavar="FILE")
    _add_knn_flags(ev, multi_k=True)
    ev.add_argument("--scheme", type=_scheme, default=("loo", 0), metavar="loo|kfold:N")
    ev.add_argument("--seed", type=_non_negative_int, default=0, metavar="UINT")
    ev.add_argument("--report", metavar="FILE")

    pr = sub.add_parser("predict", help="classify a single image against a feature store")
    pr.add_argument("--features", required=True, metavar="FILE")
    pr.add_argument("--image", required=True, metavar="FILE")
    pr.add_argument("--pairs", type=_pairs, metavar="P:R[,P:R...]",
                    help="must match the store; defaults to the store's configs")
    pr.add_argument("--variant", choices=VARIANTS)
    _add_knn_flags(pr, multi_k=False)

    mp = sub.add_parser("map", help="write the LBP code map of an image as PGM")
    mp.add_argument("--image", required=True, metavar="FILE")
    mp.add_argument("--pairs", type=_pairs, required=True, metavar="P:R")
    mp.add_argument("--variant", choices=VARIANTS, default="riu2")
    mp.add_argument("--out", required=True, metavar="FILE")
    return parser


def _metric(args) -> DistanceMetric:
    if args.metric == "minkowski":
        return DistanceMetric("minkowski", args.minkowski_p)
    return DistanceMetric("chi_square")


def _weighting(args) -> str:
    return "inverse_distance" if args.weighting == "inverse" else "uniform"


def _threads(n: int) -> int:
    return n or (os.cpu_count() or 1)


def cmd_extract(args) -> int:
    configs = [LbpConfig(p, r, args.variant) for p, r in args.pairs]
    images = load_dataset(args.images, threads=_threads(args.threads))
    store = build_store(images, configs, threads=_threads(args.threads))
    write_store(store, args.out)
    print(f"samples={len(store)} length={store.dim}")
    return EXIT_OK


def cmd_eval(args) -> int:
    store = read_store(args.features)
    kind, folds = args.scheme
    plan = loo_split(len(store)) if kind == "loo" else stratified_kfold(store.labels, folds, args.seed)
    reports = []
    for k in args.k:
        knn = KnnConfig(k, _metric(args), _weighting(args))
        report = cross_validate(store, knn, plan, threads=_threads(args.threads))
        reports.append(render_report(report))
        if args.report:
            print(f"k={k} accuracy={report.accuracy:.4f} kappa={report.kappa:.4f}")
    text = "\n".join(reports)
    if args.report:
        Path(args.report).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_predict(args) -> int:
    store = read_store(args.features)
    if args.pairs is None:
        if args.variant is not None and any(c.variant != args.variant for c in store.configs):
            raise UsageError(
                f"--variant {args.variant} does not match store configs [{format_configs(store.configs)}]")
        configs = list(store.configs)
    else:
        configs = [LbpConfig(p, r, args.variant or "riu2") for p, r in args.pairs]
        if tuple(configs) != store.configs:
            raise UsageError(
                f"extraction configs [{format_configs(configs)}] do not match "
                f"store configs [{format_configs(store.configs)}]")
    image = load_image(args.image)
    k = args.k
    if k > len(store):
        log.warning("k=%d exceeds the store size; using k=%d", k, len(store))
        k = len(store)
    pred = knn_predict(store, extract_multi(image, configs), KnnConfig(k, _metric(args), _weighting(args)))
    print(f"label={pred.label}")
    for n in pred.neighbors:
        print(f"{n.index} {n.distance:.6f} {n.label}")
    return EXIT_OK


def cmd_map(args) -> int:
    if len(args.pairs) != 1:
        raise UsageError("map takes exactly one P:R pair")
    (p, r), = args.pairs
    image = load_image(args.image)
    write_pgm(lbp_map(image, LbpConfig(p, r, args.variant)).to_image(), args.out)
    return EXIT_OK


COMMANDS = {"extract": cmd_extract, "eval": cmd_eval, "predict": cmd_predict, "map": cmd_map}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    if not argv:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"texlbp {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RUNTIME_ERRORS as exc:
        print(f"texlbp {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
