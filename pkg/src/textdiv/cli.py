"""Command line interface.

Subcommands: validate, score, pvalue, sensitivity, distances.  Exit codes:
0 success, 1 validation problem (bad files, bad arguments, metrics that
cannot run on the given sets), 2 unexpected runtime failure.

Reports go through the canonical writer, and thread count changes
scheduling only, so outputs for a fixed seed are byte-identical no matter
how many threads run.  For the same reason the wall-clock summary goes to
stderr, never into the report file.
"""

from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .core import Corpus
from .distances import KINDS, MetricSpec, build_idf, pairwise_matrix
from .errors import TextdivError
from .io import (
    load_corpus,
    load_embeddings,
    write_curve_csv,
    write_matrix_csv,
    write_report,
)
from .kbm import EmbeddingTable, mmd_rbf, summarize, frechet_distance, text_key
from .significance import (
    DEFAULT_EXACT_LIMIT,
    STATISTIC_KINDS,
    SignificanceConfig,
    StatisticKind,
    corpus_significance,
    mean_aggregate_score,
    sensitivity_curve,
)
from .trm import SYMMETRIZATIONS, TIE_POLICIES, trm_statistic


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="textdiv",
        description="Set-level divergence metrics for conditional text "
        "generation, with exact permutation significance.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--corpus", required=True, help="corpus JSONL path")
        p.add_argument("--embeddings", help="embedding NDJSON path")

    def add_metric(p):
        p.add_argument(
            "--metric",
            choices=KINDS,
            help="text distance kind (required for trm and mean_agg)",
        )
        p.add_argument("--tie-policy", choices=TIE_POLICIES, default="fractional")
        p.add_argument(
            "--symmetrization", choices=SYMMETRIZATIONS, default="average"
        )

    def add_statistic(p):
        p.add_argument("--statistic", choices=STATISTIC_KINDS, required=True)
        add_metric(p)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--out", help="report path (defaults to stdout)")

    p_validate = sub.add_parser("validate", help="check corpus and embedding files")
    add_common(p_validate)

    p_score = sub.add_parser("score", help="per-instance statistic values")
    add_common(p_score)
    add_statistic(p_score)

    p_pvalue = sub.add_parser("pvalue", help="permutation significance per instance")
    add_common(p_pvalue)
    add_statistic(p_pvalue)
    p_pvalue.add_argument("--mode", choices=("exact", "montecarlo"), default="exact")
    p_pvalue.add_argument("--samples", type=int, default=10_000)
    p_pvalue.add_argument("--seed", type=int, default=0)
    p_pvalue.add_argument("--exact-limit", type=int, default=DEFAULT_EXACT_LIMIT)

    p_sens = sub.add_parser(
        "sensitivity", help="harmonic-mean p versus kept candidate count"
    )
    add_common(p_sens)
    add_statistic(p_sens)
    p_sens.add_argument("--mode", choices=("exact", "montecarlo"), default="exact")
    p_sens.add_argument("--samples", type=int, default=10_000)
    p_sens.add_argument("--seed", type=int, default=0)
    p_sens.add_argument("--exact-limit", type=int, default=DEFAULT_EXACT_LIMIT)
    p_sens.add_argument("--k-max", type=int, default=7)

    p_dist = sub.add_parser("distances", help="dump one instance's distance matrix")
    add_common(p_dist)
    p_dist.add_argument("--metric", choices=KINDS, required=True)
    p_dist.add_argument("--instance", required=True, help="instance id")
    p_dist.add_argument("--out", help="csv path (defaults to stdout)")

    return parser


def _load_inputs(args) -> tuple[Corpus, EmbeddingTable | None]:
    corpus = load_corpus(args.corpus)
    embeddings = load_embeddings(args.embeddings) if args.embeddings else None
    return corpus, embeddings


def _needs_embeddings(statistic: str, metric: str | None) -> bool:
    return statistic in ("frechet", "mmd") or metric == "embedding_cosine"


def _build_metric_spec(args, corpus: Corpus) -> MetricSpec | None:
    if args.statistic in ("frechet", "mmd"):
        if args.metric:
            raise ValueError(
                f"--metric does not apply to statistic {args.statistic!r}"
            )
        return None
    if not args.metric:
        raise ValueError(f"statistic {args.statistic!r} requires --metric")
    idf = build_idf(corpus) if args.metric == "cider_d" else None
    return MetricSpec(kind=args.metric, idf=idf)


def _statistic_kind(args, corpus: Corpus) -> StatisticKind:
    return StatisticKind(
        kind=args.statistic,
        metric=_build_metric_spec(args, corpus),
        tie_policy=args.tie_policy,
        symmetrization=args.symmetrization,
    )


def _config_echo(args, extra: dict | None = None) -> dict:
    # No threads and no output path here: neither may change report bytes.
    echo = {
        "command": args.command,
        "corpus": args.corpus,
        "embeddings": args.embeddings,
        "version": __version__,
    }
    for name in ("statistic", "metric", "tie_policy", "symmetrization"):
        if hasattr(args, name):
            echo[name] = getattr(args, name)
    if extra:
        echo.update(extra)
    return echo


def _open_out(path: str | None):
    if path:
        return open(path, "w", encoding="utf-8", newline="")
    return None


def _emit_report(payload: dict, path: str | None) -> None:
    fh = _open_out(path)
    if fh is None:
        write_report(payload, sys.stdout)
    else:
        with fh:
            write_report(payload, fh)


def cmd_validate(args) -> int:
    corpus, embeddings = _load_inputs(args)
    n_cand = [inst.n for inst in corpus]
    n_ref = [inst.m for inst in corpus]
    print(f"instances: {len(corpus)}")
    print(f"candidates per instance: min {min(n_cand)} max {max(n_cand)}")
    print(f"references per instance: min {min(n_ref)} max {max(n_ref)}")
    if embeddings is not None:
        print(f"embedding entries: {len(embeddings)} (dim {embeddings.dim})")
        missing = [
            text
            for text in corpus.all_texts()
            if embeddings.vector_for_key(text_key(text)) is None
        ]
        if missing:
            print(f"missing embeddings: {len(missing)}", file=sys.stderr)
            for text in missing[:20]:
                print(f"  {text_key(text)}  {text!r}", file=sys.stderr)
            return 1
        print("all corpus texts have embeddings")
    return 0


def _observed_value(instance, kind: StatisticKind, embeddings) -> float:
    """The statistic on the file-order split, by its direct definition."""
    if kind.kind == "trm":
        matrix = pairwise_matrix(instance, kind.metric, embeddings)
        return trm_statistic(
            matrix, tie_policy=kind.tie_policy, symmetrization=kind.symmetrization
        ).q
    if kind.kind == "mean_agg":
        return mean_aggregate_score(instance, kind.metric, embeddings)
    if embeddings is None:
        raise ValueError(f"statistic {kind.kind!r} needs an embedding table")
    cand = np.stack([embeddings.vector_for_text(u.raw) for u in instance.candidates])
    ref = np.stack([embeddings.vector_for_text(u.raw) for u in instance.references])
    if kind.kind == "frechet":
        return frechet_distance(summarize(cand), summarize(ref))
    return mmd_rbf(cand, ref)


def cmd_score(args) -> int:
    corpus, embeddings = _load_inputs(args)
    kind = _statistic_kind(args, corpus)
    if _needs_embeddings(args.statistic, args.metric) and embeddings is None:
        raise ValueError("this configuration requires --embeddings")
    start = time.perf_counter()
    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            values = list(
                pool.map(
                    lambda inst: _observed_value(inst, kind, embeddings), corpus
                )
            )
    else:
        values = [_observed_value(inst, kind, embeddings) for inst in corpus]
    elapsed = time.perf_counter() - start
    print(
        f"instances={len(corpus)} wall_seconds={elapsed:.3f} "
        f"instances_per_sec={len(corpus) / elapsed:.2f}",
        file=sys.stderr,
    )
    payload = {
        "config": _config_echo(args),
        "instances": [
            {"id": inst.instance_id, "value": val}
            for inst, val in zip(corpus, values)
        ],
        "aggregates": {"mean_value": sum(values) / len(values)},
    }
    _emit_report(payload, args.out)
    return 0


def _significance_config(args) -> SignificanceConfig:
    return SignificanceConfig(
        mode=args.mode,
        samples=args.samples,
        seed=args.seed,
        exact_limit=args.exact_limit,
        threads=args.threads,
    )


def cmd_pvalue(args) -> int:
    corpus, embeddings = _load_inputs(args)
    kind = _statistic_kind(args, corpus)
    if _needs_embeddings(args.statistic, args.metric) and embeddings is None:
        raise ValueError("this configuration requires --embeddings")
    config = _significance_config(args)
    start = time.perf_counter()
    result = corpus_significance(corpus, kind, config, embeddings)
    elapsed = time.perf_counter() - start
    print(
        f"instances={len(corpus)} wall_seconds={elapsed:.3f} "
        f"instances_per_sec={len(corpus) / elapsed:.2f}",
        file=sys.stderr,
    )
    payload = {
        "config": _config_echo(
            args,
            {
                "mode": args.mode,
                "samples": args.samples,
                "seed": args.seed,
                "exact_limit": args.exact_limit,
            },
        ),
        "instances": [
            {
                "id": r.instance_id,
                "observed": r.observed,
                "p": r.p,
                "log10_p": r.log10_p,
                "mode": r.mode,
                "evaluations": r.evaluations,
            }
            for r in result.instances
        ],
        "aggregates": {"hmp": result.hmp, "log10_hmp": result.log10_hmp},
    }
    _emit_report(payload, args.out)
    return 0


def cmd_sensitivity(args) -> int:
    corpus, embeddings = _load_inputs(args)
    kind = _statistic_kind(args, corpus)
    if _needs_embeddings(args.statistic, args.metric) and embeddings is None:
        raise ValueError("this configuration requires --embeddings")
    config = _significance_config(args)
    points = sensitivity_curve(corpus, kind, args.k_max, config, embeddings)
    fh = _open_out(args.out)
    if fh is None:
        write_curve_csv(points, sys.stdout)
    else:
        with fh:
            write_curve_csv(points, fh)
    return 0


def cmd_distances(args) -> int:
    corpus, embeddings = _load_inputs(args)
    if args.metric == "embedding_cosine" and embeddings is None:
        raise ValueError("metric embedding_cosine requires --embeddings")
    idf = build_idf(corpus) if args.metric == "cider_d" else None
    spec = MetricSpec(kind=args.metric, idf=idf)
    by_id = {inst.instance_id: inst for inst in corpus}
    instance = by_id.get(args.instance)
    if instance is None:
        raise ValueError(f"no instance with id {args.instance!r} in the corpus")
    matrix = pairwise_matrix(instance, spec, embeddings)
    fh = _open_out(args.out)
    if fh is None:
        write_matrix_csv(matrix, sys.stdout)
    else:
        with fh:
            write_matrix_csv(matrix, fh)
    return 0


_COMMANDS = {
    "validate": cmd_validate,
    "score": cmd_score,
    "pvalue": cmd_pvalue,
    "sensitivity": cmd_sensitivity,
    "distances": cmd_distances,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (TextdivError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - last-resort runtime failure
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
