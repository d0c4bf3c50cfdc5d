"""Command-line front end.

One subcommand per pipeline stage plus ``run`` (everything end to end)
and ``synth`` (benchmark corpus generator). Stage subcommands read and
write plain files so any stage can be rerun or inspected in isolation.

Configuration precedence: command-line flags override values from a
``--config`` file, which overrides built-in defaults. Exit codes:
0 success, 1 usage error, 2 bad data, 3 internal error.
"""

from __future__ import annotations

import argparse
import datetime as dt
import json
import sys

from .config import PipelineConfig, load_config
from .corpus import build_occurrence_index, ingest_corpus, retrieve_theme
from .embeddings import EmbeddingTable, load_embeddings
from .errors import DataError, StageError
from .evaluation import k_metrics, load_ground_truth
from .graph import build_graph, detect_communities, write_edges_tsv, write_events_tsv
from .peaks import score_all, select_peaks, write_peaks_tsv
from .phrases import build_candidates
from .pipeline import (
    _write_key_events_jsonl,
    _write_key_events_txt,
    _write_outliers_tsv,
    detect_key_events,
    run_pipeline,
)
from .synth import SynthSpec, generate_corpus


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; the contract here is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


_CONFIG_FLAGS = [
    ("--peak-window", "peak_window", int,
     "days of weighted lookahead when scoring peak phrases"),
    ("--keep-fraction", "keep_fraction", float,
     "fraction of mined candidate phrases kept after ranking"),
    ("--peak-quantile", "peak_quantile", float,
     "fraction of scored (phrase, day) pairs kept as peaks"),
    ("--temporal-weight", "temporal_weight", float,
     "edge weight linking the same phrase on consecutive days"),
    ("--edge-floor", "edge_floor", float,
     "same-day edges at or below this weight are discarded"),
    ("--min-community", "min_community", int,
     "smallest phrase community kept as a candidate event"),
    ("--synonym-threshold", "synonym_threshold", float,
     "cosine similarity at or above which phrases are merged"),
    ("--pseudo-top", "pseudo_top", int,
     "documents pseudo-labelled positive per candidate event"),
    ("--negative-ratio", "negative_ratio", int,
     "negatives sampled per positive when training classifiers"),
    ("--ensemble-size", "ensemble_size", int,
     "classifiers trained per candidate event"),
    ("--add-top", "add_top", int,
     "documents promoted into the pseudo set between iterations"),
    ("--iterations", "iterations", int,
     "selection/refinement rounds"),
    ("--seed", "seed", int, "global random seed"),
    ("--endpoint", "endpoint", str,
     "embedding service address for vectors missing from the caches"),
]


def _add_config_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", metavar="FILE", default=None,
                     help="key=value config file (flags override it)")
    for flag, dest, typ, help_text in _CONFIG_FLAGS:
        sub.add_argument(flag, dest=dest, type=typ, default=None,
                         help=help_text)


def _resolve_config(args) -> PipelineConfig:
    base = load_config(args.config) if args.config else PipelineConfig()
    overrides = {dest: getattr(args, dest) for _, dest, _, _ in _CONFIG_FLAGS}
    cfg = base.merged(overrides)
    cfg.validate()
    return cfg


def _read_lines(path: str) -> list[str]:
    try:
        with open(path, encoding="utf-8") as fh:
            return [line.strip() for line in fh if line.strip()]
    except OSError as exc:
        raise DataError(f"cannot read {path!r}: {exc}") from exc


def _load_pool(corpus, args):
    """Phrase pool and occurrence index from --phrases or mining."""
    if getattr(args, "phrases", None):
        pool = _read_lines(args.phrases)
        if not pool:
            raise DataError(f"no phrases in {args.phrases}")
        return pool, build_occurrence_index(corpus, pool)
    cfg = _resolve_config(args)
    mined, index = build_candidates(corpus, keep_fraction=cfg.keep_fraction)
    return [c.phrase for c in mined], index


def _peaks_for(corpus, index, pool, cfg):
    scored = score_all(corpus, index, pool, window=cfg.peak_window)
    return select_peaks(scored, quantile=cfg.peak_quantile)


def _graph_for(corpus, index, peaks, cfg, vectors_path):
    table = load_embeddings(vectors_path)
    missing = sorted({p.phrase for p in peaks if p.phrase not in table})
    if missing:
        print(f"warning: dropping {len(missing)} peak phrases without "
              f"vectors (first: {missing[0]!r})", file=sys.stderr)
    kept = [p for p in peaks if p.phrase in table]
    return build_graph(kept, corpus, index, table,
                       temporal_weight=cfg.temporal_weight,
                       edge_floor=cfg.edge_floor)


def cmd_ingest(args) -> int:
    corpus = ingest_corpus(args.corpus)
    first = corpus.base_date.isoformat()
    last = corpus.date_of_day(corpus.span[1]).isoformat()
    busiest = max(corpus.day_index.values(), key=len)
    print(f"{len(corpus)} documents over {corpus.num_days} days "
          f"({first} .. {last})")
    print(f"busiest day: {len(busiest)} documents; "
          f"empty days: {sum(1 for v in corpus.day_index.values() if not v)}")
    return 0


def cmd_retrieve(args) -> int:
    corpus = ingest_corpus(args.corpus)
    window = None
    if args.date_from or args.date_to:
        if not (args.date_from and args.date_to):
            raise DataError("--from and --to must be given together")
        window = (dt.date.fromisoformat(args.date_from),
                  dt.date.fromisoformat(args.date_to))
    sub, scores = retrieve_theme(
        corpus, args.query.split(), date_window=window,
        threshold=args.threshold, top_fraction=args.top_fraction,
    )
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        out.write("doc_id\tscore\n")
        for doc_id, score in scores:
            out.write(f"{doc_id}\t{score:.6f}\n")
    finally:
        if out is not sys.stdout:
            out.close()
    print(f"kept {len(sub)} of {len(corpus)} documents", file=sys.stderr)
    return 0


def cmd_mine_phrases(args) -> int:
    corpus = ingest_corpus(args.corpus)
    cfg = _resolve_config(args)
    external = _read_lines(args.external) if args.external else None
    mined, _ = build_candidates(corpus, external_phrases=external,
                                keep_fraction=cfg.keep_fraction)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for cand in mined:
            out.write(cand.phrase + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    print(f"{len(mined)} candidate phrases", file=sys.stderr)
    return 0


def cmd_detect_peaks(args) -> int:
    corpus = ingest_corpus(args.corpus)
    pool, index = _load_pool(corpus, args)
    cfg = _resolve_config(args)
    peaks = _peaks_for(corpus, index, pool, cfg)
    write_peaks_tsv(args.out, peaks, corpus)
    print(f"{len(peaks)} peaks -> {args.out}", file=sys.stderr)
    return 0


def cmd_build_graph(args) -> int:
    corpus = ingest_corpus(args.corpus)
    pool, index = _load_pool(corpus, args)
    cfg = _resolve_config(args)
    peaks = _peaks_for(corpus, index, pool, cfg)
    g = _graph_for(corpus, index, peaks, cfg, args.phrase_vectors)
    write_edges_tsv(args.out, g)
    print(f"{len(g.nodes)} nodes, {len(g.edges)} edges -> {args.out}",
          file=sys.stderr)
    return 0


def cmd_detect_events(args) -> int:
    corpus = ingest_corpus(args.corpus)
    pool, index = _load_pool(corpus, args)
    cfg = _resolve_config(args)
    peaks = _peaks_for(corpus, index, pool, cfg)
    g = _graph_for(corpus, index, peaks, cfg, args.phrase_vectors)
    events = detect_communities(g, min_size=cfg.min_community, seed=cfg.seed)
    write_events_tsv(args.out, events, corpus)
    print(f"{len(events)} candidate events -> {args.out}", file=sys.stderr)
    return 0


def cmd_select_docs(args) -> int:
    import os

    corpus = ingest_corpus(args.corpus)
    pool, index = _load_pool(corpus, args)
    cfg = _resolve_config(args)
    phrase_table = load_embeddings(args.phrase_vectors)
    doc_table = load_embeddings(args.doc_vectors)
    result = detect_key_events(corpus, pool, index, phrase_table,
                               doc_table, cfg, mode=args.mode)
    os.makedirs(args.out_dir, exist_ok=True)
    _write_key_events_jsonl(
        os.path.join(args.out_dir, "key_events.jsonl"), result.events, corpus)
    _write_key_events_txt(
        os.path.join(args.out_dir, "key_events.txt"), result.events, corpus)
    _write_outliers_tsv(
        os.path.join(args.out_dir, "outliers.tsv"), result.outliers, corpus)
    with open(os.path.join(args.out_dir, "audit.jsonl"), "w",
              encoding="utf-8") as fh:
        for record in result.audit:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    print(f"{len(result.events)} events, {len(result.outliers)} outliers "
          f"-> {args.out_dir}", file=sys.stderr)
    return 0


def cmd_evaluate(args) -> int:
    truth = load_ground_truth(args.truth)
    predicted: list[list[str]] = []
    for line in _read_lines(args.predictions):
        row = json.loads(line)
        docs = sorted(row["documents"], key=lambda d: d["rank"])
        predicted.append([d["id"] for d in docs])
    ks = [int(k) for k in args.ks.split(",")]
    lines = ["k\tprecision\trecall\tf1"]
    for k in ks:
        prec, rec, f1 = k_metrics(predicted, truth, k)
        lines.append(f"{k}\t{prec:.6f}\t{rec:.6f}\t{f1:.6f}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    sys.stdout.write(text)
    return 0


def cmd_run(args) -> int:
    cfg = _resolve_config(args)
    artifacts = run_pipeline(
        cfg, args.corpus,
        phrases_path=args.phrases,
        truth_path=args.truth,
        phrase_vectors_path=args.phrase_vectors,
        doc_vectors_path=args.doc_vectors,
        out_root=args.out_root,
        mode=args.mode,
    )
    result = artifacts.result
    print(f"run directory: {artifacts.run_dir}")
    print(f"{len(result.events)} key events, "
          f"{len(result.outliers)} outlier documents")
    for ev in result.events:
        lo, hi = ev.span
        print(f"  event {ev.event_id}: days {lo}-{hi}, "
              f"{len(ev.documents)} documents")
    if artifacts.truth is not None:
        for k in (5, 10):
            prec, rec, f1 = k_metrics(result.events, artifacts.truth, k)
            print(f"  k={k}: precision {prec:.4f} recall {rec:.4f} "
                  f"f1 {f1:.4f}")
    return 0


def cmd_synth(args) -> int:
    widths = tuple(int(w) for w in args.window_widths.split(","))
    spec = SynthSpec(
        num_events=args.num_events,
        docs_per_event=args.docs_per_event,
        noise_docs=args.noise_docs,
        span_days=args.span_days,
        signatures_per_event=args.signatures_per_event,
        mentions_per_signature=args.mentions_per_signature,
        window_widths=widths,
        redate_fraction=args.redate_fraction,
        reword_fraction=args.reword_fraction,
        base_date=args.base_date,
        seed=args.seed,
    )
    meta = generate_corpus(spec, args.out_dir)
    for name in sorted(meta["files"]):
        print(f"{args.out_dir}/{meta['files'][name]}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="newsevents",
                     description="key-event mining over dated news corpora")
    subs = parser.add_subparsers(dest="command", required=True,
                                 parser_class=_Parser)

    def sub(name, func, help_text):
        p = subs.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        return p

    p = sub("ingest", cmd_ingest, "validate a corpus file and summarize it")
    p.add_argument("corpus")

    p = sub("retrieve", cmd_retrieve, "select a theme sub-corpus by query")
    p.add_argument("corpus")
    p.add_argument("query", help="space-separated query words (quote them)")
    p.add_argument("--from", dest="date_from", default=None,
                   help="ISO date lower bound")
    p.add_argument("--to", dest="date_to", default=None,
                   help="ISO date upper bound")
    p.add_argument("--threshold", type=float, default=0.0)
    p.add_argument("--top-fraction", type=float, default=None)
    p.add_argument("--out", default=None, help="score TSV (default stdout)")

    p = sub("mine-phrases", cmd_mine_phrases,
            "mine candidate phrases from a corpus")
    p.add_argument("corpus")
    p.add_argument("--external", default=None,
                   help="extra phrases to merge in, one per line")
    p.add_argument("--out", default=None, help="output file (default stdout)")
    _add_config_flags(p)

    def stage(name, func, help_text, vectors=False):
        q = sub(name, func, help_text)
        q.add_argument("corpus")
        q.add_argument("--phrases", default=None,
                       help="phrase pool file; mined from the corpus if omitted")
        if vectors:
            q.add_argument("--phrase-vectors", required=True,
                           help="phrase vector TSV")
        q.add_argument("--out", required=True)
        _add_config_flags(q)
        return q

    stage("detect-peaks", cmd_detect_peaks,
          "score phrase bursts and write the peak list")
    stage("build-graph", cmd_build_graph,
          "export the weighted peak-phrase graph", vectors=True)
    stage("detect-events", cmd_detect_events,
          "group peak phrases into candidate events", vectors=True)

    p = sub("select-docs", cmd_select_docs,
            "attach documents to candidate events")
    p.add_argument("corpus")
    p.add_argument("--phrases", default=None)
    p.add_argument("--phrase-vectors", required=True)
    p.add_argument("--doc-vectors", required=True)
    p.add_argument("--mode", choices=["full", "match"], default="full",
                   help="'match' skips classifier training (count matching only)")
    p.add_argument("--out-dir", required=True)
    _add_config_flags(p)

    p = sub("evaluate", cmd_evaluate,
            "score a key_events.jsonl report against ground truth")
    p.add_argument("--predictions", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--ks", default="5,10", help="comma-separated depths")
    p.add_argument("--out", default=None, help="also write a metrics TSV here")

    p = sub("run", cmd_run, "run every stage and write a run directory")
    p.add_argument("corpus")
    p.add_argument("--phrases", default=None)
    p.add_argument("--truth", default=None)
    p.add_argument("--phrase-vectors", default=None)
    p.add_argument("--doc-vectors", default=None)
    p.add_argument("--out-root", default="runs")
    p.add_argument("--mode", choices=["full", "match"], default="full")
    _add_config_flags(p)

    p = sub("synth", cmd_synth, "generate a planted-event benchmark corpus")
    p.add_argument("out_dir")
    p.add_argument("--num-events", type=int, default=3)
    p.add_argument("--docs-per-event", type=int, default=30)
    p.add_argument("--noise-docs", type=int, default=100)
    p.add_argument("--span-days", type=int, default=60)
    p.add_argument("--signatures-per-event", type=int, default=6)
    p.add_argument("--mentions-per-signature", type=int, default=2)
    p.add_argument("--window-widths", default="2,3",
                   help="min,max planted window width in days")
    p.add_argument("--redate-fraction", type=float, default=0.0)
    p.add_argument("--reword-fraction", type=float, default=0.0)
    p.add_argument("--base-date", default="2019-06-01")
    p.add_argument("--seed", type=int, default=0)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2 if isinstance(exc.__cause__, DataError) else 3
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - last-resort guard
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
