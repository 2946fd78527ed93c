"""Command-line pipeline: synth, validate, merge-scores, train, crossval,
select, timeline, eval, bench.

Exit codes: 0 success, 1 validation failure, 2 runtime error, 64 usage.
Logs go to stderr; data goes to files (validate prints its report to
stdout, the lone read-only command). Every command that writes an output
directory stamps a run manifest there.
"""
from __future__ import annotations

import argparse
import datetime as dt
import json
import sys
from pathlib import Path

from . import __version__, agent, annotation, config as cfgmod, evalkit, manifest
from . import selector as selmod
from . import synthgen, timeline as tlmod
from .corpus import (CorpusError, load_corpus, load_reference_embeddings,
                     load_truth, validate_corpus)
from .qnetwork import load_checkpoint

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _now():
    return dt.datetime.now(dt.timezone.utc)


def _load_truth_optional(corpus_dir):
    try:
        truth = load_truth(corpus_dir)
    except FileNotFoundError:
        return None, set()
    dups = {tid for tid, row in truth.items() if row.get("duplicate_of")}
    return truth, dups


def build_parser() -> _Parser:
    p = _Parser(prog="crisisline", description=__doc__)
    p.add_argument("--version", action="version", version=f"crisisline {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("synth", help="generate a synthetic corpus")
    sp.add_argument("--config", type=Path, help="synth TOML config")
    sp.add_argument("--out", type=Path, help="output corpus directory")
    sp.add_argument("--seed", type=int, help="override config seed")
    sp.add_argument("--print-config", action="store_true",
                    help="print default config TOML and exit")

    sp = sub.add_parser("validate", help="validate a corpus directory")
    sp.add_argument("--corpus", type=Path, required=True)
    sp.add_argument("--out", type=Path, help="also write the report JSON here")

    sp = sub.add_parser("merge-scores", help="recompute sc from confidences")
    sp.add_argument("--items", type=Path, required=True)
    sp.add_argument("--confidences", type=Path, required=True)
    sp.add_argument("--out", type=Path, required=True)
    sp.add_argument("--threshold", type=float, default=annotation.DEFAULT_THRESHOLD)

    sp = sub.add_parser("train", help="train the keep/discard policy")
    sp.add_argument("--corpus", type=Path)
    sp.add_argument("--config", type=Path, help="train TOML config")
    sp.add_argument("--out", type=Path)
    sp.add_argument("--seed", type=int, help="override config seed")
    sp.add_argument("--print-config", action="store_true")

    sp = sub.add_parser("crossval", help="leave-one-event-out cross-validation")
    sp.add_argument("--corpus", type=Path, required=True)
    sp.add_argument("--config", type=Path)
    sp.add_argument("--out", type=Path, required=True)

    sp = sub.add_parser("select", help="greedy selection over every day stream")
    sp.add_argument("--corpus", type=Path, required=True)
    sp.add_argument("--checkpoint", type=Path, required=True)
    sp.add_argument("--out", type=Path, required=True)
    sp.add_argument("--budget", type=int, default=300)
    sp.add_argument("--events", help="comma-separated event ids (default: all)")
    sp.add_argument("--measure-latency", action="store_true",
                    help="also write latency.json (timings are run-dependent)")

    sp = sub.add_parser("timeline", help="assemble ranked daily timelines")
    sp.add_argument("--corpus", type=Path, required=True)
    sp.add_argument("--selection", type=Path, required=True)
    sp.add_argument("--out", type=Path, required=True)
    sp.add_argument("--mode", choices=("flat", "topic"), default="flat")
    sp.add_argument("--tau", type=float, default=tlmod.DEFAULT_TAU)
    sp.add_argument("--agg", choices=("max", "mean"), default="max")
    sp.add_argument("--k", type=int, help="fixed top-k truncation")
    sp.add_argument("--k-from-references", action="store_true",
                    help="truncate per day to the nist reference max_facts_k")
    sp.add_argument("--representative-only", action="store_true",
                    help="fact text from the representative only, not joined members")

    sp = sub.add_parser("eval", help="score timelines against references")
    sp.add_argument("--corpus", type=Path, required=True)
    sp.add_argument("--timeline", type=Path, required=True)
    sp.add_argument("--out", type=Path, required=True)
    sp.add_argument("--selection", type=Path,
                    help="selection.jsonl for selected-count diagnostics")

    sp = sub.add_parser("bench", help="per-decision latency vs query count")
    sp.add_argument("--corpus", type=Path, required=True)
    sp.add_argument("--checkpoint", type=Path, required=True)
    sp.add_argument("--out", type=Path, required=True)
    sp.add_argument("--query-counts", default="1,52")
    sp.add_argument("--event", help="event id (default: largest day stream)")
    sp.add_argument("--day", help="day (requires --event)")
    sp.add_argument("--repeats", type=int, default=3)
    sp.add_argument("--budget", type=int, default=300)
    return p


# ------------------------------------------------------------- subcommands

def _cmd_synth(args) -> int:
    if args.print_config:
        print(cfgmod.to_toml(cfgmod.SynthConfig()), end="")
        return EXIT_OK
    if args.out is None:
        raise _UsageError("--out is required (unless --print-config)")
    cfg = cfgmod.load_synth_config(args.config) if args.config else cfgmod.SynthConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    started = _now()
    synthgen.generate(cfg, args.out)
    manifest.write_manifest(args.out, "synth", config_hash=cfgmod.config_hash(cfg),
                            seed=cfg.seed, started=started,
                            outputs=[p.name for p in sorted(args.out.glob("*.jsonl"))])
    _log(f"synth: wrote corpus to {args.out}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    corpus = load_corpus(args.corpus)
    report = validate_corpus(corpus)
    doc = json.dumps(report.to_dict(), indent=1, sort_keys=True)
    if args.out:
        Path(args.out).write_text(doc + "\n")
    print(doc)
    if report.ok:
        _log("validate: ok")
        return EXIT_OK
    _log(f"validate: {len(report.violations)} violation(s)")
    return EXIT_VALIDATION


def _cmd_merge_scores(args) -> int:
    n = annotation.merge_scores(args.items, args.confidences, args.out,
                                threshold=args.threshold)
    _log(f"merge-scores: wrote {n} items to {args.out}")
    return EXIT_OK


def _cmd_train(args) -> int:
    if args.print_config:
        print(cfgmod.to_toml(cfgmod.TrainConfig()), end="")
        return EXIT_OK
    if args.corpus is None or args.out is None:
        raise _UsageError("--corpus and --out are required (unless --print-config)")
    cfg = cfgmod.load_train_config(args.config) if args.config else cfgmod.TrainConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    corpus = load_corpus(args.corpus)
    _, dup_ids = _load_truth_optional(args.corpus)
    args.out.mkdir(parents=True, exist_ok=True)
    started = _now()
    ckpt = args.out / "checkpoint.json"
    net, report = agent.train(corpus, cfg, duplicate_ids=dup_ids,
                              checkpoint_path=ckpt)
    report.write_csv(args.out / "train_report.csv")
    (args.out / "train_summary.json").write_text(
        json.dumps(report.summary(), indent=1, sort_keys=True) + "\n")
    # wall clock is recorded as the manifest's duration_s (a volatile field)
    manifest.write_manifest(args.out, "train", config_hash=report.config_hash,
                            corpus=args.corpus, seed=cfg.seed, started=started,
                            outputs=["checkpoint.json", "train_report.csv",
                                     "train_summary.json"],
                            extra={"episodes": len(report.episodes)})
    _log(f"train: {len(report.episodes)} episodes, {report.total_steps} steps, "
         f"checkpoint at {ckpt}")
    return EXIT_OK


def _cmd_crossval(args) -> int:
    cfg = cfgmod.load_train_config(args.config) if args.config else cfgmod.TrainConfig()
    corpus = load_corpus(args.corpus)
    _, dup_ids = _load_truth_optional(args.corpus)
    args.out.mkdir(parents=True, exist_ok=True)
    started = _now()
    result = agent.crossval(corpus, cfg, duplicate_ids=dup_ids)
    (args.out / "crossval.json").write_text(
        json.dumps(result, indent=1, sort_keys=True) + "\n")
    manifest.write_manifest(args.out, "crossval", config_hash=cfgmod.config_hash(cfg),
                            corpus=args.corpus, seed=cfg.seed, started=started,
                            outputs=["crossval.json"])
    _log(f"crossval: {len(result['folds'])} folds")
    return EXIT_OK


def _cmd_select(args) -> int:
    corpus = load_corpus(args.corpus)
    net, _, _, _ = load_checkpoint(args.checkpoint)
    events = set(args.events.split(",")) if args.events else None
    args.out.mkdir(parents=True, exist_ok=True)
    started = _now()
    results = [selmod.select_day(net, ds, budget_max=args.budget,
                                 measure_latency=args.measure_latency)
               for ds in corpus.iter_day_streams(events)]
    selmod.write_selection(results, args.out / "selection.jsonl")
    outputs = ["selection.jsonl"]
    if args.measure_latency:
        selmod.write_latency(results, args.out / "latency.json")
        outputs.append("latency.json")
    manifest.write_manifest(args.out, "select", corpus=args.corpus,
                            started=started, outputs=outputs,
                            extra={"budget_max": args.budget,
                                   "checkpoint_sha256": _sha256(args.checkpoint)})
    kept = sum(len(r.kept) for r in results)
    _log(f"select: kept {kept} texts over {len(results)} day streams")
    return EXIT_OK


def _sha256(path) -> str:
    import hashlib
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _read_selection(path):
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def _cmd_timeline(args) -> int:
    corpus = load_corpus(args.corpus)
    rows = _read_selection(args.selection)
    texts_by_id = {t.text_id: t for ds in corpus.day_streams.values()
                   for t in ds.items}
    ref_k = {}
    if args.k_from_references:
        for ref in corpus.references:
            if ref.kind == "nist" and ref.max_facts_k:
                ref_k[(ref.event_id, ref.day)] = ref.max_facts_k
    by_day: dict[tuple[str, str], list] = {}
    for row in rows:
        kt = selmod.KeptText(text_id=row["text_id"], importance=row["importance"],
                             decision_index=row["decision_index"], si_m=row["si_m"],
                             embedding=texts_by_id[row["text_id"]].embedding)
        by_day.setdefault((row["event_id"], row["day"]), []).append(kt)
    args.out.mkdir(parents=True, exist_ok=True)
    started = _now()
    timelines = []
    for key in sorted(by_day):
        facts = tlmod.cluster_facts(by_day[key], texts_by_id, mode=args.mode,
                                    tau=args.tau, importance_agg=args.agg,
                                    join_members=not args.representative_only)
        k = args.k if args.k is not None else ref_k.get(key)
        timelines.append(tlmod.emit_timeline(facts, k=k))
    tlmod.write_timelines(timelines, args.out / "timeline.jsonl")
    manifest.write_manifest(args.out, "timeline", corpus=args.corpus,
                            started=started, outputs=["timeline.jsonl"],
                            extra={"mode": args.mode, "tau": args.tau,
                                   "agg": args.agg})
    _log(f"timeline: wrote {sum(len(t.facts) for t in timelines)} facts "
         f"over {len(timelines)} day timelines")
    return EXIT_OK


def _cmd_eval(args) -> int:
    corpus = load_corpus(args.corpus)
    try:
        ref_embs = load_reference_embeddings(args.corpus)
    except FileNotFoundError:
        ref_embs = {}
    texts_by_id = {t.text_id: t for ds in corpus.day_streams.values()
                   for t in ds.items}
    rows = _read_selection(args.timeline)
    by_day: dict[tuple[str, str], list[dict]] = {}
    for row in rows:
        by_day.setdefault((row["event_id"], row["day"]), []).append(row)
    for recs in by_day.values():
        recs.sort(key=lambda r: r["rank"])

    report = evalkit.MetricReport()
    for ref in corpus.references:
        key = (ref.event_id, ref.day)
        recs = by_day.get(key, [])
        if ref.kind == "nist" and ref.max_facts_k:
            recs = [r for r in recs if r["rank"] <= ref.max_facts_k]
        candidate = " ".join(r["factText"] for r in recs)
        rouge = evalkit.rouge2_f1(candidate, ref.text)
        semantic = None
        emb_ref = ref_embs.get((ref.event_id, ref.day, ref.kind))
        if emb_ref is not None and recs:
            cand_emb = [texts_by_id[r["sources"][0]].embedding for r in recs]
            semantic = evalkit.semantic_score(cand_emb, emb_ref["embeddings"])
        report.rows.append(evalkit.MetricRow(event_id=ref.event_id, day=ref.day,
                                             kind=ref.kind, rouge2=rouge,
                                             semantic=semantic))
    args.out.mkdir(parents=True, exist_ok=True)
    started = _now()
    report.write_csv(args.out / "metrics.csv")
    report.write_json(args.out / "metrics.json")
    outputs = ["metrics.csv", "metrics.json"]
    if args.selection:
        sel_rows = _read_selection(args.selection)
        sel_counts: dict[tuple[str, str], int] = {}
        for row in sel_rows:
            key = (row["event_id"], row["day"])
            sel_counts[key] = sel_counts.get(key, 0) + 1
        ref_counts = {(r.event_id, r.day): r.max_facts_k for r in corpus.references
                      if r.kind == "nist" and r.max_facts_k}
        # Days where nothing was selected still count as zero.
        for key in ref_counts:
            sel_counts.setdefault(key, 0)
        diag = evalkit.selection_diagnostics(sel_counts, ref_counts)
        (args.out / "diagnostics.json").write_text(
            json.dumps(diag.to_dict(), indent=1, sort_keys=True) + "\n")
        outputs.append("diagnostics.json")
    manifest.write_manifest(args.out, "eval", corpus=args.corpus,
                            started=started, outputs=outputs)
    _log(f"eval: scored {len(report.rows)} (event, day, kind) rows")
    return EXIT_OK


def _cmd_bench(args) -> int:
    try:
        counts = [int(x) for x in args.query_counts.split(",") if x.strip()]
    except ValueError as exc:
        raise _UsageError(f"bad --query-counts: {exc}") from exc
    if not counts:
        raise _UsageError("--query-counts must list at least one integer")
    if args.day and not args.event:
        raise _UsageError("--day requires --event")
    corpus = load_corpus(args.corpus)
    net, _, _, _ = load_checkpoint(args.checkpoint)
    if args.event:
        day = args.day or corpus.events[args.event].day_ids[0]
        ds = corpus.day_stream(args.event, day)
    else:
        ds = max(corpus.day_streams.values(), key=lambda d: (len(d), d.event_id, d.day))
    args.out.mkdir(parents=True, exist_ok=True)
    started = _now()
    result = evalkit.latency_bench(net, ds, counts, repeats=args.repeats,
                                   budget_max=args.budget)
    result["event_id"] = ds.event_id
    result["day"] = ds.day
    (args.out / "latency.json").write_text(
        json.dumps(result, indent=1, sort_keys=True) + "\n")
    manifest.write_manifest(args.out, "bench", corpus=args.corpus,
                            started=started, outputs=["latency.json"],
                            extra={"checkpoint_sha256": _sha256(args.checkpoint)})
    _log(f"bench: {result['per_query_count']}")
    return EXIT_OK


_HANDLERS = {
    "synth": _cmd_synth,
    "validate": _cmd_validate,
    "merge-scores": _cmd_merge_scores,
    "train": _cmd_train,
    "crossval": _cmd_crossval,
    "select": _cmd_select,
    "timeline": _cmd_timeline,
    "eval": _cmd_eval,
    "bench": _cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _HANDLERS[args.command](args)
    except _UsageError as exc:
        _log(f"crisisline: usage error: {exc}")
        return EXIT_USAGE
    except (CorpusError, FileNotFoundError, ValueError) as exc:
        _log(f"crisisline: invalid input: {exc}")
        return EXIT_VALIDATION
    except agent.TrainingDiverged as exc:
        _log(f"crisisline: training diverged: {exc}; dump: {exc.dump}")
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        _log(f"crisisline: error: {type(exc).__name__}: {exc}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
