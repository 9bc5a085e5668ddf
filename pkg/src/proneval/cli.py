"""Command-line entry point.

Subcommands: ``score apt``, ``score autoprf``, ``correlate``,
``disagreements``, ``triage init|serve|report``.  Exit codes: 0 success,
2 input error, 3 internal error.  Identical inputs and flags produce
byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import FORMAT_VERSION, __version__
from .analysis import (
    bundled_score_table,
    correlate_columns,
    disagreement_report,
    parse_score_table,
    render_disagreements_text,
    render_disagreements_tsv,
)
from .apt import (
    AptCase,
    AptConfig,
    PronounLexicon,
    format_item_results,
    load_config,
    parse_equivalence,
    parse_item_results,
    score_apt,
)
from .autoprf import score_autoprf
from .corpus import (
    SystemRun,
    parse_judgments,
    parse_moses_alignment,
    parse_test_suite,
    parse_tokenized_text,
)
from .errors import InputError, ToolkitError
from .triage import (
    RunContext,
    TriageConfig,
    TriageStore,
    build_queue,
    final_report,
    read_journal,
    read_queue,
    render_report_json,
    render_report_text,
    replay,
    write_queue,
)


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None


def _write_or_print(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _parse_weights(text: str) -> tuple[float, ...]:
    try:
        weights = tuple(float(part) for part in text.split(","))
    except ValueError:
        raise InputError(f"bad weights {text!r}: expected 6 comma-separated numbers") from None
    if len(weights) != 6:
        raise InputError(f"expected 6 weights, got {len(weights)}")
    return weights


def _apt_config(args) -> AptConfig:
    base = load_config(args.config) if args.config else AptConfig()
    kwargs = {
        "weights": base.weights,
        "fix_alignments": base.fix_alignments,
        "window": base.window,
        "equivalence": base.equivalence,
        "lexicon": base.lexicon,
    }
    if getattr(args, "weights", None) is not None:
        kwargs["weights"] = _parse_weights(args.weights)
    if getattr(args, "fix_alignments", None) is not None:
        kwargs["fix_alignments"] = args.fix_alignments
    if getattr(args, "window", None) is not None:
        kwargs["window"] = args.window
    if getattr(args, "lexicon", None) is not None:
        kwargs["lexicon"] = PronounLexicon.from_text(_read(args.lexicon), args.lexicon)
    if getattr(args, "equivalence", None) is not None:
        kwargs["equivalence"] = parse_equivalence(_read(args.equivalence), args.equivalence)
    return AptConfig(**kwargs)


def _load_scoring_inputs(args):
    source = parse_tokenized_text(_read(args.source), args.source)
    mt_corpus = parse_tokenized_text(_read(args.mt), args.mt)
    ref_corpus = parse_tokenized_text(_read(args.ref), args.ref)
    mt_alignment = parse_moses_alignment(_read(args.align_mt), source, mt_corpus, args.align_mt)
    ref_alignment = parse_moses_alignment(_read(args.align_ref), source, ref_corpus, args.align_ref)
    system = args.system or Path(args.mt).stem
    mt_run = SystemRun(system, source, mt_corpus, mt_alignment)
    ref_run = SystemRun("reference", source, ref_corpus, ref_alignment)
    suite = parse_test_suite(_read(args.suite), source, args.suite)
    return suite, mt_run, ref_run


def cmd_score_apt(args) -> int:
    suite, mt_run, ref_run = _load_scoring_inputs(args)
    config = _apt_config(args)
    score, results = score_apt(suite, mt_run, ref_run, config)
    payload = {
        "metric": "apt",
        "system": mt_run.system_name,
        "score": round(score.score, 6),
        "n_items": score.n_items,
        "case_counts": list(score.case_counts),
        "weights": list(config.weights),
        "fix_alignments": config.fix_alignments,
        "window": config.window,
    }
    if args.format == "json":
        _write_or_print(json.dumps(payload, ensure_ascii=False) + "\n", args.out)
    else:
        counts = " ".join(f"{k + 1}={c}" for k, c in enumerate(score.case_counts))
        _write_or_print(
            f"APT score for {mt_run.system_name}: {score.score:.3f} (n={score.n_items})\n"
            f"cases: {counts}\n",
            args.out,
        )
    if args.items:
        Path(args.items).write_text(
            format_item_results(results, mt_run.system_name), encoding="utf-8"
        )
    return 0


def cmd_score_autoprf(args) -> int:
    suite, mt_run, ref_run = _load_scoring_inputs(args)
    lexicon = (
        PronounLexicon.from_text(_read(args.lexicon), args.lexicon)
        if args.lexicon
        else PronounLexicon.french()
    )
    score, per_item = score_autoprf(
        suite, mt_run, ref_run, restricted=args.restrict_pronouns, lexicon=lexicon
    )
    payload = {
        "metric": "autoprf",
        "system": mt_run.system_name,
        "precision": round(score.precision, 6),
        "recall": round(score.recall, 6),
        "f": round(score.f, 6),
        "clip_total": score.clip_total,
        "candidate_total": score.candidate_total,
        "reference_total": score.reference_total,
        "restricted": args.restrict_pronouns,
    }
    if args.format == "json":
        _write_or_print(json.dumps(payload, ensure_ascii=False) + "\n", args.out)
    else:
        _write_or_print(
            f"AutoPRF for {mt_run.system_name}: P={score.precision:.3f} "
            f"R={score.recall:.3f} F={score.f:.3f} "
            f"(clip={score.clip_total} |C|={score.candidate_total} |R|={score.reference_total})\n",
            args.out,
        )
    if args.items:
        lines = [
            json.dumps(
                {
                    "pronoun_id": c.pronoun_id,
                    "system_name": mt_run.system_name,
                    "candidate": list(c.candidate),
                    "reference": list(c.reference),
                    "clip": c.clip,
                },
                ensure_ascii=False,
            )
            for c in per_item
        ]
        Path(args.items).write_text("\n".join(lines) + "\n" if lines else "", encoding="utf-8")
    return 0


def cmd_correlate(args) -> int:
    if args.table:
        table = parse_score_table(_read(args.table), args.table)
    else:
        table = bundled_score_table()
    exclude = ["Reference"] if args.exclude_reference else []
    result = correlate_columns(table, args.x, args.y, exclude_labels=exclude)
    if args.format == "json":
        payload = {
            "x": args.x,
            "y": args.y,
            "pearson": round(result.pearson, 6),
            "spearman": round(result.spearman, 6),
            "n": result.n,
        }
        sys.stdout.write(json.dumps(payload, ensure_ascii=False) + "\n")
    elif args.format == "tsv":
        sys.stdout.write("x\ty\tpearson\tspearman\tn\n")
        sys.stdout.write(
            f"{args.x}\t{args.y}\t{result.pearson:.6f}\t{result.spearman:.6f}\t{result.n}\n"
        )
    else:
        sys.stdout.write(
            f"{args.x} vs {args.y}: pearson={result.pearson:.3f} "
            f"spearman={result.spearman:.3f} (n={result.n})\n"
        )
    return 0


def cmd_disagreements(args) -> int:
    results = parse_item_results(_read(args.apt), args.apt)
    judgments = parse_judgments(_read(args.judgments), args.judgments)
    suite = parse_test_suite(_read(args.suite), None, args.suite)
    cases = {(r.pronoun_id, system): r.case for system, r in results}
    report = disagreement_report(cases, judgments, suite)
    if args.format == "json":
        rows = [
            {
                "category": row.category.value if row.category else "total",
                "case_counts": list(row.case_counts),
                "human_correct": row.human_correct,
                "human_incorrect": row.human_incorrect,
                "disagreements": row.disagreements,
                "total": row.total,
                "percent": round(row.percent, 1),
            }
            for row in list(report.rows) + [report.overall]
        ]
        payload = {
            "rows": rows,
            "case_rates": [
                round(rate, 6) if rate is not None else None for rate in report.case_rates
            ],
        }
        sys.stdout.write(json.dumps(payload, ensure_ascii=False) + "\n")
    elif args.format == "tsv":
        sys.stdout.write(render_disagreements_tsv(report))
    else:
        sys.stdout.write(render_disagreements_text(report))
    return 0


def _parse_named_paths(entries: list[str], flag: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for entry in entries:
        name, sep, path = entry.partition("=")
        if not sep or not name or not path:
            raise InputError(f"{flag} expects NAME=PATH, got {entry!r}")
        if name in out:
            raise InputError(f"duplicate {flag} entry for {name!r}")
        out[name] = path
    return out


def cmd_triage_init(args) -> int:
    source = parse_tokenized_text(_read(args.source), args.source)
    ref_corpus = parse_tokenized_text(_read(args.ref), args.ref)
    ref_alignment = parse_moses_alignment(_read(args.align_ref), source, ref_corpus, args.align_ref)
    reference = SystemRun("reference", source, ref_corpus, ref_alignment)
    suite = parse_test_suite(_read(args.suite), source, args.suite)

    pairs = parse_item_results(_read(args.apt), args.apt)
    results_by_system: dict[str, list] = {}
    for system, result in pairs:
        results_by_system.setdefault(system, []).append(result)

    mt_paths = _parse_named_paths(args.mt or [], "--mt")
    align_paths = _parse_named_paths(args.align_mt or [], "--align-mt")
    systems = {}
    for name in results_by_system:
        if name not in mt_paths or name not in align_paths:
            raise InputError(f"system {name!r} needs --mt {name}=PATH and --align-mt {name}=PATH")
        corpus = parse_tokenized_text(_read(mt_paths[name]), mt_paths[name])
        alignment = parse_moses_alignment(
            _read(align_paths[name]), source, corpus, align_paths[name]
        )
        systems[name] = SystemRun(name, source, corpus, alignment)

    auto_cases = frozenset(
        AptCase(int(c)) for c in args.auto_accept_cases.split(",") if c
    ) if args.auto_accept_cases else frozenset({AptCase.IDENTICAL})
    config = TriageConfig(
        auto_accept_cases=auto_cases,
        require_antecedent_judgment=not args.no_antecedent_judgment,
        conflict_resolution=args.conflict_resolution,
    )
    state = build_queue(results_by_system, suite, RunContext(reference, systems), config)
    write_queue(args.queue, state)
    items = state.ordered()
    accepted = sum(1 for item in items if item.status.value == "auto-accepted")
    sys.stdout.write(
        f"queue written to {args.queue}: {len(items)} items "
        f"({accepted} auto-accepted, {len(items) - accepted} pending)\n"
    )
    return 0


def _open_store(args) -> TriageStore:
    state = replay(read_queue(args.queue), read_journal(args.journal))
    return TriageStore(state, args.journal)


def cmd_triage_serve(args) -> int:
    from .service import serve

    store = _open_store(args)
    serve(store, host=args.host, port=args.port, ui_dir=args.ui)
    return 0


def cmd_triage_report(args) -> int:
    store = _open_store(args)
    report = final_report(store.state)
    if args.format == "text":
        sys.stdout.write(render_report_text(report))
    else:
        sys.stdout.write(render_report_json(report))
    return 0


def _add_scoring_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--source", required=True, help="source .tok file")
    parser.add_argument("--mt", required=True, help="MT output .tok file")
    parser.add_argument("--ref", required=True, help="reference .tok file")
    parser.add_argument("--align-mt", required=True, help="source-to-MT .moses alignment")
    parser.add_argument("--align-ref", required=True, help="source-to-reference .moses alignment")
    parser.add_argument("--suite", required=True, help="pronoun test suite .jsonl")
    parser.add_argument("--system", help="system name (default: MT file stem)")
    parser.add_argument("--lexicon", help="pronoun lexicon file, one lowercase form per line")
    parser.add_argument("--out", help="write the score here instead of stdout")
    parser.add_argument("--items", help="write per-item results (JSON lines) here")
    parser.add_argument("--format", choices=("text", "json"), default="text")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="proneval",
        description="Pronoun translation evaluation: metrics, meta-evaluation, review triage.",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"proneval {__version__} (file format {FORMAT_VERSION})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    score = sub.add_parser("score", help="run a metric over one system output")
    score_sub = score.add_subparsers(dest="metric", required=True)

    apt = score_sub.add_parser("apt", help="weighted six-case pronoun accuracy")
    _add_scoring_flags(apt)
    apt.add_argument("--weights", help="six comma-separated case weights, e.g. 1,0.5,0,0,0,0")
    apt.add_argument(
        "--fix-alignments",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="repair pronoun alignments before scoring",
    )
    apt.add_argument("--window", type=int, help="search window for alignment repair")
    apt.add_argument("--equivalence", help="equivalence table (tab-separated pairs)")
    apt.add_argument("--config", help="JSON config file; flags override it")
    apt.set_defaults(handler=cmd_score_apt)

    autoprf = score_sub.add_parser("autoprf", help="clipped-count precision/recall/F")
    _add_scoring_flags(autoprf)
    autoprf.add_argument(
        "--restrict-pronouns",
        action="store_true",
        help="keep at most one pronoun-like token per side",
    )
    autoprf.set_defaults(handler=cmd_score_autoprf)

    correlate = sub.add_parser("correlate", help="correlate two score-table columns")
    correlate.add_argument("--table", help="TSV score table (default: bundled system scores)")
    correlate.add_argument("--x", required=True, help="first metric column")
    correlate.add_argument("--y", required=True, help="second metric column")
    correlate.add_argument(
        "--exclude-reference",
        action="store_true",
        help='drop the row labeled "Reference"',
    )
    correlate.add_argument("--format", choices=("text", "json", "tsv"), default="text")
    correlate.set_defaults(handler=cmd_correlate)

    disagreements = sub.add_parser(
        "disagreements", help="per-category metric-vs-human disagreement table"
    )
    disagreements.add_argument("--apt", required=True, help="per-item APT results .jsonl")
    disagreements.add_argument("--judgments", required=True, help="human judgments .jsonl")
    disagreements.add_argument("--suite", required=True, help="pronoun test suite .jsonl")
    disagreements.add_argument("--format", choices=("text", "json", "tsv"), default="text")
    disagreements.set_defaults(handler=cmd_disagreements)

    triage = sub.add_parser("triage", help="semi-automatic review workflow")
    triage_sub = triage.add_subparsers(dest="step", required=True)

    init = triage_sub.add_parser("init", help="build the review queue from APT results")
    init.add_argument("--apt", required=True, help="per-item APT results .jsonl (all systems)")
    init.add_argument("--source", required=True)
    init.add_argument("--ref", required=True)
    init.add_argument("--align-ref", required=True)
    init.add_argument("--suite", required=True)
    init.add_argument("--mt", action="append", metavar="NAME=PATH", help="system output, repeatable")
    init.add_argument(
        "--align-mt", action="append", metavar="NAME=PATH", help="system alignment, repeatable"
    )
    init.add_argument("--queue", required=True, help="where to write queue.jsonl")
    init.add_argument("--auto-accept-cases", help="comma-separated cases, subset of 1,2 (default 1)")
    init.add_argument(
        "--conflict-resolution", choices=("unable", "latest"), default="unable"
    )
    init.add_argument(
        "--no-antecedent-judgment",
        action="store_true",
        help="do not require antecedent verdicts for anaphoric items",
    )
    init.set_defaults(handler=cmd_triage_init)

    serve = triage_sub.add_parser("serve", help="run the review service")
    serve.add_argument("--queue", required=True)
    serve.add_argument("--journal", required=True)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=7878)
    serve.add_argument("--ui", help="directory with the built annotator UI")
    serve.set_defaults(handler=cmd_triage_serve)

    report = triage_sub.add_parser("report", help="render the final accuracy report")
    report.add_argument("--queue", required=True)
    report.add_argument("--journal", required=True)
    report.add_argument("--format", choices=("json", "text"), default="json")
    report.set_defaults(handler=cmd_triage_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except KeyboardInterrupt:
        return 3


if __name__ == "__main__":
    sys.exit(main())
