"""Semi-automatic evaluation: auto-accept what the metric gets right with
high precision, queue everything else for human review.

Items whose metric case falls in the configured auto-accept set (case 1
by default, optionally case 2) are accepted without review; every other
item, including those where one side lacks a translation, goes to a
human annotator.  Judgments are persisted in an append-only JSON-lines
journal; replaying the journal over the initial queue reproduces the
exact state, so reports are deterministic.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from . import FORMAT_VERSION
from .apt import AptCase, AptItemResult
from .corpus import PronounCategory, PronounFunction, PronounItem, SystemRun, TokenizedCorpus, Verdict
from .errors import ConflictError, FormatError, InputError, NotFoundError

ITEM_ID_SEPARATOR = ":"


class ReviewStatus(str, Enum):
    AUTO_ACCEPTED = "auto-accepted"
    PENDING = "pending"
    JUDGED = "judged"


class DisagreementLabel(str, Enum):
    """Why a human verdict may contradict the metric."""

    VALID_ALTERNATIVE = "V"
    INCORRECT_EQUIVALENCE = "E"
    IMPERSONAL = "I"
    OTHER = "O"


@dataclass(frozen=True)
class TriageConfig:
    auto_accept_cases: frozenset[AptCase] = frozenset({AptCase.IDENTICAL})
    require_antecedent_judgment: bool = True
    conflict_resolution: str = "unable"  # or "latest"

    def __post_init__(self) -> None:
        allowed = {AptCase.IDENTICAL, AptCase.EQUIVALENT}
        if not set(self.auto_accept_cases) <= allowed:
            raise InputError("only cases 1 and 2 may be auto-accepted")
        if self.conflict_resolution not in ("unable", "latest"):
            raise InputError(f"unknown conflict resolution {self.conflict_resolution!r}")


@dataclass(frozen=True)
class Judgment:
    """One annotator's verdict on one queued item."""

    pronoun_id: str
    system_name: str
    annotator: str
    pronoun_verdict: Verdict
    antecedent_verdict: Verdict | None = None
    disagreement_label: DisagreementLabel | None = None
    revision: int = 0
    timestamp: str = ""

    def __post_init__(self) -> None:
        if not self.annotator:
            raise InputError("judgment requires an annotator name")


@dataclass
class ReviewItem:
    """One (pronoun, system) pair in the review queue."""

    pronoun_id: str
    system_name: str
    category: PronounCategory
    apt_case: AptCase
    context: dict
    status: ReviewStatus = ReviewStatus.PENDING
    revision: int = 0
    judgments: dict[str, Judgment] = field(default_factory=dict)

    @property
    def item_id(self) -> str:
        return f"{self.system_name}{ITEM_ID_SEPARATOR}{self.pronoun_id}"

    @property
    def antecedent_expected(self) -> bool:
        return any(
            highlight["kind"] == "antecedent"
            for segment in self.context.get("segments", ())
            for highlight in segment.get("source_highlights", ())
        )


@dataclass(frozen=True)
class RunContext:
    """Corpora needed to render review context: reference plus MT runs,
    all sharing one source corpus."""

    reference: SystemRun
    systems: Mapping[str, SystemRun]

    def __post_init__(self) -> None:
        for name, run in self.systems.items():
            if run.source != self.reference.source:
                raise InputError(f"run {name!r} does not share the reference's source corpus")

    @property
    def source(self) -> TokenizedCorpus:
        return self.reference.source


def _highlights(run: SystemRun, sentence_index: int, markers: list[tuple[int, str]]) -> list[dict]:
    out = []
    for token_index, kind in markers:
        for j in run.alignment.targets_of(sentence_index, token_index):
            out.append({"token_index": j, "kind": kind})
    out.sort(key=lambda h: (h["token_index"], h["kind"]))
    return out


def _build_context(item: PronounItem, mt_run: SystemRun, context: RunContext) -> dict:
    source = context.source
    involved = sorted({s for s, _ in item.antecedent_head} | {item.sentence_index})
    segments = []
    for s in involved:
        if not 0 <= s < len(source):
            raise InputError(f"item {item.id}: missing context sentence {s}")
        markers = [(t, "antecedent") for a_s, t in item.antecedent_head if a_s == s]
        if s == item.sentence_index:
            markers.append((item.token_index, "pronoun"))
        source_highlights = [
            {"token_index": t, "kind": kind} for t, kind in sorted(markers)
        ]
        segments.append(
            {
                "sentence_index": s,
                "source_tokens": list(source.sentence(s)),
                "mt_tokens": list(mt_run.target.sentence(s)),
                "ref_tokens": list(context.reference.target.sentence(s)),
                "source_highlights": source_highlights,
                "mt_highlights": _highlights(mt_run, s, markers),
                "ref_highlights": _highlights(context.reference, s, markers),
            }
        )
    return {"segments": segments}


def build_queue(
    results_by_system: Mapping[str, Sequence[AptItemResult]],
    suite: Sequence[PronounItem],
    context: RunContext,
    config: TriageConfig | None = None,
) -> "TriageState":
    """Create the review queue: auto-accept configured cases, everything
    else becomes pending, ordered by system then suite order."""
    config = config or TriageConfig()
    items_by_id = {item.id: item for item in suite}
    state = TriageState(config)
    for system_name in sorted(results_by_system):
        if ITEM_ID_SEPARATOR in system_name:
            raise InputError(f"system name {system_name!r} must not contain {ITEM_ID_SEPARATOR!r}")
        if system_name not in context.systems:
            raise InputError(f"no run supplied for system {system_name!r}")
        run = context.systems[system_name]
        results = {r.pronoun_id: r for r in results_by_system[system_name]}
        unknown = sorted(set(results) - set(items_by_id))
        if unknown:
            raise InputError(f"results for unknown pronouns: {', '.join(unknown)}")
        missing = sorted(set(items_by_id) - set(results))
        if missing:
            raise InputError(
                f"system {system_name!r} lacks results for: {', '.join(missing)}"
            )
        for item in suite:
            result = results[item.id]
            accepted = result.case in config.auto_accept_cases
            state.add(
                ReviewItem(
                    pronoun_id=item.id,
                    system_name=system_name,
                    category=item.category,
                    apt_case=result.case,
                    context=_build_context(item, run, context),
                    status=ReviewStatus.AUTO_ACCEPTED if accepted else ReviewStatus.PENDING,
                )
            )
    return state


class TriageState:
    """Review queue state; judgments are applied through :meth:`apply`."""

    def __init__(self, config: TriageConfig):
        self.config = config
        self._items: dict[tuple[str, str], ReviewItem] = {}

    def add(self, item: ReviewItem) -> None:
        key = (item.pronoun_id, item.system_name)
        if key in self._items:
            raise InputError(f"duplicate queue item {item.item_id!r}")
        self._items[key] = item

    def ordered(self) -> list[ReviewItem]:
        return list(self._items.values())

    def get(self, pronoun_id: str, system_name: str) -> ReviewItem:
        try:
            return self._items[(pronoun_id, system_name)]
        except KeyError:
            raise NotFoundError(f"unknown item {system_name}{ITEM_ID_SEPARATOR}{pronoun_id}") from None

    def by_item_id(self, item_id: str) -> ReviewItem:
        system_name, sep, pronoun_id = item_id.partition(ITEM_ID_SEPARATOR)
        if not sep:
            raise NotFoundError(f"unknown item {item_id!r}")
        return self.get(pronoun_id, system_name)

    def next_pending(
        self,
        annotator: str,
        category: PronounCategory | None = None,
        system: str | None = None,
    ) -> ReviewItem | None:
        """Lowest-ordered pending item not yet judged by this annotator."""
        for item in self._items.values():
            if item.status is not ReviewStatus.PENDING:
                continue
            if annotator in item.judgments:
                continue
            if category is not None and item.category is not category:
                continue
            if system is not None and item.system_name != system:
                continue
            return item
        return None

    def apply(self, judgment: Judgment) -> ReviewItem:
        """Record a judgment; revision must match the item's current one."""
        item = self.get(judgment.pronoun_id, judgment.system_name)
        if item.status is ReviewStatus.AUTO_ACCEPTED:
            raise InputError(f"item {item.item_id!r} was auto-accepted and takes no judgments")
        if judgment.revision != item.revision:
            raise ConflictError(
                f"stale revision {judgment.revision} for item {item.item_id!r} "
                f"(current {item.revision})"
            )
        if (
            self.config.require_antecedent_judgment
            and item.category.function is PronounFunction.ANAPHORIC
            and item.antecedent_expected
            and judgment.antecedent_verdict is None
        ):
            raise InputError(
                f"item {item.item_id!r} is anaphoric; an antecedent verdict is required"
            )
        item.judgments[judgment.annotator] = judgment
        item.status = ReviewStatus.JUDGED
        item.revision += 1
        return item


# ---------------------------------------------------------------------------
# Final report


@dataclass(frozen=True)
class ReportCell:
    total: int = 0
    auto_accepted: int = 0
    pending: int = 0
    judged: int = 0
    human_correct: int = 0
    human_incorrect: int = 0
    unable: int = 0
    conflicts: int = 0

    @property
    def accuracy(self) -> float:
        denominator = self.total - self.unable - self.pending
        if denominator <= 0:
            return 0.0
        return (self.auto_accepted + self.human_correct) / denominator

    @property
    def review_burden(self) -> float:
        if self.total == 0:
            return 0.0
        return (self.pending + self.judged) / self.total


@dataclass
class FinalReport:
    overall: ReportCell
    per_system: dict[str, ReportCell]
    per_category: dict[str, dict[str, ReportCell]]


def _effective_verdict(judgment: Judgment) -> Verdict:
    verdicts = [judgment.pronoun_verdict]
    if judgment.antecedent_verdict is not None:
        verdicts.append(judgment.antecedent_verdict)
    if Verdict.INCORRECT in verdicts:
        return Verdict.INCORRECT
    if Verdict.UNABLE in verdicts:
        return Verdict.UNABLE
    return Verdict.CORRECT


def resolve_item_verdict(item: ReviewItem, policy: str) -> tuple[Verdict | None, bool]:
    """Collapse all annotators' judgments to one verdict.

    Returns (verdict, had_conflict); verdict is None for unjudged items.
    Under the default "unable" policy a correct/incorrect conflict counts
    as unable; under "latest" the most recently applied judgment wins.
    """
    if not item.judgments:
        return None, False
    effective = {a: _effective_verdict(j) for a, j in item.judgments.items()}
    definite = {v for v in effective.values() if v is not Verdict.UNABLE}
    if len(definite) == 1:
        return next(iter(definite)), False
    if not definite:
        return Verdict.UNABLE, False
    if policy == "latest":
        latest = max(item.judgments.values(), key=lambda j: j.revision)
        return _effective_verdict(latest), True
    return Verdict.UNABLE, True


class _CellBuilder:
    __slots__ = ("counts",)

    def __init__(self):
        self.counts = dict.fromkeys(
            ("total", "auto_accepted", "pending", "judged",
             "human_correct", "human_incorrect", "unable", "conflicts"), 0
        )

    def feed(self, item: ReviewItem, verdict: Verdict | None, conflict: bool) -> None:
        c = self.counts
        c["total"] += 1
        if item.status is ReviewStatus.AUTO_ACCEPTED:
            c["auto_accepted"] += 1
        elif item.status is ReviewStatus.PENDING:
            c["pending"] += 1
        else:
            c["judged"] += 1
            if conflict:
                c["conflicts"] += 1
            if verdict is Verdict.CORRECT:
                c["human_correct"] += 1
            elif verdict is Verdict.INCORRECT:
                c["human_incorrect"] += 1
            else:
                c["unable"] += 1

    def cell(self) -> ReportCell:
        return ReportCell(**self.counts)


def final_report(state: TriageState) -> FinalReport:
    """Aggregate auto-accepted and judged outcomes into accuracies.

    Pending items are excluded from the accuracy denominator and counted
    toward the review burden.
    """
    overall = _CellBuilder()
    per_system: dict[str, _CellBuilder] = {}
    per_category: dict[str, dict[str, _CellBuilder]] = {}
    policy = state.config.conflict_resolution
    for item in state.ordered():
        verdict, conflict = resolve_item_verdict(item, policy)
        overall.feed(item, verdict, conflict)
        per_system.setdefault(item.system_name, _CellBuilder()).feed(item, verdict, conflict)
        per_category.setdefault(item.system_name, {}).setdefault(
            item.category.value, _CellBuilder()
        ).feed(item, verdict, conflict)
    return FinalReport(
        overall=overall.cell(),
        per_system={name: b.cell() for name, b in sorted(per_system.items())},
        per_category={
            name: {cat: b.cell() for cat, b in sorted(cats.items())}
            for name, cats in sorted(per_category.items())
        },
    )


def _cell_dict(cell: ReportCell) -> dict:
    return {
        "total": cell.total,
        "auto_accepted": cell.auto_accepted,
        "pending": cell.pending,
        "judged": cell.judged,
        "human_correct": cell.human_correct,
        "human_incorrect": cell.human_incorrect,
        "unable": cell.unable,
        "conflicts": cell.conflicts,
        "accuracy": round(cell.accuracy, 6),
        "review_burden": round(cell.review_burden, 6),
    }


def render_report_json(report: FinalReport) -> str:
    """Canonical JSON rendering; the single source of truth for report bytes."""
    obj = {
        "format": FORMAT_VERSION,
        "overall": _cell_dict(report.overall),
        "systems": {
            name: {
                "overall": _cell_dict(report.per_system[name]),
                "categories": {
                    cat: _cell_dict(cell) for cat, cell in report.per_category[name].items()
                },
            }
            for name in report.per_system
        },
    }
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def render_report_text(report: FinalReport) -> str:
    lines = []
    rows = [("overall", report.overall)]
    rows += [(name, cell) for name, cell in report.per_system.items()]
    width = max(len(name) for name, _ in rows)
    for name, cell in rows:
        lines.append(
            f"{name.ljust(width)}  accuracy={cell.accuracy:.3f}  "
            f"burden={cell.review_burden:.3f}  auto={cell.auto_accepted}  "
            f"correct={cell.human_correct}  incorrect={cell.human_incorrect}  "
            f"unable={cell.unable}  pending={cell.pending}  total={cell.total}"
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Persistence: queue snapshot and append-only judgment journal

_JUDGMENT_KEYS = (
    "pronoun_id", "system_name", "annotator", "pronoun_verdict",
    "antecedent_verdict", "disagreement_label", "revision", "timestamp",
)


def _judgment_dict(judgment: Judgment) -> dict:
    return {
        "pronoun_id": judgment.pronoun_id,
        "system_name": judgment.system_name,
        "annotator": judgment.annotator,
        "pronoun_verdict": judgment.pronoun_verdict.value,
        "antecedent_verdict": (
            judgment.antecedent_verdict.value if judgment.antecedent_verdict else None
        ),
        "disagreement_label": (
            judgment.disagreement_label.value if judgment.disagreement_label else None
        ),
        "revision": judgment.revision,
        "timestamp": judgment.timestamp,
    }


def judgment_from_dict(data: Mapping, where: str = "<judgment>") -> Judgment:
    unknown = set(data) - set(_JUDGMENT_KEYS)
    if unknown:
        raise FormatError(f"{where}: unknown fields {sorted(unknown)}")
    try:
        antecedent = data.get("antecedent_verdict")
        label = data.get("disagreement_label")
        return Judgment(
            pronoun_id=str(data["pronoun_id"]),
            system_name=str(data["system_name"]),
            annotator=str(data["annotator"]),
            pronoun_verdict=Verdict(data["pronoun_verdict"]),
            antecedent_verdict=Verdict(antecedent) if antecedent is not None else None,
            disagreement_label=DisagreementLabel(label) if label is not None else None,
            revision=int(data.get("revision", 0)),
            timestamp=str(data.get("timestamp", "")),
        )
    except (KeyError, ValueError, InputError) as exc:
        raise FormatError(f"{where}: bad judgment ({exc})") from None


def append_journal(path: str | Path, judgment: Judgment) -> None:
    """Append one judgment, fsynced so a crash cannot lose acknowledged writes."""
    line = json.dumps(_judgment_dict(judgment), ensure_ascii=False)
    with open(path, "a", encoding="utf-8") as handle:
        handle.write(line + "\n")
        handle.flush()
        os.fsync(handle.fileno())


def read_journal(path: str | Path) -> list[Judgment]:
    path = Path(path)
    if not path.exists():
        return []
    out = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
        out.append(judgment_from_dict(data, f"{path}:{lineno}"))
    return out


def write_queue(path: str | Path, state: TriageState) -> None:
    """Write the initial queue snapshot; judgments belong to the journal."""
    for item in state.ordered():
        if item.judgments:
            raise InputError("queue snapshot must be pristine; judgments belong to the journal")
    meta = {
        "format": FORMAT_VERSION,
        "auto_accept_cases": sorted(int(c) for c in state.config.auto_accept_cases),
        "require_antecedent_judgment": state.config.require_antecedent_judgment,
        "conflict_resolution": state.config.conflict_resolution,
    }
    lines = [json.dumps(meta, ensure_ascii=False)]
    for item in state.ordered():
        lines.append(
            json.dumps(
                {
                    "pronoun_id": item.pronoun_id,
                    "system_name": item.system_name,
                    "category": item.category.value,
                    "apt_case": int(item.apt_case),
                    "status": item.status.value,
                    "revision": item.revision,
                    "context": item.context,
                },
                ensure_ascii=False,
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_queue(path: str | Path) -> TriageState:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise FormatError(f"{path}: empty queue file")
    try:
        meta = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}:1: invalid JSON ({exc.msg})") from None
    if not isinstance(meta, dict) or "auto_accept_cases" not in meta:
        raise FormatError(f"{path}:1: expected a queue header record")
    if meta.get("format") != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported queue format {meta.get('format')!r}")
    config = TriageConfig(
        auto_accept_cases=frozenset(AptCase(c) for c in meta["auto_accept_cases"]),
        require_antecedent_judgment=bool(meta.get("require_antecedent_judgment", True)),
        conflict_resolution=str(meta.get("conflict_resolution", "unable")),
    )
    state = TriageState(config)
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
        try:
            item = ReviewItem(
                pronoun_id=str(data["pronoun_id"]),
                system_name=str(data["system_name"]),
                category=PronounCategory(data["category"]),
                apt_case=AptCase(int(data["apt_case"])),
                context=data["context"],
                status=ReviewStatus(data["status"]),
                revision=int(data["revision"]),
            )
        except (KeyError, ValueError) as exc:
            raise FormatError(f"{path}:{lineno}: bad queue item ({exc})") from None
        state.add(item)
    return state


def replay(state: TriageState, journal: Iterable[Judgment]) -> TriageState:
    """Apply journal entries in order; revisions recorded at write time must
    match exactly, which makes replay deterministic."""
    for judgment in journal:
        state.apply(judgment)
    return state


class TriageStore:
    """Single-writer facade over queue state plus journal file."""

    def __init__(self, state: TriageState, journal_path: str | Path):
        self.state = state
        self.journal_path = Path(journal_path)
        self._write_lock = threading.Lock()

    @classmethod
    def open(cls, queue_path: str | Path, journal_path: str | Path) -> "TriageStore":
        state = replay(read_queue(queue_path), read_journal(journal_path))
        return cls(state, journal_path)

    def submit(self, judgment: Judgment) -> ReviewItem:
        with self._write_lock:
            item = self.state.apply(judgment)
            append_journal(self.journal_path, judgment)
            return item
