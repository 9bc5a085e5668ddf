"""Meta-evaluation: metric-vs-human correlations and disagreement tables.

Correlation coefficients are computed over system-level score tables
(label column plus named metric columns, TSV).  Disagreement analysis
joins per-pronoun metric cases with human verdicts and reports, per
function category, how often a case-1/2 outcome met an "incorrect"
verdict or a case-3 outcome met a "correct" one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Mapping, Sequence

from .apt import AptCase
from .corpus import (
    CATEGORY_ORDER,
    HumanJudgmentRecord,
    PronounCategory,
    PronounItem,
    Verdict,
)
from .errors import FormatError, InputError


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Sample Pearson correlation coefficient."""
    if len(xs) != len(ys):
        raise InputError(f"length mismatch: {len(xs)} vs {len(ys)}")
    n = len(xs)
    if n < 2:
        raise InputError("need at least two points")
    mean_x = math.fsum(xs) / n
    mean_y = math.fsum(ys) / n
    cov = math.fsum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    var_x = math.fsum((x - mean_x) ** 2 for x in xs)
    var_y = math.fsum((y - mean_y) ** 2 for y in ys)
    if var_x == 0.0 or var_y == 0.0:
        raise InputError("undefined correlation: constant input")
    return cov / math.sqrt(var_x * var_y)


def average_ranks(values: Sequence[float]) -> list[float]:
    """1-based ranks of the values, ties resolved to their average rank."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Spearman rank correlation: Pearson over average-ranked data."""
    if len(xs) != len(ys):
        raise InputError(f"length mismatch: {len(xs)} vs {len(ys)}")
    return pearson(average_ranks(xs), average_ranks(ys))


@dataclass(frozen=True)
class CorrelationResult:
    pearson: float
    spearman: float
    n: int


@dataclass(frozen=True)
class ScoreTable:
    """Rows of (label, metric values); every row shares the metric set."""

    label_header: str
    metrics: tuple[str, ...]
    rows: tuple[tuple[str, tuple[float, ...]], ...]

    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.rows)

    def column(self, metric: str) -> list[float]:
        try:
            k = self.metrics.index(metric)
        except ValueError:
            raise InputError(
                f"unknown metric column {metric!r}; available: {', '.join(self.metrics)}"
            ) from None
        return [values[k] for _, values in self.rows]


def parse_score_table(raw: str, name: str = "<table>") -> ScoreTable:
    """Parse a TSV score table: header row, then one labeled row per system."""
    lines = [line for line in raw.splitlines() if line.strip()]
    if len(lines) < 2:
        raise FormatError(f"{name}: need a header row and at least one data row")
    header = lines[0].split("\t")
    if len(header) < 2:
        raise FormatError(f"{name}:1: need a label column and at least one metric column")
    metrics = tuple(header[1:])
    if len(set(metrics)) != len(metrics):
        raise FormatError(f"{name}:1: duplicate metric columns")
    rows = []
    seen_labels: set[str] = set()
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split("\t")
        if len(fields) != len(header):
            raise FormatError(f"{name}:{lineno}: expected {len(header)} columns, got {len(fields)}")
        label = fields[0]
        if label in seen_labels:
            raise FormatError(f"{name}:{lineno}: duplicate label {label!r}")
        seen_labels.add(label)
        try:
            values = tuple(float(v) for v in fields[1:])
        except ValueError:
            raise FormatError(f"{name}:{lineno}: non-numeric value") from None
        for v in values:
            if not 0.0 <= v <= 1.0:
                raise FormatError(f"{name}:{lineno}: score {v} outside [0, 1]")
        rows.append((label, values))
    return ScoreTable(header[0], metrics, tuple(rows))


def format_score_table(table: ScoreTable) -> str:
    lines = ["\t".join((table.label_header,) + table.metrics)]
    for label, values in table.rows:
        lines.append("\t".join([label] + [f"{v:.3f}" for v in values]))
    return "\n".join(lines) + "\n"


def bundled_score_table() -> ScoreTable:
    """Published system-level APT and human-judgment scores shipped with the
    package (eight MT systems plus the reference, English-French)."""
    text = (resources.files("proneval") / "data" / "protest_system_scores.tsv").read_text("utf-8")
    return parse_score_table(text, "protest_system_scores.tsv")


def correlate_columns(
    table: ScoreTable,
    x_metric: str,
    y_metric: str,
    exclude_labels: Iterable[str] = (),
) -> CorrelationResult:
    """Pearson and Spearman correlation between two metric columns."""
    excluded = set(exclude_labels)
    xs, ys = [], []
    for (label, _), x, y in zip(table.rows, table.column(x_metric), table.column(y_metric)):
        if label in excluded:
            continue
        xs.append(x)
        ys.append(y)
    return CorrelationResult(pearson(xs, ys), spearman(xs, ys), len(xs))


@dataclass(frozen=True)
class RankedRow:
    label: str
    value: float
    rank: int  # competition ranking; tied labels share a rank


def rank_systems(table: ScoreTable, metric: str) -> list[RankedRow]:
    """Rows ordered by descending metric value, ties broken lexicographically."""
    column = table.column(metric)
    pairs = sorted(zip(table.labels(), column), key=lambda lv: (-lv[1], lv[0]))
    out = []
    for label, value in pairs:
        rank = 1 + sum(1 for v in column if v > value)
        out.append(RankedRow(label, value, rank))
    return out


@dataclass(frozen=True)
class DisagreementRow:
    """Joined case/verdict counts for one category (or overall)."""

    category: PronounCategory | None
    case_counts: tuple[int, int, int]
    human_correct: int
    human_incorrect: int
    disagreements: int
    total: int

    @property
    def percent(self) -> float:
        return 100.0 * self.disagreements / self.total if self.total else 0.0

    @property
    def label(self) -> str:
        return self.category.label if self.category is not None else "TOTAL"


@dataclass(frozen=True)
class DisagreementReport:
    rows: tuple[DisagreementRow, ...]
    overall: DisagreementRow
    #: Disagreement rate within joined items of case 1, 2, 3 (None if no items).
    case_rates: tuple[float | None, float | None, float | None]


def _resolve_verdict(records: Sequence[HumanJudgmentRecord]) -> Verdict | None:
    """Collapse one (pronoun, system) group to a single pronoun verdict.

    The latest record per annotator wins; definite verdicts outrank
    "unable"; a correct/incorrect conflict between annotators resolves to
    no verdict (excluded from the join, like "unable").
    """
    latest: dict[str, Verdict] = {}
    for record in records:
        latest[record.annotator] = record.pronoun_verdict
    definite = {v for v in latest.values() if v is not Verdict.UNABLE}
    if len(definite) == 1:
        return definite.pop()
    return None


def disagreement_report(
    cases: Mapping[tuple[str, str], AptCase],
    judgments: Iterable[HumanJudgmentRecord],
    suite: Iterable[PronounItem],
) -> DisagreementReport:
    """Join metric cases with human verdicts and tabulate disagreements.

    Only pairs where the metric produced case 1, 2 or 3 and the human
    verdict is definite take part; a disagreement is a case-1/2 outcome
    judged incorrect or a case-3 outcome judged correct.
    """
    categories = {item.id: item.category for item in suite}
    grouped: dict[tuple[str, str], list[HumanJudgmentRecord]] = {}
    for record in judgments:
        if record.pronoun_id not in categories:
            raise InputError(f"judgment references unknown pronoun id {record.pronoun_id!r}")
        grouped.setdefault((record.pronoun_id, record.system_name), []).append(record)

    per_category: dict[PronounCategory, list[int]] = {}
    # cells: case1, case2, case3, correct, incorrect, disagreements, total
    case_joined = [0, 0, 0]
    case_disagreed = [0, 0, 0]
    for key, records in grouped.items():
        case = cases.get(key)
        if case is None or case not in (AptCase.IDENTICAL, AptCase.EQUIVALENT, AptCase.INCOMPATIBLE):
            continue
        verdict = _resolve_verdict(records)
        if verdict is None:
            continue
        category = categories[key[0]]
        cell = per_category.setdefault(category, [0, 0, 0, 0, 0, 0, 0])
        cell[case - 1] += 1
        if verdict is Verdict.CORRECT:
            cell[3] += 1
        else:
            cell[4] += 1
        metric_says_correct = case in (AptCase.IDENTICAL, AptCase.EQUIVALENT)
        disagreed = metric_says_correct == (verdict is Verdict.INCORRECT)
        if disagreed:
            cell[5] += 1
            case_disagreed[case - 1] += 1
        cell[6] += 1
        case_joined[case - 1] += 1

    rows = []
    totals = [0, 0, 0, 0, 0, 0, 0]
    for category in CATEGORY_ORDER:
        if category not in per_category:
            continue
        cell = per_category[category]
        rows.append(
            DisagreementRow(
                category=category,
                case_counts=(cell[0], cell[1], cell[2]),
                human_correct=cell[3],
                human_incorrect=cell[4],
                disagreements=cell[5],
                total=cell[6],
            )
        )
        for i in range(7):
            totals[i] += cell[i]
    overall = DisagreementRow(
        category=None,
        case_counts=(totals[0], totals[1], totals[2]),
        human_correct=totals[3],
        human_incorrect=totals[4],
        disagreements=totals[5],
        total=totals[6],
    )
    case_rates = tuple(
        (case_disagreed[k] / case_joined[k]) if case_joined[k] else None for k in range(3)
    )
    return DisagreementReport(tuple(rows), overall, case_rates)


_DISAGREEMENT_HEADER = (
    "category", "case1", "case2", "case3",
    "human_correct", "human_incorrect", "disagreements", "total", "percent",
)


def _row_fields(row: DisagreementRow) -> list[str]:
    return [
        row.label,
        str(row.case_counts[0]),
        str(row.case_counts[1]),
        str(row.case_counts[2]),
        str(row.human_correct),
        str(row.human_incorrect),
        str(row.disagreements),
        str(row.total),
        f"{row.percent:.1f}",
    ]


def render_disagreements_tsv(report: DisagreementReport) -> str:
    lines = ["\t".join(_DISAGREEMENT_HEADER)]
    for row in report.rows:
        lines.append("\t".join(_row_fields(row)))
    lines.append("\t".join(_row_fields(report.overall)))
    return "\n".join(lines) + "\n"


def render_disagreements_text(report: DisagreementReport) -> str:
    table = [list(_DISAGREEMENT_HEADER)]
    for row in report.rows:
        table.append(_row_fields(row))
    table.append(_row_fields(report.overall))
    widths = [max(len(line[i]) for line in table) for i in range(len(table[0]))]
    rendered = []
    for line in table:
        rendered.append(
            line[0].ljust(widths[0])
            + "  "
            + "  ".join(field.rjust(widths[i + 1]) for i, field in enumerate(line[1:]))
        )
    for k, rate in enumerate(report.case_rates, start=1):
        shown = f"{100 * rate:.1f}%" if rate is not None else "n/a"
        rendered.append(f"case {k} disagreement rate: {shown}")
    return "\n".join(rendered) + "\n"
