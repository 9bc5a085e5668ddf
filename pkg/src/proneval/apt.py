"""Weighted six-case pronoun translation accuracy (APT).

For each source pronoun the metric compares the tokens aligned to it in
the MT output and in the reference, reduces each side to at most one
candidate pronoun, and classifies the pair into one of six cases:

1. identical, 2. equivalent, 3. incompatible, 4. no translation in the
MT output, 5. no translation in the reference, 6. no translation in
either.

Each case carries a configurable weight in [0, 1]; the score is the
weighted proportion of pronouns.  An optional heuristic repairs pronoun
alignments before scoring (word alignment is notoriously unreliable for
pronouns), searching a window around a projected target position.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import PronounItem, SystemRun
from .errors import FormatError, InputError


class AptCase(IntEnum):
    IDENTICAL = 1
    EQUIVALENT = 2
    INCOMPATIBLE = 3
    NO_MT_TRANSLATION = 4
    NO_REF_TRANSLATION = 5
    NO_TRANSLATION = 6


#: Weight presets: APT-A credits identical matches only; APT-B adds half
#: credit for equivalent matches.
APT_A_WEIGHTS = (1.0, 0.0, 0.0, 0.0, 0.0, 0.0)
APT_B_WEIGHTS = (1.0, 0.5, 0.0, 0.0, 0.0, 0.0)

#: Default target-side pronoun inventory for French.
FRENCH_PRONOUN_FORMS = (
    "il", "elle", "ils", "elles", "ce", "c'", "ça", "cela", "on",
    "le", "la", "les", "lui", "leur", "eux", "y", "en", "tu", "vous",
    "se", "s'",
)


@dataclass(frozen=True)
class PronounLexicon:
    """Set of lowercased target-language tokens considered pronouns."""

    forms: frozenset[str]

    def __post_init__(self) -> None:
        if not self.forms:
            raise InputError("pronoun lexicon must not be empty")
        for form in self.forms:
            if not form or form != form.lower() or any(ch.isspace() for ch in form):
                raise InputError(f"bad lexicon form {form!r}: must be lowercase, no whitespace")

    def __contains__(self, token: str) -> bool:
        return token.lower() in self.forms

    @classmethod
    def french(cls) -> "PronounLexicon":
        return cls(frozenset(FRENCH_PRONOUN_FORMS))

    @classmethod
    def from_text(cls, text: str, name: str = "<lexicon>") -> "PronounLexicon":
        """One form per line; blank lines and ``#`` comments are skipped."""
        forms = set()
        for lineno, line in enumerate(text.splitlines(), start=1):
            form = line.strip()
            if not form or form.startswith("#"):
                continue
            if form != form.lower():
                raise FormatError(f"{name}:{lineno}: lexicon form {form!r} must be lowercase")
            forms.add(form)
        if not forms:
            raise FormatError(f"{name}: empty lexicon")
        return cls(frozenset(forms))


EquivalenceTable = frozenset[frozenset[str]]


def parse_equivalence(text: str, name: str = "<equivalence>") -> EquivalenceTable:
    """Parse an equivalence table: one tab-separated pair of forms per line.

    Forms are folded to lowercase; a pair of identical forms is rejected.
    """
    pairs = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 2:
            raise FormatError(f"{name}:{lineno}: expected two tab-separated forms")
        a, b = (part.strip().lower() for part in parts)
        if not a or not b:
            raise FormatError(f"{name}:{lineno}: empty form")
        if a == b:
            raise FormatError(f"{name}:{lineno}: pair of identical forms {a!r}")
        pairs.add(frozenset((a, b)))
    return frozenset(pairs)


def format_equivalence(table: EquivalenceTable) -> str:
    lines = sorted("\t".join(sorted(pair)) for pair in table)
    return "\n".join(lines) + "\n" if lines else ""


@dataclass(frozen=True)
class AptConfig:
    """Scoring configuration: case weights, alignment repair, equivalence."""

    weights: tuple[float, ...] = APT_A_WEIGHTS
    fix_alignments: bool = False
    window: int = 3
    equivalence: EquivalenceTable = frozenset()
    lexicon: PronounLexicon = field(default_factory=PronounLexicon.french)

    def __post_init__(self) -> None:
        if len(self.weights) != 6:
            raise InputError(f"expected 6 case weights, got {len(self.weights)}")
        for k, w in enumerate(self.weights, start=1):
            if not 0.0 <= w <= 1.0:
                raise InputError(f"weight for case {k} is {w}, must be in [0, 1]")
        if self.window < 0:
            raise InputError("window must be >= 0")
        for pair in self.equivalence:
            if len(pair) != 2:
                raise InputError(f"equivalence pair {set(pair)} must contain two distinct forms")


def load_config(path: str | Path) -> AptConfig:
    """Load a JSON config file; relative lexicon/equivalence paths resolve
    against the config file's directory."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc.msg})") from None
    if not isinstance(data, dict):
        raise FormatError(f"{path}: expected a JSON object")
    known = {"weights", "fix_alignments", "window", "lexicon", "equivalence"}
    unknown = set(data) - known
    if unknown:
        raise FormatError(f"{path}: unknown config fields {sorted(unknown)}")
    kwargs: dict = {}
    if "weights" in data:
        kwargs["weights"] = tuple(float(w) for w in data["weights"])
    if "fix_alignments" in data:
        kwargs["fix_alignments"] = bool(data["fix_alignments"])
    if "window" in data:
        kwargs["window"] = int(data["window"])
    if "lexicon" in data:
        lexicon_path = path.parent / data["lexicon"]
        kwargs["lexicon"] = PronounLexicon.from_text(
            lexicon_path.read_text(encoding="utf-8"), str(lexicon_path)
        )
    if "equivalence" in data:
        eq_path = path.parent / data["equivalence"]
        kwargs["equivalence"] = parse_equivalence(
            eq_path.read_text(encoding="utf-8"), str(eq_path)
        )
    return AptConfig(**kwargs)


@dataclass(frozen=True)
class AptItemResult:
    """Per-pronoun outcome: the case plus the compared candidate tokens."""

    pronoun_id: str
    case: AptCase
    mt_token: str | None
    ref_token: str | None
    alignment_was_corrected: bool = False

    def __post_init__(self) -> None:
        mt_expected = self.case in (AptCase.IDENTICAL, AptCase.EQUIVALENT,
                                    AptCase.INCOMPATIBLE, AptCase.NO_REF_TRANSLATION)
        ref_expected = self.case in (AptCase.IDENTICAL, AptCase.EQUIVALENT,
                                     AptCase.INCOMPATIBLE, AptCase.NO_MT_TRANSLATION)
        if (self.mt_token is not None) != mt_expected:
            raise InputError(f"item {self.pronoun_id}: mt_token inconsistent with case {self.case}")
        if (self.ref_token is not None) != ref_expected:
            raise InputError(f"item {self.pronoun_id}: ref_token inconsistent with case {self.case}")


@dataclass(frozen=True)
class AptScore:
    """Aggregate weighted accuracy over all scored pronouns."""

    score: float
    n_items: int
    case_counts: tuple[int, int, int, int, int, int]


def aligned_target_tokens(item: PronounItem, run: SystemRun) -> list[tuple[int, str]]:
    """All target tokens linked to the pronoun's source position, by target index."""
    sentence = run.target.sentence(item.sentence_index)
    indices = run.alignment.targets_of(item.sentence_index, item.token_index)
    return [(j, sentence[j]) for j in indices]


def correct_alignment(
    item: PronounItem,
    run: SystemRun,
    lexicon: PronounLexicon,
    window: int = 3,
    suite: Sequence[PronounItem] = (),
) -> tuple[list[tuple[int, str]], bool]:
    """Repair the pronoun's alignment when it links to no pronoun-like token.

    If the aligned tokens already contain a lexicon form the alignment is
    returned unchanged.  Otherwise target positions within ``window`` of a
    projected position are searched for the nearest lexicon token that is
    not aligned to a different suite pronoun; the projection is the median
    target index linked to the two source neighbors on each side, falling
    back to the pronoun's relative sentence position scaled to the target
    length.  Returns the (possibly replaced) token list and whether a
    repair was applied.
    """
    raw = aligned_target_tokens(item, run)
    if any(token in lexicon for _, token in raw):
        return raw, False
    source_sentence = run.source.sentence(item.sentence_index)
    target_sentence = run.target.sentence(item.sentence_index)
    links = run.alignment.pairs(item.sentence_index)

    neighbor_indices = {
        item.token_index + offset
        for offset in (-2, -1, 1, 2)
        if 0 <= item.token_index + offset < len(source_sentence)
    }
    neighbor_targets = sorted(j for i, j in links if i in neighbor_indices)
    if neighbor_targets:
        projected = statistics.median(neighbor_targets)
    else:
        projected = item.token_index / len(source_sentence) * len(target_sentence)

    other_positions = {
        p.token_index
        for p in suite
        if p.sentence_index == item.sentence_index and p.token_index != item.token_index
    }
    reserved = {j for i, j in links if i in other_positions}

    candidates = [
        j
        for j in range(len(target_sentence))
        if abs(j - projected) <= window
        and target_sentence[j] in lexicon
        and j not in reserved
    ]
    if not candidates:
        return raw, False
    best = min(candidates, key=lambda j: (abs(j - projected), j))
    return [(best, target_sentence[best])], True


def select_pronoun_translation(
    tokens: Iterable[tuple[int, str]], lexicon: PronounLexicon
) -> str | None:
    """Lowercased leftmost aligned token that is in the lexicon, if any."""
    for _, token in tokens:
        if token in lexicon:
            return token.lower()
    return None


def classify(mt: str | None, ref: str | None, equivalence: EquivalenceTable) -> AptCase:
    """Assign the six-way case for one candidate pair (tokens case-folded)."""
    if mt is not None and ref is not None:
        mt, ref = mt.lower(), ref.lower()
        if mt == ref:
            return AptCase.IDENTICAL
        if frozenset((mt, ref)) in equivalence:
            return AptCase.EQUIVALENT
        return AptCase.INCOMPATIBLE
    if mt is None and ref is not None:
        return AptCase.NO_MT_TRANSLATION
    if mt is not None and ref is None:
        return AptCase.NO_REF_TRANSLATION
    return AptCase.NO_TRANSLATION


def _resolve_or_fail(items: Sequence[PronounItem], runs: Sequence[SystemRun]) -> None:
    bad = set()
    for item in items:
        for run in runs:
            if (
                not 0 <= item.sentence_index < len(run.target)
                or not 0 <= item.token_index < len(run.source.sentence(item.sentence_index))
            ):
                bad.add(item.id)
                break
    if bad:
        raise InputError(f"items not resolvable in runs: {', '.join(sorted(bad))}")


def score_apt(
    items: Sequence[PronounItem],
    mt_run: SystemRun,
    ref_run: SystemRun,
    config: AptConfig | None = None,
) -> tuple[AptScore, list[AptItemResult]]:
    """Score every suite pronoun and aggregate the weighted accuracy.

    Pipeline per item: optionally repair the alignment on both sides, pick
    one candidate pronoun per side, classify the pair, then weight.
    """
    config = config or AptConfig()
    if not items:
        raise InputError("no pronouns to score")
    _resolve_or_fail(items, (mt_run, ref_run))

    results: list[AptItemResult] = []
    counts = [0] * 6
    for item in items:
        corrected = False
        if config.fix_alignments:
            mt_tokens, fixed_mt = correct_alignment(
                item, mt_run, config.lexicon, config.window, suite=items
            )
            ref_tokens, fixed_ref = correct_alignment(
                item, ref_run, config.lexicon, config.window, suite=items
            )
            corrected = fixed_mt or fixed_ref
        else:
            mt_tokens = aligned_target_tokens(item, mt_run)
            ref_tokens = aligned_target_tokens(item, ref_run)
        mt_token = select_pronoun_translation(mt_tokens, config.lexicon)
        ref_token = select_pronoun_translation(ref_tokens, config.lexicon)
        case = classify(mt_token, ref_token, config.equivalence)
        counts[case - 1] += 1
        results.append(
            AptItemResult(
                pronoun_id=item.id,
                case=case,
                mt_token=mt_token,
                ref_token=ref_token,
                alignment_was_corrected=corrected,
            )
        )
    total = sum(w * c for w, c in zip(config.weights, counts))
    score = AptScore(
        score=total / len(items),
        n_items=len(items),
        case_counts=tuple(counts),
    )
    return score, results


def format_item_results(results: Iterable[AptItemResult], system_name: str) -> str:
    """Render per-item results as JSON lines with a fixed key order."""
    lines = []
    for r in results:
        lines.append(
            json.dumps(
                {
                    "pronoun_id": r.pronoun_id,
                    "system_name": system_name,
                    "case": int(r.case),
                    "mt_token": r.mt_token,
                    "ref_token": r.ref_token,
                    "alignment_was_corrected": r.alignment_was_corrected,
                },
                ensure_ascii=False,
            )
        )
    return "\n".join(lines) + "\n" if lines else ""


def parse_item_results(raw: str, name: str = "<results>") -> list[tuple[str, AptItemResult]]:
    """Parse per-item result lines back into (system_name, result) pairs."""
    out: list[tuple[str, AptItemResult]] = []
    for lineno, line in enumerate(raw.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{name}:{lineno}: invalid JSON ({exc.msg})") from None
        try:
            result = AptItemResult(
                pronoun_id=str(data["pronoun_id"]),
                case=AptCase(int(data["case"])),
                mt_token=data.get("mt_token"),
                ref_token=data.get("ref_token"),
                alignment_was_corrected=bool(data.get("alignment_was_corrected", False)),
            )
            system_name = str(data["system_name"])
        except (KeyError, ValueError, InputError) as exc:
            raise FormatError(f"{name}:{lineno}: bad result record ({exc})") from None
        out.append((system_name, result))
    return out
