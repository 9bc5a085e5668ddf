"""Clipped-count precision/recall/F-score for pronoun translation (AutoPRF).

For each source pronoun, the tokens aligned to it in the MT output form a
candidate multiset and the tokens aligned to it in the reference form a
reference multiset; the per-pronoun overlap is a clipped count (per
distinct form, the minimum of the two occurrence counts).  Precision,
recall and F are computed from the summed totals.

The restricted variant keeps only pronoun-like tokens, at most one per
side, which makes per-item clips 0/1 and the recall equal to a plain
identical-match accuracy.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from .apt import PronounLexicon, _resolve_or_fail, aligned_target_tokens
from .corpus import PronounItem, SystemRun
from .errors import InputError


@dataclass(frozen=True)
class AutoPrfCounts:
    """Per-pronoun aligned-token multisets and their clipped overlap.

    Token order follows target position so that the restricted variant's
    "leftmost" truncation is well defined.
    """

    pronoun_id: str
    candidate: tuple[str, ...]
    reference: tuple[str, ...]
    clip: int


@dataclass(frozen=True)
class AutoPrfScore:
    precision: float
    recall: float
    f: float
    clip_total: int
    candidate_total: int
    reference_total: int


def clipped_count(candidate: Iterable[str], reference: Iterable[str]) -> int:
    """Overlap between two multisets, capped per distinct form."""
    return sum((Counter(candidate) & Counter(reference)).values())


def restrict_to_pronoun(
    candidate: Sequence[str],
    reference: Sequence[str],
    lexicon: PronounLexicon,
) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """Keep only lexicon forms, then truncate each side to its leftmost one."""

    def restrict(tokens: Sequence[str]) -> tuple[str, ...]:
        kept = [t for t in tokens if t in lexicon]
        return tuple(kept[:1])

    return restrict(candidate), restrict(reference)


def score_autoprf(
    items: Sequence[PronounItem],
    mt_run: SystemRun,
    ref_run: SystemRun,
    restricted: bool = False,
    lexicon: PronounLexicon | None = None,
) -> tuple[AutoPrfScore, list[AutoPrfCounts]]:
    """Aggregate clipped-count precision/recall/F over all suite pronouns.

    Candidate and reference multisets come straight from the word
    alignments (no repair heuristic).  Empty denominators score 0.
    """
    lexicon = lexicon or PronounLexicon.french()
    if not items:
        raise InputError("no pronouns to score")
    _resolve_or_fail(items, (mt_run, ref_run))

    per_item: list[AutoPrfCounts] = []
    clip_total = candidate_total = reference_total = 0
    for item in items:
        candidate = tuple(t.lower() for _, t in aligned_target_tokens(item, mt_run))
        reference = tuple(t.lower() for _, t in aligned_target_tokens(item, ref_run))
        if restricted:
            candidate, reference = restrict_to_pronoun(candidate, reference, lexicon)
        clip = clipped_count(candidate, reference)
        per_item.append(AutoPrfCounts(item.id, candidate, reference, clip))
        clip_total += clip
        candidate_total += len(candidate)
        reference_total += len(reference)

    precision = clip_total / candidate_total if candidate_total else 0.0
    recall = clip_total / reference_total if reference_total else 0.0
    f = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    score = AutoPrfScore(
        precision=precision,
        recall=recall,
        f=f,
        clip_total=clip_total,
        candidate_total=candidate_total,
        reference_total=reference_total,
    )
    return score, per_item
