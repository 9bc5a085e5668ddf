"""Shared test utilities: fixture builders, random instance generation, and
independent brute-force re-computations of both metrics.

The oracles below deliberately avoid every package scoring function; they
re-derive scores directly from the metric definitions with plain loops so
that they can serve as an independent cross-check.
"""

from __future__ import annotations

import random

from proneval.apt import AptCase, AptItemResult
from proneval.corpus import (
    HumanJudgmentRecord,
    PronounCategory,
    PronounItem,
    SystemRun,
    TokenizedCorpus,
    Verdict,
    WordAlignment,
    identity_alignment,
)

LEXICON_FORMS = frozenset(
    {
        "il", "elle", "ils", "elles", "ce", "c'", "ça", "cela", "on",
        "le", "la", "les", "lui", "leur", "eux", "y", "en", "tu", "vous",
        "se", "s'",
    }
)

TARGET_VOCAB = [
    "il", "elle", "ils", "elles", "ce", "cela", "on", "vous",
    "que", "est", "sont", "rouge", "maison", "chat", "et", ".",
]
SOURCE_PRONOUNS = ["it", "they", "you"]
SOURCE_FILLER = ["the", "cat", "is", "red", "house", "and", "."]


def corpus_of(*sentences: str) -> TokenizedCorpus:
    return TokenizedCorpus(tuple(tuple(s.split()) for s in sentences))


def run_of(name, source, target_sentences, link_sets) -> SystemRun:
    return SystemRun(
        name,
        source,
        TokenizedCorpus(tuple(tuple(s.split()) for s in target_sentences)),
        WordAlignment(tuple(frozenset(links) for links in link_sets)),
    )


def self_run(name: str, corpus: TokenizedCorpus) -> SystemRun:
    """A corpus scored against itself with identity alignments."""
    return SystemRun(name, corpus, corpus, identity_alignment(corpus))


# ---------------------------------------------------------------------------
# Random instances


def random_source(rng: random.Random, max_sentences: int = 5, max_tokens: int = 8):
    n_sent = rng.randint(1, max_sentences)
    sentences = []
    for _ in range(n_sent):
        n = rng.randint(1, max_tokens)
        sentences.append(
            tuple(
                rng.choice(SOURCE_PRONOUNS) if rng.random() < 0.35 else rng.choice(SOURCE_FILLER)
                for _ in range(n)
            )
        )
    return TokenizedCorpus(tuple(sentences))


def random_items(rng: random.Random, source: TokenizedCorpus) -> list[PronounItem]:
    items = []
    pid = 0
    categories = list(PronounCategory)
    for s, sentence in enumerate(source.sentences):
        for t, token in enumerate(sentence):
            if token in SOURCE_PRONOUNS and rng.random() < 0.7:
                items.append(PronounItem(f"p{pid}", s, t, token, rng.choice(categories)))
                pid += 1
    if not items:
        s = rng.randrange(len(source))
        sentence = source.sentences[s]
        t = rng.randrange(len(sentence))
        items.append(PronounItem("p0", s, t, sentence[t], rng.choice(categories)))
    return items


def random_run(
    rng: random.Random,
    source: TokenizedCorpus,
    name: str,
    max_tokens: int = 8,
    items: list[PronounItem] | None = None,
    force_aligned_pronoun: bool = False,
) -> SystemRun:
    """Random target corpus and alignment.  With ``force_aligned_pronoun``
    every given item gets at least one aligned lexicon token."""
    target_sentences = []
    link_sets = []
    for s, sentence in enumerate(source.sentences):
        m = rng.randint(1, max_tokens)
        target = [rng.choice(TARGET_VOCAB) for _ in range(m)]
        pairs: set[tuple[int, int]] = set()
        for _ in range(rng.randint(0, len(sentence) + m)):
            pairs.add((rng.randrange(len(sentence)), rng.randrange(m)))
        if force_aligned_pronoun and items:
            for item in items:
                if item.sentence_index == s:
                    j = rng.randrange(m)
                    target[j] = rng.choice(sorted(LEXICON_FORMS))
                    pairs.add((item.token_index, j))
        target_sentences.append(tuple(target))
        link_sets.append(frozenset(pairs))
    return SystemRun(
        name,
        source,
        TokenizedCorpus(tuple(target_sentences)),
        WordAlignment(tuple(link_sets)),
    )


def random_weights(rng: random.Random) -> tuple[float, ...]:
    return tuple(round(rng.random(), 3) for _ in range(6))


def random_equivalence(rng: random.Random) -> frozenset[frozenset[str]]:
    forms = sorted(LEXICON_FORMS)
    pairs = set()
    for _ in range(rng.randint(0, 4)):
        a, b = rng.sample(forms, 2)
        pairs.add(frozenset((a, b)))
    return frozenset(pairs)


# ---------------------------------------------------------------------------
# Published per-category disagreement counts (one row per function category):
# (category, case1, case2, case3, human_correct, human_incorrect,
#  disagreements, total).  Each row decomposes into a unique joint
# distribution over (case group, verdict), which the fixture below encodes.

DISAGREEMENT_TABLE = [
    (PronounCategory.ANAPHORIC_INTRA_SUBJECT_IT, 112, 13, 68, 133, 60, 42, 193),
    (PronounCategory.ANAPHORIC_INTRA_NONSUBJECT_IT, 52, 1, 25, 65, 13, 12, 78),
    (PronounCategory.ANAPHORIC_INTER_SUBJECT_IT, 99, 17, 95, 130, 81, 56, 211),
    (PronounCategory.ANAPHORIC_INTER_NONSUBJECT_IT, 18, 0, 7, 6, 19, 12, 25),
    (PronounCategory.ANAPHORIC_INTRA_THEY, 115, 0, 86, 133, 68, 30, 201),
    (PronounCategory.ANAPHORIC_INTER_THEY, 117, 0, 94, 118, 93, 43, 211),
    (PronounCategory.ANAPHORIC_SINGULAR_THEY, 52, 0, 58, 72, 38, 48, 110),
    (PronounCategory.ANAPHORIC_GROUP_IT_THEY, 45, 0, 35, 57, 23, 26, 80),
    (PronounCategory.EVENT_IT, 125, 38, 89, 157, 95, 56, 252),
    (PronounCategory.PLEONASTIC_IT, 155, 49, 46, 216, 34, 40, 250),
    (PronounCategory.GENERIC_YOU, 105, 0, 62, 166, 1, 61, 167),
    (PronounCategory.DEICTIC_SINGULAR_YOU, 85, 0, 43, 126, 2, 41, 128),
    (PronounCategory.DEICTIC_PLURAL_YOU, 81, 0, 7, 87, 1, 6, 88),
]

FIXTURE_SYSTEM = "sysA"


def _result_for_case(pid: str, case: int) -> AptItemResult:
    tokens = {
        1: ("il", "il"),
        2: ("il", "ce"),
        3: ("elle", "il"),
        4: (None, "il"),
        5: ("il", None),
        6: (None, None),
    }[case]
    return AptItemResult(pid, AptCase(case), tokens[0], tokens[1])


def build_disagreement_fixture(include_excluded_extras: bool = True):
    """Suite, metric results, and judgments whose join reproduces the
    published per-category disagreement table exactly.

    Returns (suite, results, judgments) where results is a list of
    (system_name, AptItemResult) pairs.
    """
    suite: list[PronounItem] = []
    results: list[tuple[str, AptItemResult]] = []
    judgments: list[HumanJudgmentRecord] = []
    pid = 0

    def add(category, case: int, verdict: Verdict | None):
        nonlocal pid
        name = f"d{pid}"
        pid += 1
        suite.append(PronounItem(name, 0, 0, "it", category))
        results.append((FIXTURE_SYSTEM, _result_for_case(name, case)))
        if verdict is not None:
            judgments.append(HumanJudgmentRecord(name, FIXTURE_SYSTEM, verdict, None, "A"))

    for category, c1, c2, c3, ok, bad, d, n in DISAGREEMENT_TABLE:
        assert c1 + c2 + c3 == n == ok + bad
        b = (d + bad - c3) // 2  # case-1/2 items judged incorrect
        c = (d - bad + c3) // 2  # case-3 items judged correct
        a = c1 + c2 - b
        e = c3 - c
        assert min(a, b, c, e) >= 0 and b + c == d
        cases_12 = [2] * c2 + [1] * c1
        verdicts_12 = [Verdict.CORRECT] * a + [Verdict.INCORRECT] * b
        for case, verdict in zip(cases_12, verdicts_12):
            add(category, case, verdict)
        for i in range(c3):
            add(category, 3, Verdict.CORRECT if i < c else Verdict.INCORRECT)

    if include_excluded_extras:
        # none of these may move any table cell
        add(PronounCategory.EVENT_IT, 4, Verdict.CORRECT)
        add(PronounCategory.EVENT_IT, 5, Verdict.INCORRECT)
        add(PronounCategory.EVENT_IT, 6, Verdict.CORRECT)
        add(PronounCategory.PLEONASTIC_IT, 1, Verdict.UNABLE)
        add(PronounCategory.PLEONASTIC_IT, 3, None)  # judged by nobody
    return suite, results, judgments


# ---------------------------------------------------------------------------
# Brute-force oracles


def _median(values):
    ordered = sorted(values)
    n = len(ordered)
    mid = n // 2
    if n % 2 == 1:
        return ordered[mid]
    return (ordered[mid - 1] + ordered[mid]) / 2


def _oracle_aligned(item, run):
    target = run.target.sentences[item.sentence_index]
    out = []
    for j in range(len(target)):
        if (item.token_index, j) in run.alignment.links[item.sentence_index]:
            out.append((j, target[j]))
    return out


def _oracle_fixed(item, run, window, suite):
    tokens = _oracle_aligned(item, run)
    for _, tok in tokens:
        if tok.lower() in LEXICON_FORMS:
            return tokens
    source = run.source.sentences[item.sentence_index]
    target = run.target.sentences[item.sentence_index]
    links = run.alignment.links[item.sentence_index]
    neighbor_targets = []
    for offset in (-2, -1, 1, 2):
        i = item.token_index + offset
        if 0 <= i < len(source):
            for a, b in links:
                if a == i:
                    neighbor_targets.append(b)
    if neighbor_targets:
        projected = _median(neighbor_targets)
    else:
        projected = item.token_index / len(source) * len(target)
    taken = set()
    for other in suite:
        if other.sentence_index == item.sentence_index and other.token_index != item.token_index:
            for a, b in links:
                if a == other.token_index:
                    taken.add(b)
    best = None
    for j in range(len(target)):
        if abs(j - projected) > window:
            continue
        if target[j].lower() not in LEXICON_FORMS or j in taken:
            continue
        if best is None or (abs(j - projected), j) < (abs(best - projected), best):
            best = j
    if best is None:
        return tokens
    return [(best, target[best])]


def _oracle_candidate(item, run, fix, window, suite):
    tokens = _oracle_fixed(item, run, window, suite) if fix else _oracle_aligned(item, run)
    for _, tok in tokens:
        if tok.lower() in LEXICON_FORMS:
            return tok.lower()
    return None


def oracle_apt(items, mt_run, ref_run, weights, equivalence, fix=False, window=3):
    """Re-derive the APT score case by case; returns (score, case list)."""
    cases = []
    for item in items:
        mt = _oracle_candidate(item, mt_run, fix, window, items)
        ref = _oracle_candidate(item, ref_run, fix, window, items)
        if mt is None and ref is None:
            case = 6
        elif mt is None:
            case = 4
        elif ref is None:
            case = 5
        elif mt == ref:
            case = 1
        elif frozenset((mt, ref)) in equivalence:
            case = 2
        else:
            case = 3
        cases.append(case)
    score = sum(weights[c - 1] for c in cases) / len(cases)
    return score, cases


def oracle_autoprf(items, mt_run, ref_run, restricted=False):
    """Re-derive precision/recall/F from clipped counts with plain loops."""
    total_clip = total_c = total_r = 0
    per_item_clips = []
    for item in items:
        c_tokens = [tok.lower() for _, tok in _oracle_aligned(item, mt_run)]
        r_tokens = [tok.lower() for _, tok in _oracle_aligned(item, ref_run)]
        if restricted:
            c_tokens = [t for t in c_tokens if t in LEXICON_FORMS][:1]
            r_tokens = [t for t in r_tokens if t in LEXICON_FORMS][:1]
        clip = 0
        for form in set(c_tokens):
            clip += min(c_tokens.count(form), r_tokens.count(form))
        per_item_clips.append(clip)
        total_clip += clip
        total_c += len(c_tokens)
        total_r += len(r_tokens)
    precision = total_clip / total_c if total_c else 0.0
    recall = total_clip / total_r if total_r else 0.0
    f = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {
        "precision": precision,
        "recall": recall,
        "f": f,
        "clip_total": total_clip,
        "candidate_total": total_c,
        "reference_total": total_r,
        "clips": per_item_clips,
    }
