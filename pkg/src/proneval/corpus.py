"""Parsers and domain types for the evaluation inputs.

Four file formats are understood, all line oriented:

* ``.tok``   -- one sentence per line, tokens separated by single spaces
* ``.moses`` -- one line per sentence pair of 0-based ``i-j`` alignment links
* suite ``.jsonl``     -- one pronoun test-suite item per line
* judgments ``.jsonl`` -- one human judgment record per line

Parsers validate and reject; they never repair malformed input.  All token
comparisons made by consumers of these types are case-folded, so parsers
preserve surface capitalization as-is.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from .errors import FormatError, InputError


class Verdict(str, Enum):
    """A human judgment on one translated pronoun or antecedent head."""

    CORRECT = "correct"
    INCORRECT = "incorrect"
    UNABLE = "unable"


class PronounFunction(str, Enum):
    ANAPHORIC = "anaphoric"
    EVENT = "event"
    PLEONASTIC = "pleonastic"
    ADDRESSEE_REFERENCE = "addressee-reference"


class PronounCategory(str, Enum):
    """Function category of a test-suite pronoun.

    The value is the code used in suite files; :attr:`function` gives the
    coarse function and :attr:`label` a short human-readable row heading.
    """

    ANAPHORIC_INTRA_SUBJECT_IT = "anaphoric.intra.subject.it"
    ANAPHORIC_INTRA_NONSUBJECT_IT = "anaphoric.intra.nonsubject.it"
    ANAPHORIC_INTER_SUBJECT_IT = "anaphoric.inter.subject.it"
    ANAPHORIC_INTER_NONSUBJECT_IT = "anaphoric.inter.nonsubject.it"
    ANAPHORIC_INTRA_THEY = "anaphoric.intra.they"
    ANAPHORIC_INTER_THEY = "anaphoric.inter.they"
    ANAPHORIC_SINGULAR_THEY = "anaphoric.singular.they"
    ANAPHORIC_GROUP_IT_THEY = "anaphoric.group.it-they"
    EVENT_IT = "event.it"
    PLEONASTIC_IT = "pleonastic.it"
    GENERIC_YOU = "addressee.generic.you"
    DEICTIC_SINGULAR_YOU = "addressee.deictic.singular.you"
    DEICTIC_PLURAL_YOU = "addressee.deictic.plural.you"

    @property
    def function(self) -> PronounFunction:
        head = self.value.split(".", 1)[0]
        if head == "addressee":
            return PronounFunction.ADDRESSEE_REFERENCE
        return PronounFunction(head)

    @property
    def label(self) -> str:
        return _CATEGORY_LABELS[self]


_CATEGORY_LABELS = {
    PronounCategory.ANAPHORIC_INTRA_SUBJECT_IT: "anaphoric intra sbj it",
    PronounCategory.ANAPHORIC_INTRA_NONSUBJECT_IT: "anaphoric intra nsbj it",
    PronounCategory.ANAPHORIC_INTER_SUBJECT_IT: "anaphoric inter sbj it",
    PronounCategory.ANAPHORIC_INTER_NONSUBJECT_IT: "anaphoric inter nsbj it",
    PronounCategory.ANAPHORIC_INTRA_THEY: "anaphoric intra they",
    PronounCategory.ANAPHORIC_INTER_THEY: "anaphoric inter they",
    PronounCategory.ANAPHORIC_SINGULAR_THEY: "anaphoric sg they",
    PronounCategory.ANAPHORIC_GROUP_IT_THEY: "anaphoric group it/they",
    PronounCategory.EVENT_IT: "event it",
    PronounCategory.PLEONASTIC_IT: "pleonastic it",
    PronounCategory.GENERIC_YOU: "generic you",
    PronounCategory.DEICTIC_SINGULAR_YOU: "deictic sg you",
    PronounCategory.DEICTIC_PLURAL_YOU: "deictic pl you",
}

#: Canonical report-row ordering for the 13 categories.
CATEGORY_ORDER = tuple(PronounCategory)


@dataclass(frozen=True)
class TokenizedCorpus:
    """Sentence-segmented, whitespace-tokenized text.

    Invariants: at least one sentence; no token is empty or contains
    whitespace.
    """

    sentences: tuple[tuple[str, ...], ...]

    def __post_init__(self) -> None:
        if not self.sentences:
            raise InputError("corpus must contain at least one sentence")
        for i, sentence in enumerate(self.sentences):
            if not sentence:
                raise InputError(f"sentence {i}: no tokens")
            for token in sentence:
                if not token:
                    raise InputError(f"sentence {i}: empty token")
                if any(ch.isspace() for ch in token):
                    raise InputError(f"sentence {i}: token {token!r} contains whitespace")

    def __len__(self) -> int:
        return len(self.sentences)

    def sentence(self, index: int) -> tuple[str, ...]:
        if not 0 <= index < len(self.sentences):
            raise InputError(f"sentence index {index} out of range (corpus has {len(self)})")
        return self.sentences[index]


def parse_tokenized_text(raw: str, name: str = "<corpus>") -> TokenizedCorpus:
    """Parse one-sentence-per-line tokenized text.

    Line ``i`` becomes sentence ``i`` with token order preserved.  A single
    trailing newline is tolerated; blank or whitespace-only lines and any
    whitespace other than plain spaces are rejected.
    """
    text = raw.removesuffix("\n")
    if text == "":
        raise FormatError(f"{name}: empty corpus")
    sentences = []
    for lineno, line in enumerate(text.split("\n"), start=1):
        if not line.strip():
            raise FormatError(f"{name}:{lineno}: blank or whitespace-only line")
        if any(ch.isspace() and ch != " " for ch in line):
            raise FormatError(f"{name}:{lineno}: whitespace other than single spaces")
        sentences.append(tuple(line.split()))
    return TokenizedCorpus(tuple(sentences))


def format_tokenized_text(corpus: TokenizedCorpus) -> str:
    """Render the canonical single-space form, one sentence per line."""
    return "\n".join(" ".join(sentence) for sentence in corpus.sentences) + "\n"


@dataclass(frozen=True)
class WordAlignment:
    """Per-sentence sets of (source index, target index) token links.

    Links are 0-based and unique within a sentence; one-to-many and
    many-to-one links are permitted.
    """

    links: tuple[frozenset[tuple[int, int]], ...]

    def __len__(self) -> int:
        return len(self.links)

    def pairs(self, sentence_index: int) -> frozenset[tuple[int, int]]:
        if not 0 <= sentence_index < len(self.links):
            raise InputError(
                f"sentence index {sentence_index} out of range (alignment has {len(self)})"
            )
        return self.links[sentence_index]

    def targets_of(self, sentence_index: int, src_index: int) -> tuple[int, ...]:
        """Target indices linked to one source token, in ascending order."""
        return tuple(sorted(j for i, j in self.pairs(sentence_index) if i == src_index))

    def validate_bounds(self, src: TokenizedCorpus, tgt: TokenizedCorpus) -> None:
        if len(self) != len(src) or len(self) != len(tgt):
            raise InputError(
                f"alignment covers {len(self)} sentences, corpora have {len(src)} / {len(tgt)}"
            )
        for s, pairs in enumerate(self.links):
            n_src = len(src.sentences[s])
            n_tgt = len(tgt.sentences[s])
            for i, j in pairs:
                if not (0 <= i < n_src and 0 <= j < n_tgt):
                    raise InputError(f"sentence {s}: link {i}-{j} out of bounds ({n_src}x{n_tgt})")


def parse_moses_alignment(
    raw: str,
    src: TokenizedCorpus,
    tgt: TokenizedCorpus,
    name: str = "<alignment>",
) -> WordAlignment:
    """Parse space-separated ``i-j`` links, one line per sentence pair.

    Indices are validated against both corpora; an empty line yields an
    empty link set for that sentence.
    """
    lines = raw.removesuffix("\n").split("\n") if raw else []
    if len(lines) != len(src) or len(lines) != len(tgt):
        raise FormatError(
            f"{name}: {len(lines)} alignment lines for {len(src)} source / {len(tgt)} target sentences"
        )
    per_sentence = []
    for lineno, line in enumerate(lines, start=1):
        s = lineno - 1
        n_src = len(src.sentences[s])
        n_tgt = len(tgt.sentences[s])
        pairs: set[tuple[int, int]] = set()
        for chunk in line.split():
            left, sep, right = chunk.partition("-")
            if not sep or not left.isdigit() or not right.isdigit():
                raise FormatError(f"{name}:{lineno}: malformed link {chunk!r}")
            i, j = int(left), int(right)
            if i >= n_src or j >= n_tgt:
                raise FormatError(
                    f"{name}:{lineno}: link {i}-{j} out of bounds ({n_src}x{n_tgt})"
                )
            if (i, j) in pairs:
                raise FormatError(f"{name}:{lineno}: duplicate link {i}-{j}")
            pairs.add((i, j))
        per_sentence.append(frozenset(pairs))
    return WordAlignment(tuple(per_sentence))


def format_moses_alignment(alignment: WordAlignment) -> str:
    """Render links in canonical form: sorted ``i-j`` pairs, one line per sentence."""
    lines = []
    for pairs in alignment.links:
        lines.append(" ".join(f"{i}-{j}" for i, j in sorted(pairs)))
    return "\n".join(lines) + "\n"


def identity_alignment(corpus: TokenizedCorpus) -> WordAlignment:
    """Link every token to itself; used when scoring a corpus against itself."""
    return WordAlignment(
        tuple(frozenset((i, i) for i in range(len(s))) for s in corpus.sentences)
    )


@dataclass(frozen=True)
class PronounItem:
    """One test-suite pronoun occurrence in the source corpus."""

    id: str
    sentence_index: int
    token_index: int
    surface: str
    category: PronounCategory
    antecedent_head: tuple[tuple[int, int], ...] = ()

    def validate_against(self, source: TokenizedCorpus) -> None:
        """Check position bounds and that the source token matches the surface."""
        if not (0 <= self.sentence_index < len(source)):
            raise InputError(f"item {self.id}: sentence index {self.sentence_index} out of range")
        sentence = source.sentences[self.sentence_index]
        if not (0 <= self.token_index < len(sentence)):
            raise InputError(f"item {self.id}: token index {self.token_index} out of range")
        token = sentence[self.token_index]
        if token.lower() != self.surface.lower():
            raise InputError(
                f"item {self.id}: surface mismatch, corpus has {token!r} at "
                f"({self.sentence_index}, {self.token_index}), suite says {self.surface!r}"
            )
        for s, t in self.antecedent_head:
            if not (0 <= s < len(source)) or not (0 <= t < len(source.sentences[s])):
                raise InputError(f"item {self.id}: antecedent position ({s}, {t}) out of bounds")


_SUITE_FIELDS = {"id", "sentence_index", "token_index", "surface", "category", "antecedent_head"}


def parse_test_suite(
    raw: str, src: TokenizedCorpus | None, name: str = "<suite>"
) -> list[PronounItem]:
    """Parse a JSON-lines pronoun test suite.

    With a source corpus, every item's position and surface are validated
    against it; without one (``src=None``) only the record structure is
    checked, which suffices for consumers that need ids and categories only.
    """
    items: list[PronounItem] = []
    seen_ids: set[str] = set()
    for lineno, line in enumerate(raw.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{name}:{lineno}: invalid JSON ({exc.msg})") from None
        if not isinstance(record, dict):
            raise FormatError(f"{name}:{lineno}: expected a JSON object")
        unknown = set(record) - _SUITE_FIELDS
        if unknown:
            raise FormatError(f"{name}:{lineno}: unknown fields {sorted(unknown)}")
        try:
            category = PronounCategory(record["category"])
        except ValueError:
            raise FormatError(f"{name}:{lineno}: unknown category {record.get('category')!r}") from None
        except KeyError:
            raise FormatError(f"{name}:{lineno}: missing field 'category'") from None
        try:
            item = PronounItem(
                id=str(record["id"]),
                sentence_index=int(record["sentence_index"]),
                token_index=int(record["token_index"]),
                surface=str(record["surface"]),
                category=category,
                antecedent_head=tuple(
                    (int(s), int(t)) for s, t in record.get("antecedent_head", [])
                ),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{name}:{lineno}: bad item record ({exc})") from None
        if item.id in seen_ids:
            raise FormatError(f"{name}:{lineno}: duplicate id {item.id!r}")
        seen_ids.add(item.id)
        if src is not None:
            try:
                item.validate_against(src)
            except InputError as exc:
                raise FormatError(f"{name}:{lineno}: {exc}") from None
        items.append(item)
    return items


def format_test_suite(items: Iterable[PronounItem]) -> str:
    lines = []
    for item in items:
        record = {
            "id": item.id,
            "sentence_index": item.sentence_index,
            "token_index": item.token_index,
            "surface": item.surface,
            "category": item.category.value,
        }
        if item.antecedent_head:
            record["antecedent_head"] = [list(pos) for pos in item.antecedent_head]
        lines.append(json.dumps(record, ensure_ascii=False))
    return "\n".join(lines) + "\n" if lines else ""


@dataclass(frozen=True)
class SystemRun:
    """One system's output corpus plus its source-to-target word alignment.

    The source corpus is carried along so that per-item operations can
    resolve pronoun positions without extra plumbing.
    """

    system_name: str
    source: TokenizedCorpus
    target: TokenizedCorpus
    alignment: WordAlignment

    def __post_init__(self) -> None:
        if len(self.target) != len(self.source):
            raise InputError(
                f"run {self.system_name!r}: {len(self.target)} target sentences for "
                f"{len(self.source)} source sentences"
            )
        self.alignment.validate_bounds(self.source, self.target)


@dataclass(frozen=True)
class HumanJudgmentRecord:
    """A recorded human verdict for one (pronoun, system) pair."""

    pronoun_id: str
    system_name: str
    pronoun_verdict: Verdict
    antecedent_verdict: Verdict | None = None
    annotator: str = ""


_JUDGMENT_FIELDS = {"pronoun_id", "system_name", "pronoun_verdict", "antecedent_verdict", "annotator"}


def parse_judgments(raw: str, name: str = "<judgments>") -> list[HumanJudgmentRecord]:
    """Parse JSON-lines human judgment records.

    Duplicate (pronoun, system, annotator) triples are kept, with a warning;
    reports treat later records as superseding earlier ones.
    """
    records: list[HumanJudgmentRecord] = []
    seen: set[tuple[str, str, str]] = set()
    for lineno, line in enumerate(raw.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{name}:{lineno}: invalid JSON ({exc.msg})") from None
        if not isinstance(data, dict):
            raise FormatError(f"{name}:{lineno}: expected a JSON object")
        unknown = set(data) - _JUDGMENT_FIELDS
        if unknown:
            raise FormatError(f"{name}:{lineno}: unknown fields {sorted(unknown)}")
        try:
            verdict = Verdict(data["pronoun_verdict"])
        except ValueError:
            raise FormatError(
                f"{name}:{lineno}: unknown verdict {data.get('pronoun_verdict')!r}"
            ) from None
        except KeyError:
            raise FormatError(f"{name}:{lineno}: missing field 'pronoun_verdict'") from None
        antecedent = data.get("antecedent_verdict")
        try:
            antecedent_verdict = Verdict(antecedent) if antecedent is not None else None
        except ValueError:
            raise FormatError(f"{name}:{lineno}: unknown verdict {antecedent!r}") from None
        try:
            record = HumanJudgmentRecord(
                pronoun_id=str(data["pronoun_id"]),
                system_name=str(data["system_name"]),
                pronoun_verdict=verdict,
                antecedent_verdict=antecedent_verdict,
                annotator=str(data.get("annotator", "")),
            )
        except KeyError as exc:
            raise FormatError(f"{name}:{lineno}: missing field {exc}") from None
        key = (record.pronoun_id, record.system_name, record.annotator)
        if key in seen:
            warnings.warn(
                f"{name}:{lineno}: duplicate judgment for {key}; later records supersede",
                stacklevel=2,
            )
        seen.add(key)
        records.append(record)
    return records


def format_judgments(records: Iterable[HumanJudgmentRecord]) -> str:
    lines = []
    for r in records:
        data: dict = {
            "pronoun_id": r.pronoun_id,
            "system_name": r.system_name,
            "pronoun_verdict": r.pronoun_verdict.value,
        }
        if r.antecedent_verdict is not None:
            data["antecedent_verdict"] = r.antecedent_verdict.value
        data["annotator"] = r.annotator
        lines.append(json.dumps(data, ensure_ascii=False))
    return "\n".join(lines) + "\n" if lines else ""
