import json
from dataclasses import dataclass
from pathlib import Path

import pytest

from proneval import cli

#: Per-case MT/reference sentence pairs; every sentence aligns 0-0 1-1 to
#: the source "it is", so the case follows from the aligned tokens alone.
CASE_SENTENCES = {
    1: ("il est", "il est"),
    2: ("il est", "ce est"),
    3: ("elle est", "il est"),
    4: ("que est", "il est"),
    5: ("il est", "que est"),
    6: ("que est", "que est"),
}


@dataclass
class EvalFiles:
    root: Path
    source: Path
    mt: Path
    ref: Path
    align_mt: Path
    align_ref: Path
    suite: Path
    equivalence: Path


def write_eval_fixture(root: Path, cases=(1, 1, 2, 3)) -> EvalFiles:
    """One source sentence per requested case, aligned 1:1 on both sides."""
    root.mkdir(parents=True, exist_ok=True)
    n = len(cases)
    source_lines = ["it is"] * n
    mt_lines = [CASE_SENTENCES[c][0] for c in cases]
    ref_lines = [CASE_SENTENCES[c][1] for c in cases]
    align_lines = ["0-0 1-1"] * n
    suite_lines = [
        json.dumps(
            {
                "id": f"p{i}",
                "sentence_index": i,
                "token_index": 0,
                "surface": "it",
                "category": "pleonastic.it",
            }
        )
        for i in range(n)
    ]
    files = EvalFiles(
        root=root,
        source=root / "source.tok",
        mt=root / "mt.tok",
        ref=root / "ref.tok",
        align_mt=root / "mt.moses",
        align_ref=root / "ref.moses",
        suite=root / "suite.jsonl",
        equivalence=root / "equivalence.tsv",
    )
    files.source.write_text("\n".join(source_lines) + "\n", encoding="utf-8")
    files.mt.write_text("\n".join(mt_lines) + "\n", encoding="utf-8")
    files.ref.write_text("\n".join(ref_lines) + "\n", encoding="utf-8")
    files.align_mt.write_text("\n".join(align_lines) + "\n", encoding="utf-8")
    files.align_ref.write_text("\n".join(align_lines) + "\n", encoding="utf-8")
    files.suite.write_text("\n".join(suite_lines) + "\n", encoding="utf-8")
    files.equivalence.write_text("il\tce\n", encoding="utf-8")
    return files


def write_reference_self_fixture(root: Path) -> EvalFiles:
    """The reference scored against itself with identity alignments."""
    root.mkdir(parents=True, exist_ok=True)
    reference = ["J'ai un vélo .", "Il est rouge ."]
    identity = ["0-0 1-1 2-2 3-3", "0-0 1-1 2-2 3-3"]
    suite_lines = [
        json.dumps(
            {
                "id": "p1",
                "sentence_index": 1,
                "token_index": 0,
                "surface": "Il",
                "category": "anaphoric.inter.subject.it",
                "antecedent_head": [[0, 2]],
            }
        )
    ]
    files = EvalFiles(
        root=root,
        source=root / "source.tok",
        mt=root / "mt.tok",
        ref=root / "ref.tok",
        align_mt=root / "mt.moses",
        align_ref=root / "ref.moses",
        suite=root / "suite.jsonl",
        equivalence=root / "equivalence.tsv",
    )
    text = "\n".join(reference) + "\n"
    files.source.write_text(text, encoding="utf-8")
    files.mt.write_text(text, encoding="utf-8")
    files.ref.write_text(text, encoding="utf-8")
    files.align_mt.write_text("\n".join(identity) + "\n", encoding="utf-8")
    files.align_ref.write_text("\n".join(identity) + "\n", encoding="utf-8")
    files.suite.write_text("\n".join(suite_lines) + "\n", encoding="utf-8")
    files.equivalence.write_text("", encoding="utf-8")
    return files


def scoring_argv(command: str, files: EvalFiles, *extra: str) -> list[str]:
    return [
        "score", command,
        "--source", str(files.source),
        "--mt", str(files.mt),
        "--ref", str(files.ref),
        "--align-mt", str(files.align_mt),
        "--align-ref", str(files.align_ref),
        "--suite", str(files.suite),
        *extra,
    ]


@pytest.fixture
def run_cli(capsys):
    def run(argv: list[str]):
        code = cli.main(argv)
        captured = capsys.readouterr()
        return code, captured.out, captured.err

    return run
