"""Cross-validation harness for function and category tagging.

The corpus is split into sentence-level folds; each fold trains on the
rest and decodes the held-out phrases with their gold daughters.  Every
decision is scored even when it would not have been auto-assigned, and
results are stratified by reliability grade and by mother category.
Reports render as column-aligned text tables with a stable byte layout.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional, Sequence

from .phrase import decode_phrase
from .tagger import (
    DEFAULT_THETA1,
    DEFAULT_THETA2,
    Grade,
    decode,
    train,
)
from .treebank import Corpus, ordered_daughters

#: Label recorded when no model exists for a gold category in a fold.
NO_MODEL_LABEL = "--"

_GRADE_ORDER = (Grade.RELIABLE, Grade.MARKED, Grade.UNRELIABLE)
#: Row names used in the overall table and in per-category blocks.
_GRADE_NAMES = {Grade.RELIABLE: "reliable", Grade.MARKED: "marked",
                Grade.UNRELIABLE: "unreliable"}
_DECISION_NAMES = {Grade.RELIABLE: "decision", Grade.MARKED: "marked",
                   Grade.UNRELIABLE: "no decision"}


class EvalError(Exception):
    """Raised when the evaluation protocol cannot be applied."""


@dataclass(frozen=True)
class FoldPlan:
    """Deterministic train/test sentence-id partitions."""

    folds: int
    seed: int
    partitions: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]


def make_fold_plan(corpus: Corpus, folds: int = 10, seed: int = 0) -> FoldPlan:
    """Shuffle sentence ids with the seed and deal them into folds.

    The plan depends only on (seed, set of sentence ids); test shares
    differ by at most one sentence.
    """
    ids = sorted(s.id for s in corpus.sentences)
    if folds < 2:
        raise EvalError("need at least 2 folds")
    if len(ids) < folds:
        raise EvalError(
            f"corpus has {len(ids)} sentences, fewer than {folds} folds")
    rng = random.Random(seed)
    shuffled = ids[:]
    rng.shuffle(shuffled)
    partitions = []
    for i in range(folds):
        test = sorted(shuffled[i::folds])
        test_set = set(test)
        training = tuple(x for x in ids if x not in test_set)
        partitions.append((training, tuple(test)))
    return FoldPlan(folds=folds, seed=seed, partitions=tuple(partitions))


@dataclass(frozen=True)
class StratumRow:
    """One report row: case share and accuracy of a stratum."""

    name: str
    cases: int
    share: float
    accuracy: float


@dataclass(frozen=True)
class CategoryBlock:
    """Per-mother-category accuracy with its grade breakdown."""

    category: str
    cases: int
    share: float
    accuracy: float
    grade_rows: tuple[StratumRow, ...]


@dataclass(frozen=True)
class ErrorRow:
    """One confusion: how often ``gold`` was tagged as ``assigned``.

    Function errors also carry the mother/daughter context and how often
    that mother-daughter combination occurred overall.
    """

    gold: str
    gold_count: int
    assigned: str
    count: int
    mother: Optional[str] = None
    daughter: Optional[str] = None
    combination_count: Optional[int] = None


@dataclass(frozen=True)
class AccuracyReport:
    """Stratified accuracies plus the full confusion list."""

    task: str
    total_cases: int
    correct: int
    overall_accuracy: float
    grade_rows: tuple[StratumRow, ...]
    category_blocks: tuple[CategoryBlock, ...]
    errors: tuple[ErrorRow, ...]


@dataclass(frozen=True)
class _Case:
    mother: str
    daughter: Optional[str]
    gold: str
    assigned: str
    grade: Grade


def _subcorpus(corpus: Corpus, ids: Sequence[int]) -> Corpus:
    wanted = set(ids)
    return Corpus(tuple(s for s in corpus.sentences if s.id in wanted),
                  corpus.tagsets)


def cross_validate_functions(
        corpus: Corpus,
        plan: Optional[FoldPlan] = None,
        theta1: float = DEFAULT_THETA1,
        theta2: float = DEFAULT_THETA2,
) -> AccuracyReport:
    """Score function assignment given gold category and gold daughters.

    Each daughter position contributes exactly one case; positions whose
    gold category has no model in a fold count as forced wrong answers
    in the unreliable stratum.
    """
    plan = plan or make_fold_plan(corpus)
    cases: list[_Case] = []
    for training_ids, test_ids in plan.partitions:
        models = train(_subcorpus(corpus, training_ids))
        for sid in test_ids:
            tree = corpus.get(sid)
            for node in tree.nodes:
                labels, gold_functions = ordered_daughters(node, tree)
                model = models.get(node.category)
                if model is None:
                    for label, gold in zip(labels, gold_functions):
                        cases.append(_Case(node.category, label, gold,
                                           NO_MODEL_LABEL, Grade.UNRELIABLE))
                    continue
                prediction = decode(model, labels, theta1, theta2)
                for label, gold, outcome in zip(labels, gold_functions,
                                                prediction.positions):
                    cases.append(_Case(node.category, label, gold,
                                       outcome.label, outcome.grade))
    return _build_report("functions", cases)


def cross_validate_phrases(
        corpus: Corpus,
        plan: Optional[FoldPlan] = None,
        theta1: float = DEFAULT_THETA1,
        theta2: float = DEFAULT_THETA2,
) -> AccuracyReport:
    """Score category assignment given gold daughters; one case per
    phrase node, stratified by the manually assigned category."""
    plan = plan or make_fold_plan(corpus)
    cases: list[_Case] = []
    for training_ids, test_ids in plan.partitions:
        models = train(_subcorpus(corpus, training_ids))
        for sid in test_ids:
            tree = corpus.get(sid)
            for node in tree.nodes:
                labels, _gold_functions = ordered_daughters(node, tree)
                prediction = decode_phrase(models, labels, theta1, theta2)
                cases.append(_Case(node.category, None, node.category,
                                   prediction.category,
                                   prediction.category_grade))
    return _build_report("phrases", cases)


def _grade_rows(cases: list[_Case], total: int,
                names: dict[Grade, str]) -> tuple[StratumRow, ...]:
    rows = []
    for grade in _GRADE_ORDER:
        subset = [c for c in cases if c.grade == grade]
        if not subset:
            continue
        correct = sum(1 for c in subset if c.assigned == c.gold)
        rows.append(StratumRow(
            name=names[grade],
            cases=len(subset),
            share=100.0 * len(subset) / total,
            accuracy=100.0 * correct / len(subset)))
    return tuple(rows)


def _build_report(task: str, cases: list[_Case]) -> AccuracyReport:
    if not cases:
        return AccuracyReport(task=task, total_cases=0, correct=0,
                              overall_accuracy=0.0, grade_rows=(),
                              category_blocks=(), errors=())
    total = len(cases)
    correct = sum(1 for c in cases if c.assigned == c.gold)
    grade_rows = _grade_rows(cases, total, _GRADE_NAMES)

    blocks = []
    for category in sorted({c.mother for c in cases}):
        subset = [c for c in cases if c.mother == category]
        sub_correct = sum(1 for c in subset if c.assigned == c.gold)
        blocks.append(CategoryBlock(
            category=category, cases=len(subset),
            share=100.0 * len(subset) / total,
            accuracy=100.0 * sub_correct / len(subset),
            grade_rows=_grade_rows(subset, len(subset), _DECISION_NAMES)))

    errors = _error_rows(task, cases)
    return AccuracyReport(
        task=task, total_cases=total, correct=correct,
        overall_accuracy=100.0 * correct / total,
        grade_rows=grade_rows, category_blocks=tuple(blocks), errors=errors)


def _error_rows(task: str, cases: list[_Case]) -> tuple[ErrorRow, ...]:
    confusion: dict[tuple, int] = {}
    gold_totals: dict[tuple, int] = {}
    combo_totals: dict[tuple, int] = {}
    for c in cases:
        if task == "functions":
            combo_totals[(c.mother, c.daughter)] = combo_totals.get(
                (c.mother, c.daughter), 0) + 1
            gold_totals[(c.mother, c.daughter, c.gold)] = gold_totals.get(
                (c.mother, c.daughter, c.gold), 0) + 1
            if c.assigned != c.gold:
                key = (c.mother, c.daughter, c.gold, c.assigned)
                confusion[key] = confusion.get(key, 0) + 1
        else:
            gold_totals[(c.gold,)] = gold_totals.get((c.gold,), 0) + 1
            if c.assigned != c.gold:
                key = (c.gold, c.assigned)
                confusion[key] = confusion.get(key, 0) + 1

    rows = []
    if task == "functions":
        for (mother, daughter, gold, assigned), n in confusion.items():
            rows.append(ErrorRow(
                gold=gold, gold_count=gold_totals[(mother, daughter, gold)],
                assigned=assigned, count=n, mother=mother, daughter=daughter,
                combination_count=combo_totals[(mother, daughter)]))
        rows.sort(key=lambda r: (-r.count, r.mother, r.daughter, r.gold,
                                 r.assigned))
    else:
        for (gold, assigned), n in confusion.items():
            rows.append(ErrorRow(gold=gold, gold_count=gold_totals[(gold,)],
                                 assigned=assigned, count=n))
        rows.sort(key=lambda r: (-r.count, r.gold, r.assigned))
    return tuple(rows)


def top_errors(report: AccuracyReport, n: int) -> tuple[ErrorRow, ...]:
    """The n most frequent confusions (ties broken lexicographically)."""
    if n <= 0:
        return ()
    return report.errors[:n]


def _fmt_share(value: float) -> str:
    return f"{value:.0f}%"


def _fmt_accuracy(value: float) -> str:
    return f"{value:.1f}%"


def render_report(report: AccuracyReport, max_errors: int = 10) -> str:
    """Plain-text tables: overall grades, per-category blocks, and the
    most frequent confusions.  Byte-stable for identical reports."""
    width = 46
    lines = [f"{report.task:<30}{'cases':>8}{'correct':>8}",
             "-" * width]
    for row in report.grade_rows:
        lines.append(f"{row.name:<30}{_fmt_share(row.share):>8}"
                     f"{_fmt_accuracy(row.accuracy):>8}")
    lines.append("-" * width)
    lines.append(f"{'overall':<30}{_fmt_share(100.0 * bool(report.total_cases)):>8}"
                 f"{_fmt_accuracy(report.overall_accuracy):>8}")

    if report.category_blocks:
        lines.append("")
        lines.append(f"{'by category':<30}{'cases':>8}{'correct':>8}")
        lines.append("=" * width)
        for block in report.category_blocks:
            lines.append(f"{block.category:<30}{_fmt_share(block.share):>8}"
                         f"{_fmt_accuracy(block.accuracy):>8}")
            for row in block.grade_rows:
                lines.append(f"  {row.name:<28}{_fmt_share(row.share):>8}"
                             f"{_fmt_accuracy(row.accuracy):>8}")
            lines.append("=" * width)

    shown = top_errors(report, max_errors)
    if shown:
        lines.append("")
        if report.task == "functions":
            lines.append(f"{'':>4}{'phrase':<8}{'elem':<8}{'f':>6}  "
                         f"{'original':<8}{'f':>6}  {'assigned':<8}{'f':>6}")
            for i, row in enumerate(shown, 1):
                lines.append(
                    f"{i:>2}. {row.mother:<8}{row.daughter:<8}"
                    f"{row.combination_count:>6}  {row.gold:<8}"
                    f"{row.gold_count:>6}  {row.assigned:<8}{row.count:>6}")
        else:
            lines.append(f"{'':>4}{'phrase':<8}{'f':>6}  {'assigned':<8}{'f':>6}")
            for i, row in enumerate(shown, 1):
                lines.append(f"{i:>2}. {row.gold:<8}{row.gold_count:>6}  "
                             f"{row.assigned:<8}{row.count:>6}")
    return "\n".join(lines) + "\n"


def report_to_dict(report: AccuracyReport) -> dict:
    """Machine-readable report with stable key names."""
    return {
        "task": report.task,
        "total_cases": report.total_cases,
        "correct": report.correct,
        "overall_accuracy": report.overall_accuracy,
        "grades": [
            {"grade": r.name, "cases": r.cases, "share": r.share,
             "accuracy": r.accuracy} for r in report.grade_rows],
        "categories": [
            {"category": b.category, "cases": b.cases, "share": b.share,
             "accuracy": b.accuracy,
             "grades": [
                 {"grade": r.name, "cases": r.cases, "share": r.share,
                  "accuracy": r.accuracy} for r in b.grade_rows]}
            for b in report.category_blocks],
        "errors": [
            {k: v for k, v in (
                ("mother", r.mother), ("daughter", r.daughter),
                ("combination_count", r.combination_count),
                ("gold", r.gold), ("gold_count", r.gold_count),
                ("assigned", r.assigned), ("count", r.count))
             if v is not None}
            for r in report.errors],
    }
