"""Joint assignment of phrase category and grammatical functions.

All per-category models are decoded in parallel; the category whose best
function path has the highest joint probability wins.  The same answer
is obtained from a single combined Markov model whose states are the
functions indexed by their category, with transitions across indices
pinned to probability zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Optional, Sequence

from .tagger import (
    BOUNDARY,
    DEFAULT_THETA1,
    DEFAULT_THETA2,
    CategoryModel,
    FunctionPrediction,
    Grade,
    NEG_INF,
    TaggerError,
    check_thresholds,
    classify_ratio,
    decode,
    grade_positions,
    lattice_decode,
)


@dataclass(frozen=True, order=True)
class IndexedFunction:
    """A grammatical function tagged with its phrase category, making the
    per-category function inventories pairwise disjoint."""

    category: str
    function: str


@dataclass(frozen=True)
class PhrasePrediction:
    """Winning category with its function prediction and the reliability
    of the category choice itself."""

    category: str
    functions: tuple[str, ...]
    log_probability: float
    category_grade: Grade
    category_ratio: float
    runner_up: Optional[str]
    function_prediction: FunctionPrediction

    @property
    def probability(self) -> float:
        return math.exp(self.log_probability)


def decode_phrase(
        models: Mapping[str, CategoryModel],
        daughters: Sequence[str],
        theta1: float = DEFAULT_THETA1,
        theta2: float = DEFAULT_THETA2,
) -> PhrasePrediction:
    """Run every category model over the daughters and pick the one that
    assigns the highest joint probability.

    Ties go to the lexicographically smaller category.  The category
    grade compares the winner against the best losing category under the
    usual thresholds; function grades come from the winner's own decode.
    """
    if not models:
        raise TaggerError("no trained models to decode with")
    if not daughters:
        raise TaggerError("cannot decode an empty daughter sequence")
    check_thresholds(theta1, theta2)

    predictions = {
        category: decode(model, daughters, theta1, theta2)
        for category, model in models.items()
    }
    ranked = sorted(predictions.items(),
                    key=lambda kv: (-kv[1].log_probability, kv[0]))
    best_category, best = ranked[0]
    if len(ranked) > 1:
        runner_up = ranked[1][0]
        second_log = ranked[1][1].log_probability
    else:
        runner_up, second_log = None, NEG_INF

    grade, ratio = _category_grade(
        best.log_probability, second_log, runner_up, theta1, theta2)
    return PhrasePrediction(
        category=best_category,
        functions=best.functions,
        log_probability=best.log_probability,
        category_grade=grade,
        category_ratio=ratio,
        runner_up=runner_up,
        function_prediction=best,
    )


def _category_grade(best_log: float, second_log: float,
                    runner_up: Optional[str], theta1: float,
                    theta2: float) -> tuple[Grade, float]:
    if runner_up is None:
        return Grade.RELIABLE, math.inf
    if best_log == NEG_INF:
        return classify_ratio(1.0, theta1, theta2), 1.0
    if second_log == NEG_INF:
        return Grade.RELIABLE, math.inf
    diff = best_log - second_log
    ratio = math.exp(diff) if diff < 700 else math.inf
    return classify_ratio(ratio, theta1, theta2), ratio


class CombinedModel:
    """One Markov model over category-indexed functions.

    States from different categories never follow each other: those
    transitions have probability exactly zero, so every non-zero path
    stays within one category and thereby identifies it.
    """

    def __init__(self, models: Mapping[str, CategoryModel]):
        if not models:
            raise TaggerError("no trained models to combine")
        self._models = dict(models)

    @cached_property
    def models(self) -> dict[str, CategoryModel]:
        return dict(self._models)

    @cached_property
    def states(self) -> tuple[IndexedFunction, ...]:
        return tuple(sorted(
            IndexedFunction(category=c, function=g)
            for c, m in self._models.items() for g in m.functions))

    def transition_logprob(
            self,
            a: Optional[IndexedFunction],
            b: Optional[IndexedFunction],
            c: Optional[IndexedFunction],
    ) -> float:
        """Log P(c | a, b) with None standing for the boundary.

        Mixing categories yields -inf (probability exactly zero).
        """
        categories = {s.category for s in (a, b, c) if s is not None}
        if len(categories) > 1:
            return NEG_INF
        if not categories:
            raise TaggerError("transition needs at least one non-boundary state")
        model = self._models[categories.pop()]
        return model.transition_logprob(
            a.function if a else BOUNDARY,
            b.function if b else BOUNDARY,
            c.function if c else BOUNDARY)

    def emission_logprob(self, state: IndexedFunction, label: str) -> float:
        return self._models[state.category].emission_logprob(
            state.function, label)

    def sequence_score(self, states: Sequence[IndexedFunction],
                       daughters: Sequence[str]) -> float:
        """Joint log probability of an indexed state path; exactly -inf
        for any path that mixes categories."""
        if len(states) != len(daughters):
            raise TaggerError(
                f"length mismatch: {len(states)} states vs "
                f"{len(daughters)} daughters")
        if not states:
            raise TaggerError("cannot score an empty sequence")
        total = 0.0
        prev2: Optional[IndexedFunction] = None
        prev1: Optional[IndexedFunction] = None
        for s, t in zip(states, daughters):
            total += self.transition_logprob(prev2, prev1, s)
            if total == NEG_INF:
                return NEG_INF
            total += self.emission_logprob(s, t)
            prev2, prev1 = prev1, s
        total += self.transition_logprob(prev2, prev1, None)
        return total

    def decode(self, daughters: Sequence[str],
               theta1: float = DEFAULT_THETA1,
               theta2: float = DEFAULT_THETA2) -> PhrasePrediction:
        """Viterbi over the combined state space; the index shared by the
        winning path is the phrase category."""
        if not daughters:
            raise TaggerError("cannot decode an empty daughter sequence")
        check_thresholds(theta1, theta2)
        emissions = [
            {s: self.emission_logprob(s, t) for s in self.states}
            for t in daughters
        ]
        result = lattice_decode(self.states, self.transition_logprob, emissions)
        winner = result.best_path[0].category

        def same_index_alternatives(i):
            best_state = result.best_path[i]
            return ((s, lp) for s, lp in result.through[i].items()
                    if s.category == winner and s != best_state)

        positions = grade_positions(result, theta1, theta2,
                                    same_index_alternatives)
        functions = tuple(s.function for s in result.best_path)

        second_log = NEG_INF
        runner_up: Optional[str] = None
        for s, lp in sorted(result.through[0].items()):
            if s.category == winner:
                continue
            if runner_up is None or lp > second_log:
                second_log, runner_up = lp, s.category
        grade, ratio = _category_grade(
            result.best_log, second_log, runner_up, theta1, theta2)

        prediction = FunctionPrediction(
            functions=functions,
            log_probability=result.best_log,
            positions=positions,
        )
        return PhrasePrediction(
            category=winner,
            functions=functions,
            log_probability=result.best_log,
            category_grade=grade,
            category_ratio=ratio,
            runner_up=runner_up,
            function_prediction=prediction,
        )


def build_combined_model(models: Mapping[str, CategoryModel]) -> CombinedModel:
    """Combined model over the disjoint union of indexed inventories."""
    return CombinedModel(models)
