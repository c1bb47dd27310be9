"""Markov-model assignment of grammatical functions.

Each phrase category gets its own model: grammatical functions are the
states, the daughters' word/phrase categories are the outputs.  State
transitions are trigrams smoothed by deleted interpolation; emissions
are open-vocabulary with a small additive mass reserved for unseen
daughter labels.  Decoding returns, for every position, the best
function plus a reliability grade derived from the probability ratio
against the strongest disagreeing path.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Mapping, Optional, Sequence

from .treebank import Corpus, DaughterSeq, ordered_daughters

#: Boundary pseudo-state padding every function sequence ($..$ G1..Gk $).
BOUNDARY = "$"
#: Default reliability thresholds (ratio p_best/p_second).
DEFAULT_THETA1 = 5.0
DEFAULT_THETA2 = 100.0
#: Additive mass per emission symbol for unseen daughter labels.
DEFAULT_EMISSION_EPSILON = 0.1

NEG_INF = float("-inf")


class TaggerError(Exception):
    """Raised for unusable inputs: empty corpora, bad thresholds,
    mismatched sequence lengths."""


class Grade(enum.Enum):
    """Three-way reliability of a single prediction."""

    RELIABLE = "reliable"
    MARKED = "marked"
    UNRELIABLE = "unreliable"


def classify_ratio(ratio: float, theta1: float, theta2: float) -> Grade:
    """Grade from the best/second-best probability ratio."""
    if ratio >= theta2:
        return Grade.RELIABLE
    if ratio >= theta1:
        return Grade.MARKED
    return Grade.UNRELIABLE


def check_thresholds(theta1: float, theta2: float) -> None:
    if not (1.0 <= theta1 <= theta2):
        raise TaggerError(
            f"thresholds must satisfy 1 <= theta1 <= theta2, got "
            f"theta1={theta1}, theta2={theta2}")


def deleted_interpolation(
        trigram_counts: Mapping[tuple[str, str, str], int],
        bigram_counts: Mapping[tuple[str, str], int],
        unigram_counts: Mapping[str, int],
) -> tuple[float, float, float]:
    """Interpolation weights (unigram, bigram, trigram) by count deletion.

    Every trigram token votes for the estimator that best predicts it
    once that token is removed from the counts; 0/0 counts as 0 and ties
    go to the lower-order estimator.  The vote tallies are normalized to
    sum to 1.
    """
    total = sum(unigram_counts.values())
    if total <= 0:
        raise TaggerError("cannot derive interpolation weights without counts")
    tri_ctx: dict[tuple[str, str], int] = {}
    for (a, b, _c), n in trigram_counts.items():
        tri_ctx[(a, b)] = tri_ctx.get((a, b), 0) + n
    bi_ctx: dict[str, int] = {}
    for (b, _c), n in bigram_counts.items():
        bi_ctx[b] = bi_ctx.get(b, 0) + n

    votes = [0, 0, 0]
    for (a, b, c), n in trigram_counts.items():
        d3 = tri_ctx[(a, b)] - 1
        f3 = (n - 1) / d3 if d3 > 0 else 0.0
        d2 = bi_ctx[b] - 1
        f2 = (bigram_counts[(b, c)] - 1) / d2 if d2 > 0 else 0.0
        d1 = total - 1
        f1 = (unigram_counts[c] - 1) / d1 if d1 > 0 else 0.0
        if f1 >= f2 and f1 >= f3:
            votes[0] += n
        elif f2 >= f3:
            votes[1] += n
        else:
            votes[2] += n
    cast = sum(votes)
    return (votes[0] / cast, votes[1] / cast, votes[2] / cast)


@dataclass(frozen=True)
class CategoryModel:
    """Trained Markov model for one phrase category.

    Counts are raw training tallies over boundary-padded function
    sequences; probabilities are derived on demand.  Instances are
    immutable and safe to share between threads.
    """

    category: str
    functions: tuple[str, ...]
    trigram_counts: dict[tuple[str, str, str], int]
    bigram_counts: dict[tuple[str, str], int]
    unigram_counts: dict[str, int]
    emission_counts: dict[tuple[str, str], int]
    lambdas: tuple[float, float, float]
    emission_epsilon: float = DEFAULT_EMISSION_EPSILON

    @classmethod
    def from_sequences(
            cls,
            category: str,
            sequences: Iterable[tuple[Sequence[str], Sequence[str]]],
            emission_epsilon: float = DEFAULT_EMISSION_EPSILON,
    ) -> "CategoryModel":
        """Train from (functions, daughters) pairs for one category."""
        trigrams: dict[tuple[str, str, str], int] = {}
        bigrams: dict[tuple[str, str], int] = {}
        unigrams: dict[str, int] = {}
        emissions: dict[tuple[str, str], int] = {}
        inventory: set[str] = set()
        n_sequences = 0
        for functions, daughters in sequences:
            if len(functions) != len(daughters):
                raise TaggerError(
                    f"functions/daughters length mismatch in {category} "
                    f"training data: {len(functions)} vs {len(daughters)}")
            if not functions:
                raise TaggerError(f"empty training sequence for {category}")
            n_sequences += 1
            inventory.update(functions)
            padded = [BOUNDARY, BOUNDARY, *functions, BOUNDARY]
            for i in range(2, len(padded)):
                a, b, c = padded[i - 2], padded[i - 1], padded[i]
                trigrams[(a, b, c)] = trigrams.get((a, b, c), 0) + 1
                bigrams[(b, c)] = bigrams.get((b, c), 0) + 1
                unigrams[c] = unigrams.get(c, 0) + 1
            for g, t in zip(functions, daughters):
                emissions[(g, t)] = emissions.get((g, t), 0) + 1
        if n_sequences == 0:
            raise TaggerError(f"no training sequences for {category}")
        lambdas = deleted_interpolation(trigrams, bigrams, unigrams)
        return cls(
            category=category,
            functions=tuple(sorted(inventory)),
            trigram_counts=trigrams,
            bigram_counts=bigrams,
            unigram_counts=unigrams,
            emission_counts=emissions,
            lambdas=lambdas,
            emission_epsilon=emission_epsilon,
        )

    @cached_property
    def vocabulary(self) -> tuple[str, ...]:
        """Daughter labels seen in training, sorted."""
        return tuple(sorted({t for _g, t in self.emission_counts}))

    @cached_property
    def _trigram_context_totals(self) -> dict[tuple[str, str], int]:
        out: dict[tuple[str, str], int] = {}
        for (a, b, _c), n in self.trigram_counts.items():
            out[(a, b)] = out.get((a, b), 0) + n
        return out

    @cached_property
    def _bigram_context_totals(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for (b, _c), n in self.bigram_counts.items():
            out[b] = out.get(b, 0) + n
        return out

    @cached_property
    def _unigram_total(self) -> int:
        return sum(self.unigram_counts.values())

    @cached_property
    def _emission_totals(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for (g, _t), n in self.emission_counts.items():
            out[g] = out.get(g, 0) + n
        return out

    def transition_prob(self, a: str, b: str, c: str) -> float:
        """Interpolated P(c | a, b); a, b, c may be the boundary symbol.

        Maximum-likelihood estimates of unseen conditioning contexts fall
        back to the next lower order, so the distribution over continuations
        sums to 1 for every context.
        """
        l1, l2, l3 = self.lambdas
        p1 = self.unigram_counts.get(c, 0) / self._unigram_total
        bi_total = self._bigram_context_totals.get(b, 0)
        p2 = self.bigram_counts.get((b, c), 0) / bi_total if bi_total else p1
        tri_total = self._trigram_context_totals.get((a, b), 0)
        p3 = (self.trigram_counts.get((a, b, c), 0) / tri_total
              if tri_total else p2)
        return l1 * p1 + l2 * p2 + l3 * p3

    def transition_logprob(self, a: str, b: str, c: str) -> float:
        p = self.transition_prob(a, b, c)
        return math.log(p) if p > 0.0 else NEG_INF

    @cached_property
    def _vocab_set(self) -> frozenset[str]:
        return frozenset(self.vocabulary)

    def emission_prob(self, g: str, t: str) -> float:
        """Open-vocabulary P(t | g); all unseen labels share one outcome."""
        eps = self.emission_epsilon
        denom = self._emission_totals.get(g, 0) + eps * (len(self.vocabulary) + 1)
        if t in self._vocab_set:
            return (self.emission_counts.get((g, t), 0) + eps) / denom
        return eps / denom

    def emission_logprob(self, g: str, t: str) -> float:
        return math.log(self.emission_prob(g, t))


@dataclass(frozen=True)
class PositionOutcome:
    """Per-daughter decoding outcome: chosen function, grade, and the
    strongest disagreeing alternative when it fell inside the beam."""

    label: str
    grade: Grade
    ratio: float
    second_label: Optional[str] = None
    second_log_probability: Optional[float] = None


@dataclass(frozen=True)
class FunctionPrediction:
    """A decoded function sequence with its joint log probability and
    per-position reliability outcomes."""

    functions: tuple[str, ...]
    log_probability: float
    positions: tuple[PositionOutcome, ...]

    @property
    def probability(self) -> float:
        return math.exp(self.log_probability)


def train(corpus: Corpus) -> dict[str, CategoryModel]:
    """One CategoryModel per phrase category occurring in the corpus.

    Every phrase node contributes its anchor-ordered daughters as one
    training sequence.
    """
    sequences: dict[str, list[tuple[tuple[str, ...], tuple[str, ...]]]] = {}
    for sentence in corpus.sentences:
        tree = sentence.tree
        for node in tree.nodes:
            labels, functions = ordered_daughters(node, tree)
            sequences.setdefault(node.category, []).append((functions, labels))
    if not sequences:
        raise TaggerError("nothing to train on: corpus has no phrase nodes")
    return {
        category: CategoryModel.from_sequences(category, seqs)
        for category, seqs in sorted(sequences.items())
    }


def score(model: CategoryModel, functions: Sequence[str],
          daughters: Sequence[str]) -> float:
    """Joint log probability of a function sequence for given daughters,
    including the closing transition to the boundary."""
    if len(functions) != len(daughters):
        raise TaggerError(
            f"length mismatch: {len(functions)} functions vs "
            f"{len(daughters)} daughters")
    if not functions:
        raise TaggerError("cannot score an empty sequence")
    total = 0.0
    prev2, prev1 = BOUNDARY, BOUNDARY
    for g, t in zip(functions, daughters):
        total += model.transition_logprob(prev2, prev1, g)
        total += model.emission_logprob(g, t)
        prev2, prev1 = prev1, g
    total += model.transition_logprob(prev2, prev1, BOUNDARY)
    return total


@dataclass(frozen=True)
class LatticeResult:
    """Raw output of the alternatives-tracking Viterbi pass."""

    best_path: tuple
    best_log: float
    # through[i][s]: best complete-path log probability among paths whose
    # state at position i is s.
    through: tuple[dict, ...]


def lattice_decode(
        states: Sequence,
        transition: Callable,
        emissions: Sequence[Mapping],
) -> LatticeResult:
    """Trigram Viterbi that also scores, per position and state, the best
    complete path forced through that state.

    ``transition(a, b, c)`` must accept ``None`` for the boundary;
    ``emissions[i][s]`` is the log emission score of state ``s`` at
    position ``i``.  Score ties are broken toward the lexicographically
    smallest state sequence, matching exhaustive enumeration order.
    """
    k = len(emissions)
    ordered = sorted(states)
    # forward[i]: (prev_state_or_None, state) -> (prefix score, prefix path)
    forward: list[dict] = []
    first = {}
    for s in ordered:
        sc = transition(None, None, s)
        sc += emissions[0][s]
        first[(None, s)] = (sc, (s,))
    forward.append(first)
    for i in range(1, k):
        layer: dict = {}
        for (pa, pb), (sc_prev, path_prev) in forward[i - 1].items():
            for s in ordered:
                cand = sc_prev + transition(pa, pb, s)
                cand += emissions[i][s]
                key = (pb, s)
                cur = layer.get(key)
                new_path = path_prev + (s,)
                if (cur is None or cand > cur[0]
                        or (cand == cur[0] and new_path < cur[1])):
                    layer[key] = (cand, new_path)
        forward.append(layer)

    best_log = NEG_INF
    best_path: Optional[tuple] = None
    for (pa, pb), (sc, path) in forward[k - 1].items():
        total = sc + transition(pa, pb, None)
        if best_path is None or total > best_log or (
                total == best_log and path < best_path):
            best_log = total
            best_path = path

    # Backward pass: best completion (score, suffix states) per pair.
    backward: list[dict] = [dict() for _ in range(k)]
    backward[k - 1] = {key: (transition(key[0], key[1], None), ())
                       for key in forward[k - 1]}
    for i in range(k - 2, -1, -1):
        layer = {}
        for (pa, pb) in forward[i]:
            best: Optional[tuple] = None
            for s in ordered:
                nxt = backward[i + 1].get((pb, s))
                if nxt is None:
                    continue
                cand = transition(pa, pb, s) + emissions[i + 1][s]
                cand += nxt[0]
                suffix = (s,) + nxt[1]
                if best is None or cand > best[0] or (
                        cand == best[0] and suffix < best[1]):
                    best = (cand, suffix)
            layer[(pa, pb)] = best
        backward[i] = layer

    # Per-position alternatives: stitch prefix and suffix together and
    # rescore the complete path with the canonical accumulation order, so
    # exact ties with the best path stay exact (the split forward+backward
    # sum rounds differently than a straight left-to-right sum).
    through: list[dict] = []
    for i in range(k):
        at_i: dict = {}
        for (pa, pb), (_sc, prefix) in forward[i].items():
            entry = backward[i][(pa, pb)]
            if entry is None:
                continue
            total = _canonical_score(prefix + entry[1], transition, emissions)
            if pb not in at_i or total > at_i[pb]:
                at_i[pb] = total
        through.append(at_i)

    assert best_path is not None
    return LatticeResult(best_path=best_path, best_log=best_log,
                         through=tuple(through))


def _canonical_score(path, transition, emissions) -> float:
    """Left-to-right log score of a complete path, the same op order as
    sequence scoring and the forward pass."""
    total = 0.0
    pa = pb = None
    for i, s in enumerate(path):
        total += transition(pa, pb, s)
        total += emissions[i][s]
        pa, pb = pb, s
    total += transition(pa, pb, None)
    return total


def grade_positions(
        result: LatticeResult,
        theta1: float,
        theta2: float,
        alternatives: Callable[[int], Iterable[tuple]],
) -> tuple[PositionOutcome, ...]:
    """Reliability outcomes for every position of a decoded lattice.

    ``alternatives(i)`` yields (state, through_log) pairs for states that
    disagree with the best path at position i.  An alternative is kept
    only if it falls inside the beam p >= p_best / theta2; a position
    with no in-beam alternative is fully reliable.
    """
    cutoff = result.best_log - math.log(theta2)
    out = []
    for i, best_state in enumerate(result.best_path):
        second_state = None
        second_log = NEG_INF
        for state, log_p in alternatives(i):
            if second_state is None or log_p > second_log or (
                    log_p == second_log and state < second_state):
                second_state, second_log = state, log_p
        if second_state is None:
            # No disagreeing path exists at all.
            out.append(PositionOutcome(
                label=_bare_label(best_state), grade=Grade.RELIABLE,
                ratio=math.inf))
        elif result.best_log == NEG_INF:
            # Every path is impossible; treat alternatives as equally good.
            out.append(PositionOutcome(
                label=_bare_label(best_state),
                grade=classify_ratio(1.0, theta1, theta2),
                ratio=1.0,
                second_label=_bare_label(second_state),
                second_log_probability=second_log,
            ))
        elif second_log < cutoff:
            # The strongest disagreeing path fell out of the beam.
            out.append(PositionOutcome(
                label=_bare_label(best_state), grade=Grade.RELIABLE,
                ratio=math.inf))
        else:
            diff = result.best_log - second_log
            ratio = math.exp(diff) if diff < 700 else math.inf
            out.append(PositionOutcome(
                label=_bare_label(best_state),
                grade=classify_ratio(ratio, theta1, theta2),
                ratio=ratio,
                second_label=_bare_label(second_state),
                second_log_probability=second_log,
            ))
    return tuple(out)


def _bare_label(state) -> str:
    return state if isinstance(state, str) else state.function


def decode(model: CategoryModel, daughters: DaughterSeq | Sequence[str],
           theta1: float = DEFAULT_THETA1,
           theta2: float = DEFAULT_THETA2) -> FunctionPrediction:
    """Most probable function sequence for the daughters, with grades.

    The search keeps every path within a factor of theta2 of the best
    one; per position, the strongest retained path that disagrees with
    the winner determines the reliability grade.
    """
    if not daughters:
        raise TaggerError("cannot decode an empty daughter sequence")
    check_thresholds(theta1, theta2)

    def transition(a, b, c):
        return model.transition_logprob(
            a or BOUNDARY, b or BOUNDARY, c or BOUNDARY)

    emissions = [
        {g: model.emission_logprob(g, t) for g in model.functions}
        for t in daughters
    ]
    result = lattice_decode(model.functions, transition, emissions)

    def alternatives(i):
        best_state = result.best_path[i]
        return ((s, lp) for s, lp in result.through[i].items()
                if s != best_state)

    positions = grade_positions(result, theta1, theta2, alternatives)
    return FunctionPrediction(
        functions=tuple(result.best_path),
        log_probability=result.best_log,
        positions=positions,
    )
