"""Parallel-model category decoding and the combined indexed model."""

import math
import random

import pytest

from annobench.demo import build_demo_corpus
from annobench.phrase import (
    IndexedFunction,
    build_combined_model,
    decode_phrase,
)
from annobench.tagger import Grade, NEG_INF, TaggerError, train

from helpers import oracle_decode_phrase, random_daughters, random_model


def _random_model_set(rng, max_categories=4):
    n = rng.randint(1, max_categories)
    return {f"Q{i}": random_model(rng, max_functions=4, category=f"Q{i}")
            for i in range(n)}


def _label_pool(models):
    pool = []
    for model in models.values():
        pool.extend(model.vocabulary)
    return pool or ["T0"]


class TestDecodePhrase:
    def test_no_models_rejected(self):
        with pytest.raises(TaggerError):
            decode_phrase({}, ["ADV"])

    def test_empty_daughters_rejected(self):
        rng = random.Random(0)
        with pytest.raises(TaggerError):
            decode_phrase(_random_model_set(rng), [])

    def test_worked_examples(self):
        models = train(build_demo_corpus())
        assert decode_phrase(models, ["ADV", "VVPP", "NE"]).category == "VP"
        assert decode_phrase(models, ["VP", "VAFIN", "NE", "ADV"]).category \
            == "S"

    def test_unique_training_category_is_reliable(self):
        models = train(build_demo_corpus())
        prediction = decode_phrase(models, ["VP", "VAFIN", "NE", "ADV"])
        assert prediction.category == "S"
        assert prediction.category_grade is Grade.RELIABLE

    def test_matches_brute_force_over_category_function_pairs(self):
        rng = random.Random(2024)
        for _ in range(300):
            models = _random_model_set(rng)
            k = rng.randint(1, 5)
            daughters = random_daughters(rng, _label_pool(models), k)
            got = decode_phrase(models, daughters)
            category, functions, log_p = oracle_decode_phrase(models, daughters)
            assert got.category == category
            assert got.functions == functions
            assert math.isclose(got.log_probability, log_p, rel_tol=1e-9) \
                or got.log_probability == log_p

    def test_function_grades_come_from_winner_model(self):
        models = train(build_demo_corpus())
        prediction = decode_phrase(models, ["ART", "AP", "NN", "PP"])
        assert prediction.category == "NP"
        grades = [p.grade for p in prediction.function_prediction.positions]
        assert grades[:3] == [Grade.RELIABLE] * 3
        assert grades[3] is Grade.MARKED


class TestCombinedModel:
    def test_state_count_is_sum_of_inventories(self):
        rng = random.Random(5)
        models = _random_model_set(rng)
        combined = build_combined_model(models)
        assert len(combined.states) == sum(
            len(m.functions) for m in models.values())

    def test_cross_index_transitions_are_exactly_zero(self):
        rng = random.Random(6)
        while True:
            models = _random_model_set(rng)
            if len(models) >= 2:
                break
        combined = build_combined_model(models)
        (c1, m1), (c2, m2) = list(sorted(models.items()))[:2]
        a = IndexedFunction(c1, m1.functions[0])
        b = IndexedFunction(c2, m2.functions[0])
        assert combined.transition_logprob(None, a, b) == NEG_INF
        assert combined.transition_logprob(a, b, None) == NEG_INF
        assert combined.transition_logprob(a, a, b) == NEG_INF

    def test_mixed_index_paths_have_zero_probability(self):
        rng = random.Random(7)
        while True:
            models = _random_model_set(rng)
            if len(models) >= 2:
                break
        combined = build_combined_model(models)
        (c1, m1), (c2, m2) = list(sorted(models.items()))[:2]
        mixed = [IndexedFunction(c1, m1.functions[0]),
                 IndexedFunction(c2, m2.functions[0])]
        assert combined.sequence_score(mixed, ["T0", "T0"]) == NEG_INF

    def test_pure_paths_score_like_their_category_model(self):
        from annobench.tagger import score
        rng = random.Random(8)
        for _ in range(30):
            models = _random_model_set(rng)
            category = sorted(models)[0]
            model = models[category]
            combined = build_combined_model(models)
            k = rng.randint(1, 4)
            functions = [rng.choice(model.functions) for _ in range(k)]
            daughters = random_daughters(rng, model.vocabulary, k)
            indexed = [IndexedFunction(category, f) for f in functions]
            assert combined.sequence_score(indexed, daughters) \
                == score(model, functions, daughters)

    def test_agrees_with_parallel_decoding(self):
        rng = random.Random(99)
        for _ in range(300):
            models = _random_model_set(rng)
            k = rng.randint(1, 5)
            daughters = random_daughters(rng, _label_pool(models), k)
            parallel = decode_phrase(models, daughters)
            combined = build_combined_model(models).decode(daughters)
            assert combined.category == parallel.category
            assert combined.functions == parallel.functions
            assert combined.log_probability == parallel.log_probability
            assert combined.category_grade is parallel.category_grade
            for a, b in zip(combined.function_prediction.positions,
                            parallel.function_prediction.positions):
                assert a.grade is b.grade
                assert a.label == b.label

    def test_worked_examples_match_parallel(self):
        models = train(build_demo_corpus())
        combined = build_combined_model(models)
        for daughters in (["ADV", "VVPP", "NE"], ["VP", "VAFIN", "NE", "ADV"],
                          ["ART", "AP", "NN", "PP"]):
            a = combined.decode(daughters)
            b = decode_phrase(models, daughters)
            assert (a.category, a.functions) == (b.category, b.functions)

    def test_stripping_indices_reproduces_function_labels(self):
        rng = random.Random(55)
        for _ in range(50):
            models = _random_model_set(rng)
            daughters = random_daughters(rng, _label_pool(models),
                                         rng.randint(1, 4))
            combined = build_combined_model(models)
            prediction = combined.decode(daughters)
            assert prediction.functions == decode_phrase(
                models, daughters).functions
