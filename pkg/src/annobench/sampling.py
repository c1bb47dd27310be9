"""Sampling synthetic corpora from trained models.

Used by the evaluation harness tests and demos: sentences are drawn
from the models' own transition and emission distributions, so the
resulting corpus is consistent with the generator by construction.
Daughters that are phrase categories with a model of their own are
expanded recursively; trees come out without crossing branches.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Mapping, Union

from .corpus_io import canonical_tree
from .tagger import BOUNDARY, CategoryModel, TaggerError
from .treebank import (
    MIN_NODE_ID,
    ROOT_EDGE,
    VIRTUAL_ROOT,
    Corpus,
    Edge,
    PhraseNode,
    Sentence,
    SyntaxTree,
    TagsetTriple,
    Token,
)


@dataclass
class _SampledPhrase:
    category: str
    children: list[tuple[str, Union[str, "_SampledPhrase"]]]  # (function, leaf POS or phrase)


def _sample_from(rng: random.Random, outcomes: list[tuple[str, float]]) -> str:
    total = sum(w for _o, w in outcomes)
    if total <= 0:
        raise TaggerError("cannot sample from an all-zero distribution")
    x = rng.random() * total
    acc = 0.0
    for outcome, weight in outcomes:
        acc += weight
        if x < acc:
            return outcome
    return outcomes[-1][0]


def _sample_functions(model: CategoryModel, rng: random.Random,
                      max_length: int) -> list[str]:
    functions: list[str] = []
    prev2, prev1 = BOUNDARY, BOUNDARY
    while True:
        outcomes = [(g, model.transition_prob(prev2, prev1, g))
                    for g in model.functions]
        if functions:  # the boundary may close the phrase once it has content
            outcomes.append((BOUNDARY, model.transition_prob(prev2, prev1,
                                                             BOUNDARY)))
        drawn = _sample_from(rng, outcomes)
        if drawn == BOUNDARY:
            return functions
        functions.append(drawn)
        prev2, prev1 = prev1, drawn
        if len(functions) >= max_length:
            return functions


def _sample_phrase(models: Mapping[str, CategoryModel], category: str,
                   rng: random.Random, depth: int, max_depth: int,
                   max_length: int) -> _SampledPhrase:
    if depth > max_depth:
        raise TaggerError(
            f"sampling exceeded depth {max_depth}; the models recurse too "
            "deeply to generate finite trees")
    model = models[category]
    children: list[tuple[str, Union[str, _SampledPhrase]]] = []
    for g in _sample_functions(model, rng, max_length):
        outcomes = [(t, model.emission_prob(g, t)) for t in model.vocabulary]
        label = _sample_from(rng, outcomes)
        if label in models:
            children.append((g, _sample_phrase(models, label, rng, depth + 1,
                                               max_depth, max_length)))
        else:
            children.append((g, label))
    return _SampledPhrase(category=category, children=children)


def _build_tree(root: _SampledPhrase) -> SyntaxTree:
    tokens: list[Token] = []
    nodes: list[PhraseNode] = []
    edges: list[Edge] = []
    next_node = [MIN_NODE_ID]

    def emit(phrase: _SampledPhrase, parent: int, label: str) -> None:
        node_id = next_node[0]
        next_node[0] += 1
        nodes.append(PhraseNode(id=node_id, category=phrase.category))
        edges.append(Edge(child=node_id, parent=parent, label=label))
        for function, child in phrase.children:
            if isinstance(child, _SampledPhrase):
                emit(child, node_id, function)
            else:
                position = len(tokens) + 1
                tokens.append(Token(position=position, form=child.lower(),
                                    pos=child))
                edges.append(Edge(child=position, parent=node_id,
                                  label=function))

    emit(root, VIRTUAL_ROOT, ROOT_EDGE)
    return canonical_tree(SyntaxTree(tokens=tuple(tokens), nodes=tuple(nodes),
                                     edges=tuple(edges)))


def sample_corpus(
        models: Mapping[str, CategoryModel],
        tagsets: TagsetTriple,
        n_sentences: int,
        seed: int = 0,
        root_category: str = "S",
        max_depth: int = 6,
        max_length: int = 12,
) -> Corpus:
    """Draw a corpus of ``n_sentences`` from the models.

    Every sentence is one phrase of ``root_category`` expanded
    recursively.  Sampling is deterministic in the seed.
    """
    if root_category not in models:
        raise TaggerError(f"no model for root category {root_category!r}")
    rng = random.Random(seed)
    sentences = []
    for i in range(1, n_sentences + 1):
        phrase = _sample_phrase(models, root_category, rng, 1,
                                max_depth, max_length)
        sentences.append(Sentence(i, _build_tree(phrase)))
    return Corpus(tuple(sentences), tagsets)
