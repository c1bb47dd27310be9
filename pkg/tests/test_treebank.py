"""Anchor convention, daughter ordering, and appropriateness checks."""

import random

import pytest

from annobench.demo import DEMO_TAGSETS, clause_sentence, noun_phrase_sentence
from annobench.treebank import (
    Corpus,
    Edge,
    LabelEntry,
    PhraseNode,
    Sentence,
    SyntaxTree,
    TagsetTriple,
    Token,
    TreebankError,
    anchor,
    ordered_daughters,
    validate,
)

from helpers import random_tagsets, random_tree, yield_positions


def test_tagsets_reject_duplicates_and_whitespace():
    with pytest.raises(TreebankError):
        TagsetTriple((LabelEntry("A"), LabelEntry("A")),
                     (LabelEntry("P"),), (LabelEntry("E"),))
    with pytest.raises(TreebankError):
        TagsetTriple((LabelEntry("A B"),), (LabelEntry("P"),),
                     (LabelEntry("E"),))
    with pytest.raises(TreebankError):
        TagsetTriple((), (LabelEntry("P"),), (LabelEntry("E"),))


def test_tagsets_reject_reserved_edge_labels():
    with pytest.raises(TreebankError):
        TagsetTriple((LabelEntry("A"),), (LabelEntry("P"),),
                     (LabelEntry("--"),))
    with pytest.raises(TreebankError):
        TagsetTriple((LabelEntry("A"),), (LabelEntry("P"),),
                     (LabelEntry("$"),))


def test_vp_anchors_at_past_participle():
    tree = clause_sentence(1).tree
    assert anchor(tree.node_by_id[500], tree) == 2  # "besucht"


def test_np_anchors_at_last_noun_kernel_element():
    tree = noun_phrase_sentence(1).tree
    assert anchor(tree.node_by_id[502], tree) == 3  # "Bonusprogramm"


def test_single_token_phrase_anchors_at_that_token():
    tree = noun_phrase_sentence(1).tree
    assert anchor(tree.node_by_id[500], tree) == 2  # AP over "neue"


def test_clause_daughters_ordered_by_anchor():
    tree = clause_sentence(1).tree
    labels, functions = ordered_daughters(tree.node_by_id[501], tree)
    assert labels == ("VP", "VAFIN", "NE", "ADV")
    assert functions == ("OC", "HD", "SB", "NG")
    labels, functions = ordered_daughters(tree.node_by_id[500], tree)
    assert labels == ("ADV", "VVPP", "NE")
    assert functions == ("MO", "HD", "OA")


def test_single_child_daughters_are_singletons():
    tree = noun_phrase_sentence(1).tree
    labels, functions = ordered_daughters(tree.node_by_id[500], tree)
    assert labels == ("ADJA",)
    assert functions == ("HD",)


def test_anchor_requires_node_from_the_tree():
    tree = clause_sentence(1).tree
    with pytest.raises(TreebankError):
        anchor(PhraseNode(999, "NP"), tree)


def test_anchor_is_idempotent():
    tree = clause_sentence(1).tree
    node = tree.node_by_id[500]
    assert anchor(node, tree) == anchor(node, tree)


def test_np_without_kernel_falls_back_to_leftmost():
    tagsets = DEMO_TAGSETS
    tokens = (Token(1, "für", "APPR"), Token(2, "wen", "NE"))
    nodes = (PhraseNode(500, "NP"),)
    edges = (Edge(1, 500, "AC"), Edge(2, 500, "OA"), Edge(500, 0, "--"))
    tree = SyntaxTree(tokens, nodes, edges)
    assert validate(tree, tagsets) == []
    assert anchor(nodes[0], tree) == 1


def test_multiple_heads_use_leftmost_and_warn():
    tokens = (Token(1, "a", "ADV"), Token(2, "b", "VVPP"))
    nodes = (PhraseNode(500, "VP"),)
    edges = (Edge(1, 500, "HD"), Edge(2, 500, "HD"), Edge(500, 0, "--"))
    tree = SyntaxTree(tokens, nodes, edges)
    findings = validate(tree, DEMO_TAGSETS)
    assert [v.rule for v in findings] == ["multiple-heads"]
    assert findings[0].severity == "warning"
    assert anchor(nodes[0], tree) == 1


def test_validate_accepts_the_worked_example():
    assert validate(clause_sentence(1).tree, DEMO_TAGSETS) == []


def test_validate_reports_unknown_edge_label():
    tree = clause_sentence(1).tree
    bad = SyntaxTree(tree.tokens, tree.nodes, tuple(
        Edge(e.child, e.parent, "XX" if e.child == 4 else e.label)
        for e in tree.edges), None)
    findings = validate(bad, DEMO_TAGSETS)
    assert any(v.rule == "unknown-edge-label" and "4" in v.subject
               for v in findings)


def test_validate_reports_childless_node():
    tokens = (Token(1, "a", "ADV"),)
    nodes = (PhraseNode(500, "VP"),)
    edges = (Edge(1, 0, "--"), Edge(500, 0, "--"))
    findings = validate(SyntaxTree(tokens, nodes, edges), DEMO_TAGSETS)
    assert any(v.rule == "childless-node" for v in findings)


def test_validate_reports_cycles_and_multiple_parents():
    tokens = (Token(1, "a", "ADV"),)
    nodes = (PhraseNode(500, "VP"), PhraseNode(501, "VP"))
    edges = (Edge(1, 500, "MO"), Edge(500, 501, "OC"), Edge(501, 500, "OC"),
             Edge(1, 501, "MO"))
    findings = validate(SyntaxTree(tokens, nodes, edges), DEMO_TAGSETS)
    rules = {v.rule for v in findings}
    assert "cycle" in rules
    assert "multiple-parents" in rules


def test_validate_reports_gap_in_positions():
    tokens = (Token(1, "a", "ADV"), Token(3, "b", "ADV"))
    edges = (Edge(1, 0, "--"), Edge(3, 0, "--"))
    findings = validate(SyntaxTree(tokens, (), edges), DEMO_TAGSETS)
    assert any(v.rule == "token-positions" for v in findings)


def test_validate_reports_unattached_units():
    tokens = (Token(1, "a", "ADV"),)
    findings = validate(SyntaxTree(tokens, (), ()), DEMO_TAGSETS)
    assert any(v.rule == "unattached" for v in findings)


def test_random_trees_validate_cleanly():
    rng = random.Random(11)
    for _ in range(200):
        tagsets = random_tagsets(rng)
        tree = random_tree(rng, tagsets, allow_crossing=True)
        errors = [v for v in validate(tree, tagsets) if v.severity == "error"]
        assert errors == []


def test_noncrossing_daughter_order_equals_yield_order():
    rng = random.Random(23)
    checked = 0
    for _ in range(1000):
        tagsets = random_tagsets(rng)
        tree = random_tree(rng, tagsets, allow_crossing=False)
        for node in tree.nodes:
            labels, functions = ordered_daughters(node, tree)
            by_min_yield = sorted(
                tree.children_of[node.id],
                key=lambda e: min(yield_positions(tree, e.child)))
            assert labels == tuple(tree.unit_label(e.child)
                                   for e in by_min_yield)
            assert functions == tuple(e.label for e in by_min_yield)
            checked += 1
    assert checked > 500


def test_corpus_rejects_duplicate_sentence_ids():
    tree = clause_sentence(1).tree
    with pytest.raises(TreebankError):
        Corpus((Sentence(1, tree), Sentence(1, tree)), DEMO_TAGSETS)


def test_corpus_with_tree_replaces_one_sentence():
    corpus = Corpus((clause_sentence(1), noun_phrase_sentence(2)),
                    DEMO_TAGSETS)
    other = noun_phrase_sentence(2, "PG").tree
    updated = corpus.with_tree(2, other)
    assert updated.get(2) == other
    assert updated.get(1) == corpus.get(1)
    with pytest.raises(TreebankError):
        corpus.with_tree(99, other)
