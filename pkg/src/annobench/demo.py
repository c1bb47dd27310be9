"""A small hand-built demonstration corpus.

Two sentence shapes: a verb-second clause whose fronted VP crosses the
finite verb and subject, and a noun phrase with an attributive AP and a
post-nominal PP.  The PP's function alternates between post-nominal
modifier and pseudo-genitive in a ratio tuned so that a freshly trained
model proposes MNR for it at "marked" reliability: the demo then shows
all three interaction styles (auto-assign, confirm, correct by hand).
"""

from __future__ import annotations

from .treebank import (
    ROOT_EDGE,
    VIRTUAL_ROOT,
    Corpus,
    Edge,
    LabelEntry,
    PhraseNode,
    Sentence,
    SyntaxTree,
    TagsetTriple,
    Token,
)

DEMO_TAGSETS = TagsetTriple(
    word_tags=(
        LabelEntry("ADJA", "attributive adjective"),
        LabelEntry("ADV", "adverb"),
        LabelEntry("APPR", "preposition"),
        LabelEntry("ART", "article"),
        LabelEntry("NE", "proper noun"),
        LabelEntry("NN", "common noun"),
        LabelEntry("VAFIN", "finite auxiliary"),
        LabelEntry("VVPP", "past participle of main verb"),
    ),
    phrase_categories=(
        LabelEntry("AP", "adjective phrase"),
        LabelEntry("NP", "noun phrase"),
        LabelEntry("PP", "prepositional phrase"),
        LabelEntry("S", "sentence"),
        LabelEntry("VP", "verb phrase"),
    ),
    edge_labels=(
        LabelEntry("AC", "adpositional case marker"),
        LabelEntry("HD", "head"),
        LabelEntry("MNR", "post-nominal modifier"),
        LabelEntry("MO", "modifier"),
        LabelEntry("NG", "negation"),
        LabelEntry("NK", "noun kernel"),
        LabelEntry("OA", "accusative object"),
        LabelEntry("OC", "clausal object"),
        LabelEntry("PG", "pseudo genitive"),
        LabelEntry("SB", "subject"),
    ),
)


def clause_sentence(sentence_id: int, comment: str | None = None) -> Sentence:
    """"Selbst besucht hat Peter Sabine nie": the fronted VP dominates
    tokens 1, 2 and 5, crossing the finite verb and the subject."""
    tokens = (
        Token(1, "Selbst", "ADV"),
        Token(2, "besucht", "VVPP"),
        Token(3, "hat", "VAFIN"),
        Token(4, "Peter", "NE"),
        Token(5, "Sabine", "NE"),
        Token(6, "nie", "ADV"),
    )
    nodes = (PhraseNode(500, "VP"), PhraseNode(501, "S"))
    edges = (
        Edge(1, 500, "MO"),
        Edge(2, 500, "HD"),
        Edge(3, 501, "HD"),
        Edge(4, 501, "SB"),
        Edge(5, 500, "OA"),
        Edge(6, 501, "NG"),
        Edge(500, 501, "OC"),
        Edge(501, VIRTUAL_ROOT, ROOT_EDGE),
    )
    return Sentence(sentence_id, SyntaxTree(tokens, nodes, edges, comment))


_NP_TOKENS = (
    Token(1, "das", "ART"),
    Token(2, "neue", "ADJA"),
    Token(3, "Bonusprogramm", "NN"),
    Token(4, "für", "APPR"),
    Token(5, "Vielflieger", "NN"),
)


def noun_phrase_sentence(sentence_id: int, pp_function: str = "MNR") -> Sentence:
    """A fully annotated noun phrase: das [AP neue] Bonusprogramm
    [PP für Vielflieger], with the PP attached as ``pp_function``."""
    nodes = (PhraseNode(500, "AP"), PhraseNode(501, "PP"),
             PhraseNode(502, "NP"))
    edges = (
        Edge(1, 502, "NK"),
        Edge(2, 500, "HD"),
        Edge(3, 502, "NK"),
        Edge(4, 501, "AC"),
        Edge(5, 501, "NK"),
        Edge(500, 502, "NK"),
        Edge(501, 502, pp_function),
        Edge(502, VIRTUAL_ROOT, ROOT_EDGE),
    )
    return Sentence(sentence_id, SyntaxTree(_NP_TOKENS, nodes, edges))


def ungrouped_noun_phrase_sentence(sentence_id: int) -> Sentence:
    """The same five tokens with only AP and PP built: the NP over
    das/AP/Bonusprogramm/PP is still for the annotator to group."""
    nodes = (PhraseNode(500, "AP"), PhraseNode(501, "PP"))
    edges = (
        Edge(1, VIRTUAL_ROOT, ROOT_EDGE),
        Edge(2, 500, "HD"),
        Edge(3, VIRTUAL_ROOT, ROOT_EDGE),
        Edge(4, 501, "AC"),
        Edge(5, 501, "NK"),
        Edge(500, VIRTUAL_ROOT, ROOT_EDGE),
        Edge(501, VIRTUAL_ROOT, ROOT_EDGE),
    )
    return Sentence(sentence_id, SyntaxTree(_NP_TOKENS, nodes, edges))


def build_demo_corpus(clause_copies: int = 10, mnr_copies: int = 20,
                      pg_copies: int = 2) -> Corpus:
    """Training material plus one ungrouped sentence to annotate.

    The MNR/PG mix leaves the PP's function prediction in the marked
    reliability band under the default thresholds.
    """
    sentences = []
    next_id = 1
    for _ in range(clause_copies):
        sentences.append(clause_sentence(next_id))
        next_id += 1
    for _ in range(mnr_copies):
        sentences.append(noun_phrase_sentence(next_id, "MNR"))
        next_id += 1
    for _ in range(pg_copies):
        sentences.append(noun_phrase_sentence(next_id, "PG"))
        next_id += 1
    sentences.append(ungrouped_noun_phrase_sentence(next_id))
    return Corpus(tuple(sentences), DEMO_TAGSETS)
