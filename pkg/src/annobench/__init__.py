"""Treebank annotation workbench.

Per-phrase-category Markov models assign grammatical functions and
phrase categories to annotator-proposed constituents, grading every
prediction as reliable, marked (confirm), or unreliable (annotator
decides).  Ships with corpus/tagset/model file formats, a
cross-validation harness, a CLI, and an annotation HTTP service.
"""

from .treebank import (
    Corpus,
    Edge,
    LabelEntry,
    PhraseNode,
    Sentence,
    SyntaxTree,
    TagsetTriple,
    Token,
    TreebankError,
    Violation,
    anchor,
    ordered_daughters,
    validate,
)
from .tagger import (
    CategoryModel,
    FunctionPrediction,
    Grade,
    PositionOutcome,
    TaggerError,
    decode,
    deleted_interpolation,
    score,
    train,
)
from .phrase import (
    CombinedModel,
    IndexedFunction,
    PhrasePrediction,
    build_combined_model,
    decode_phrase,
)
from .corpus_io import (
    CorpusFormatError,
    CorpusIOError,
    CorpusValidationError,
    ModelArchive,
    ModelArchiveError,
    load_model,
    make_archive,
    parse_corpus,
    parse_tagsets,
    save_model,
    serialize_corpus,
    serialize_tagsets,
)

__version__ = "0.1.0"
