"""Annotation service: the interactive loop behind any client.

A :class:`Workbench` holds the committed corpus, the published model
generation, per-sentence pending proposals, undo/redo history, and
per-sentence write locks.  The reliability policy lives here, not in
clients: reliable labels are committed automatically, marked labels
wait for confirmation, unreliable labels wait for an explicit choice.
:func:`create_app` wraps a workbench in an HTTP JSON API.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

from .corpus_io import (
    ModelArchive,
    canonical_tree,
    corpus_sha256,
    make_archive,
    serialize_corpus,
)
from .phrase import decode_phrase
from .tagger import (
    DEFAULT_THETA1,
    DEFAULT_THETA2,
    CategoryModel,
    Grade,
    TaggerError,
    decode,
    train,
)
from .treebank import (
    MIN_NODE_ID,
    ROOT_EDGE,
    VIRTUAL_ROOT,
    Corpus,
    Edge,
    PhraseNode,
    SyntaxTree,
    Token,
    TreebankError,
    unit_anchor,
    validate,
)


class ServiceError(Exception):
    """Operation refused; carries an HTTP-ish status code."""

    def __init__(self, status: int, message: str):
        self.status = status
        super().__init__(message)


@dataclass(frozen=True)
class PendingItem:
    """One label decision inside a proposal.

    ``resolved`` holds the committed choice; None means the annotator
    still has to act (confirm a marked label, or type an unreliable one).
    """

    value: str
    grade: Grade
    ratio: float
    second: Optional[str] = None
    resolved: Optional[str] = None

    @property
    def pending(self) -> bool:
        return self.resolved is None


@dataclass(frozen=True)
class Proposal:
    """A grouped-but-not-fully-committed phrase node."""

    node_id: int
    children: tuple[int, ...]
    category: PendingItem
    edges: tuple[PendingItem, ...]
    annotator: str

    @property
    def fully_resolved(self) -> bool:
        return (not self.category.pending
                and all(not e.pending for e in self.edges))


@dataclass(frozen=True)
class _Snapshot:
    tree: SyntaxTree
    pending: tuple[Proposal, ...]
    op: Optional[dict]  # tree-level op that produced this state, if any


def _auto(item_value: str) -> PendingItem:
    """An item fixed by the annotator or committed automatically."""
    return PendingItem(value=item_value, grade=Grade.RELIABLE,
                       ratio=math.inf, resolved=item_value)


def _from_outcome(label: str, grade: Grade, ratio: float,
                  second: Optional[str]) -> PendingItem:
    resolved = label if grade is Grade.RELIABLE else None
    return PendingItem(value=label, grade=grade, ratio=ratio, second=second,
                       resolved=resolved)


# ---------------------------------------------------------------------------
# Pure tree edits (also used when replaying revision history)


def commit_node_op(tree: SyntaxTree, node_id: int, category: str,
                   children: Sequence[int], labels: Sequence[str]) -> SyntaxTree:
    """Attach a new phrase node over root units, with final edge labels."""
    new_node = PhraseNode(id=node_id, category=category)
    child_set = set(children)
    kept = tuple(e for e in tree.edges if e.child not in child_set)
    new_edges = tuple(Edge(child=c, parent=node_id, label=l)
                      for c, l in zip(children, labels))
    root_edge = (Edge(child=node_id, parent=VIRTUAL_ROOT, label=ROOT_EDGE),)
    return canonical_tree(SyntaxTree(
        tree.tokens, tree.nodes + (new_node,), kept + new_edges + root_edge,
        tree.comment))


def ungroup_op(tree: SyntaxTree, node_id: int) -> SyntaxTree:
    """Remove a node; its children take its place under its parent.

    Children moving to the virtual root get the root marker; children
    moving under another node keep their labels.
    """
    parent_edge = tree.parent_edge[node_id]
    new_edges = []
    for e in tree.edges:
        if e.child == node_id:
            continue
        if e.parent == node_id:
            label = ROOT_EDGE if parent_edge.parent == VIRTUAL_ROOT else e.label
            new_edges.append(Edge(e.child, parent_edge.parent, label))
        else:
            new_edges.append(e)
    nodes = tuple(n for n in tree.nodes if n.id != node_id)
    return canonical_tree(SyntaxTree(tree.tokens, nodes, tuple(new_edges),
                                     tree.comment))


def relabel_node_op(tree: SyntaxTree, node_id: int, category: str) -> SyntaxTree:
    nodes = tuple(PhraseNode(n.id, category) if n.id == node_id else n
                  for n in tree.nodes)
    return canonical_tree(SyntaxTree(tree.tokens, nodes, tree.edges,
                                     tree.comment))


def relabel_edge_op(tree: SyntaxTree, child: int, label: str) -> SyntaxTree:
    edges = tuple(Edge(e.child, e.parent, label) if e.child == child else e
                  for e in tree.edges)
    return canonical_tree(SyntaxTree(tree.tokens, tree.nodes, edges,
                                     tree.comment))


def reattach_op(tree: SyntaxTree, child: int, parent: int,
                label: Optional[str]) -> SyntaxTree:
    edges = []
    for e in tree.edges:
        if e.child == child:
            new_label = ROOT_EDGE if parent == VIRTUAL_ROOT else (
                label if label is not None
                else (e.label if e.label != ROOT_EDGE else None))
            if new_label is None:
                raise ServiceError(
                    400, "reattaching a root under a node needs a label")
            edges.append(Edge(child, parent, new_label))
        else:
            edges.append(e)
    return canonical_tree(SyntaxTree(tree.tokens, tree.nodes, tuple(edges),
                                     tree.comment))


_TREE_OPS: dict[str, Callable] = {
    "commit_node": lambda t, op: commit_node_op(
        t, op["node"], op["category"], op["children"], op["labels"]),
    "ungroup": lambda t, op: ungroup_op(t, op["node"]),
    "relabel_node": lambda t, op: relabel_node_op(t, op["node"], op["label"]),
    "relabel_edge": lambda t, op: relabel_edge_op(t, op["child"], op["label"]),
    "reattach": lambda t, op: reattach_op(t, op["child"], op["parent"],
                                          op.get("label")),
    "put": lambda t, op: op["tree"],
}


class Workbench:
    """Shared annotation state with the grade-gated commit policy."""

    def __init__(self, corpus: Corpus,
                 models: Optional[dict[str, CategoryModel]] = None,
                 theta1: float = DEFAULT_THETA1,
                 theta2: float = DEFAULT_THETA2,
                 autosave_path: Optional[Path] = None,
                 clock: Optional[Callable[[], str]] = None):
        self._lock = threading.RLock()
        self.corpus = corpus
        self.tagsets = corpus.tagsets
        self.models = dict(models) if models else None
        self.generation = 1 if models else 0
        self.theta1 = theta1
        self.theta2 = theta2
        self.autosave_path = Path(autosave_path) if autosave_path else None
        self.clock = clock or (
            lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))
        self.locks: dict[int, str] = {}
        self.overrides: list[dict] = []
        self._revisions: dict[int, list[_Snapshot]] = {}
        self._pointer: dict[int, int] = {}
        for sentence in corpus.sentences:
            self._revisions[sentence.id] = [
                _Snapshot(tree=sentence.tree, pending=(), op=None)]
            self._pointer[sentence.id] = 0

    # -- state access -------------------------------------------------

    def _current(self, sid: int) -> _Snapshot:
        if sid not in self._revisions:
            raise ServiceError(404, f"no sentence {sid}")
        return self._revisions[sid][self._pointer[sid]]

    def tree(self, sid: int) -> SyntaxTree:
        with self._lock:
            return self._current(sid).tree

    def pending(self, sid: int) -> tuple[Proposal, ...]:
        with self._lock:
            return self._current(sid).pending

    def sentence_ids(self) -> list[int]:
        return [s.id for s in self.corpus.sentences]

    def _require_lock(self, sid: int, annotator: str) -> None:
        if not annotator:
            raise ServiceError(400, "annotator id required")
        holder = self.locks.get(sid)
        if holder is None:
            self.locks[sid] = annotator
        elif holder != annotator:
            raise ServiceError(
                409, f"sentence {sid} is being edited by {holder!r}")

    def acquire(self, sid: int, annotator: str) -> None:
        with self._lock:
            self._current(sid)
            self._require_lock(sid, annotator)

    def release(self, sid: int, annotator: str) -> None:
        with self._lock:
            if self.locks.get(sid) == annotator:
                del self.locks[sid]

    # -- revision bookkeeping ------------------------------------------

    def _advance(self, sid: int, tree: SyntaxTree,
                 pending: tuple[Proposal, ...], op: Optional[dict]) -> None:
        """Append a new state after the pointer, dropping any redo tail."""
        history = self._revisions[sid]
        del history[self._pointer[sid] + 1:]
        history.append(_Snapshot(tree=tree, pending=pending, op=op))
        self._pointer[sid] += 1
        if op is not None:  # tree changed: sync corpus and autosave
            self.corpus = self.corpus.with_tree(sid, tree)
            self._autosave()

    def _advance_pending(self, sid: int,
                         pending: tuple[Proposal, ...]) -> None:
        self._advance(sid, self._current(sid).tree, pending, None)

    def _autosave(self) -> None:
        if self.autosave_path is not None:
            self.autosave_path.write_bytes(serialize_corpus(self.corpus))

    def undo(self, sid: int, annotator: str) -> None:
        with self._lock:
            self._require_lock(sid, annotator)
            if self._pointer[sid] == 0:
                raise ServiceError(409, "nothing to undo")
            self._pointer[sid] -= 1
            self._sync_after_jump(sid)

    def redo(self, sid: int, annotator: str) -> None:
        with self._lock:
            self._require_lock(sid, annotator)
            if self._pointer[sid] >= len(self._revisions[sid]) - 1:
                raise ServiceError(409, "nothing to redo")
            self._pointer[sid] += 1
            self._sync_after_jump(sid)

    def _sync_after_jump(self, sid: int) -> None:
        current = self._current(sid)
        if self.corpus.get(sid) != current.tree:
            self.corpus = self.corpus.with_tree(sid, current.tree)
            self._autosave()

    def replay(self, sid: int) -> SyntaxTree:
        """Re-derive the current tree by applying the recorded tree ops
        to the base revision; used to audit the revision history."""
        with self._lock:
            history = self._revisions[sid]
            tree = history[0].tree
            for snapshot in history[1:self._pointer[sid] + 1]:
                if snapshot.op is not None:
                    tree = _TREE_OPS[snapshot.op["op"]](tree, snapshot.op)
            return tree

    # -- predictions ----------------------------------------------------

    def _models_or_fail(self) -> dict[str, CategoryModel]:
        if not self.models:
            raise ServiceError(503, "no trained models are loaded")
        return self.models

    def _daughters_of(self, tree: SyntaxTree,
                      children: Sequence[int]) -> tuple[list[int], list[str]]:
        for c in children:
            if c not in tree.token_by_position and c not in tree.node_by_id:
                raise ServiceError(404, f"no token or node {c}")
        ordered = sorted(children, key=lambda c: unit_anchor(tree, c))
        return ordered, [tree.unit_label(c) for c in ordered]

    def predict_functions(self, sid: int, children: Sequence[int],
                          category: str,
                          theta1: Optional[float] = None,
                          theta2: Optional[float] = None) -> dict:
        with self._lock:
            models = self._models_or_fail()
            tree = self._current(sid).tree
            ordered, labels = self._daughters_of(tree, children)
            t1, t2 = self._thetas(theta1, theta2)
        model = models.get(category)
        if model is None:
            raise ServiceError(404, f"no model for category {category!r}")
        try:
            prediction = decode(model, labels, t1, t2)
        except TaggerError as exc:
            raise ServiceError(400, str(exc)) from None
        return {
            "category": category,
            "children": ordered,
            "daughters": labels,
            "log_probability": prediction.log_probability,
            "positions": [_outcome_payload(i, ordered[i], p)
                          for i, p in enumerate(prediction.positions)],
        }

    def predict_phrase(self, sid: int, children: Sequence[int],
                       theta1: Optional[float] = None,
                       theta2: Optional[float] = None) -> dict:
        with self._lock:
            models = self._models_or_fail()
            tree = self._current(sid).tree
            ordered, labels = self._daughters_of(tree, children)
            t1, t2 = self._thetas(theta1, theta2)
        try:
            prediction = decode_phrase(models, labels, t1, t2)
        except TaggerError as exc:
            raise ServiceError(400, str(exc)) from None
        return {
            "category": prediction.category,
            "category_grade": prediction.category_grade.value,
            "category_ratio": _finite(prediction.category_ratio),
            "runner_up": prediction.runner_up,
            "children": ordered,
            "daughters": labels,
            "log_probability": prediction.log_probability,
            "positions": [
                _outcome_payload(i, ordered[i], p)
                for i, p in enumerate(prediction.function_prediction.positions)],
        }

    def _thetas(self, theta1, theta2) -> tuple[float, float]:
        t1 = self.theta1 if theta1 is None else theta1
        t2 = self.theta2 if theta2 is None else theta2
        if not (1.0 <= t1 <= t2):
            raise ServiceError(400, "need 1 <= theta1 <= theta2")
        return t1, t2

    # -- editing --------------------------------------------------------

    def _check_groupable(self, sid: int, children: Sequence[int]) -> None:
        snapshot = self._current(sid)
        tree = snapshot.tree
        if not children:
            raise ServiceError(400, "select at least one child")
        if len(set(children)) != len(children):
            raise ServiceError(400, "duplicate children in selection")
        busy = {c for p in snapshot.pending for c in p.children}
        busy |= {p.node_id for p in snapshot.pending}
        for c in children:
            if c not in tree.token_by_position and c not in tree.node_by_id:
                raise ServiceError(404, f"no token or node {c}")
            edge = tree.parent_edge.get(c)
            if edge is None or edge.parent != VIRTUAL_ROOT:
                raise ServiceError(
                    409, f"unit {c} is not a root; ungroup or reattach first")
            if c in busy:
                raise ServiceError(409, f"unit {c} has a pending proposal")

    def _next_node_id(self, sid: int) -> int:
        snapshot = self._current(sid)
        used = [n.id for n in snapshot.tree.nodes]
        used += [p.node_id for p in snapshot.pending]
        return max([MIN_NODE_ID - 1, *used]) + 1

    def group(self, sid: int, annotator: str, children: Sequence[int],
              category: Optional[str] = None,
              edge_labels: Optional[Sequence[str]] = None,
              theta1: Optional[float] = None,
              theta2: Optional[float] = None) -> dict:
        """Level 0/1/2 grouping, depending on which labels are given.

        Explicit category and edges commit immediately; missing labels
        are predicted, and any marked/unreliable item parks the node as
        a pending proposal instead of committing it.
        """
        with self._lock:
            self._require_lock(sid, annotator)
            self._check_groupable(sid, children)
            tree = self._current(sid).tree
            ordered, labels = self._daughters_of(tree, children)
            t1, t2 = self._thetas(theta1, theta2)
            node_id = self._next_node_id(sid)

            if edge_labels is not None and category is None:
                raise ServiceError(400,
                                   "edge labels require an explicit category")
            if category is not None and \
                    category not in self.tagsets.phrase_category_labels:
                raise ServiceError(400, f"unknown category {category!r}")

            if edge_labels is not None:
                if len(edge_labels) != len(children):
                    raise ServiceError(
                        400, "need exactly one edge label per child")
                bad = [l for l in edge_labels
                       if l not in self.tagsets.edge_label_labels]
                if bad:
                    raise ServiceError(400, f"unknown edge labels {bad}")
                category_item = _auto(category)
                # edge_labels arrives parallel to the selection; commit in
                # anchor order
                by_child = dict(zip(children, edge_labels))
                edge_items = tuple(_auto(by_child[c]) for c in ordered)
            elif category is not None:
                model = self._models_or_fail().get(category)
                if model is None:
                    raise ServiceError(
                        404, f"no model for category {category!r}")
                prediction = decode(model, labels, t1, t2)
                category_item = _auto(category)
                edge_items = tuple(
                    _from_outcome(p.label, p.grade, p.ratio, p.second_label)
                    for p in prediction.positions)
            else:
                prediction = decode_phrase(self._models_or_fail(), labels,
                                           t1, t2)
                category_item = _from_outcome(
                    prediction.category, prediction.category_grade,
                    prediction.category_ratio, prediction.runner_up)
                edge_items = tuple(
                    _from_outcome(p.label, p.grade, p.ratio, p.second_label)
                    for p in prediction.function_prediction.positions)

            proposal = Proposal(node_id=node_id, children=tuple(ordered),
                                category=category_item, edges=edge_items,
                                annotator=annotator)
            if proposal.fully_resolved:
                self._commit_proposal(sid, proposal,
                                      self._current(sid).pending)
                return self._group_payload(sid, proposal, committed=True)
            snapshot = self._current(sid)
            self._advance_pending(sid, snapshot.pending + (proposal,))
            return self._group_payload(sid, proposal, committed=False)

    def _commit_proposal(self, sid: int, proposal: Proposal,
                         remaining: tuple[Proposal, ...]) -> None:
        """One revision: the node enters the tree, the proposal leaves
        the pending set."""
        tree = self._current(sid).tree
        labels = [e.resolved for e in proposal.edges]
        op = {"op": "commit_node", "node": proposal.node_id,
              "category": proposal.category.resolved,
              "children": list(proposal.children), "labels": labels}
        new_tree = commit_node_op(tree, proposal.node_id,
                                  proposal.category.resolved,
                                  proposal.children, labels)
        self._check_valid(new_tree)
        self._advance(sid, new_tree, remaining, op)

    def _check_valid(self, tree: SyntaxTree) -> None:
        problems = [v for v in validate(tree, self.tagsets)
                    if v.severity == "error"]
        if problems:
            detail = "; ".join(f"{v.subject}: {v.message}"
                               for v in problems[:4])
            raise ServiceError(400, f"edit would break the tree: {detail}")

    def _find_proposal(self, sid: int, node_id: int) -> Proposal:
        for p in self._current(sid).pending:
            if p.node_id == node_id:
                return p
        raise ServiceError(404, f"no pending proposal for node {node_id}")

    def _replace_proposal(self, sid: int, updated: Proposal) -> None:
        if updated.fully_resolved:
            remaining = tuple(p for p in self._current(sid).pending
                              if p.node_id != updated.node_id)
            self._commit_proposal(sid, updated, remaining)
        else:
            pending = tuple(updated if p.node_id == updated.node_id else p
                            for p in self._current(sid).pending)
            self._advance_pending(sid, pending)

    def _pick_item(self, proposal: Proposal,
                   target: Union[int, str]) -> PendingItem:
        if target == "category":
            return proposal.category
        if not isinstance(target, int) or not (
                0 <= target < len(proposal.edges)):
            raise ServiceError(
                400, f"target must be 'category' or a position index "
                     f"0..{len(proposal.edges) - 1}")
        return proposal.edges[target]

    def _put_item(self, proposal: Proposal, target: Union[int, str],
                  item: PendingItem) -> Proposal:
        if target == "category":
            return replace(proposal, category=item)
        edges = list(proposal.edges)
        edges[target] = item
        return replace(proposal, edges=tuple(edges))

    def confirm(self, sid: int, annotator: str, node_id: int,
                target: Union[int, str]) -> dict:
        """Accept a marked prediction as displayed."""
        with self._lock:
            self._require_lock(sid, annotator)
            proposal = self._find_proposal(sid, node_id)
            item = self._pick_item(proposal, target)
            if not item.pending:
                raise ServiceError(409, "no pending item at this position")
            if item.grade is Grade.UNRELIABLE:
                raise ServiceError(
                    409, "unreliable prediction: type the label explicitly")
            updated = self._put_item(proposal, target,
                                     replace(item, resolved=item.value))
            self._replace_proposal(sid, updated)
            return self._group_payload(
                sid, updated, committed=self._is_committed(sid, node_id))

    def override(self, sid: int, annotator: str, node_id: int,
                 target: Union[int, str], label: str) -> dict:
        """Replace a pending prediction with the annotator's label."""
        with self._lock:
            self._require_lock(sid, annotator)
            proposal = self._find_proposal(sid, node_id)
            item = self._pick_item(proposal, target)
            if not item.pending:
                raise ServiceError(409, "no pending item at this position")
            valid = (self.tagsets.phrase_category_labels
                     if target == "category"
                     else self.tagsets.edge_label_labels)
            if label not in valid:
                raise ServiceError(400, f"unknown label {label!r}")
            self.overrides.append({
                "sentence": sid, "node": node_id, "target": target,
                "predicted": item.value, "chosen": label,
                "grade": item.grade.value, "annotator": annotator,
            })
            updated = self._put_item(proposal, target,
                                     replace(item, resolved=label))
            self._replace_proposal(sid, updated)
            return self._group_payload(
                sid, updated, committed=self._is_committed(sid, node_id))

    def _is_committed(self, sid: int, node_id: int) -> bool:
        return node_id in self._current(sid).tree.node_by_id

    def ungroup(self, sid: int, annotator: str, node_id: int) -> dict:
        with self._lock:
            self._require_lock(sid, annotator)
            tree = self._current(sid).tree
            if node_id not in tree.node_by_id:
                raise ServiceError(404, f"no node {node_id}")
            new_tree = ungroup_op(tree, node_id)
            self._check_valid(new_tree)
            self._advance(sid, new_tree, self._current(sid).pending,
                          {"op": "ungroup", "node": node_id})
            return {"tree": tree_payload(new_tree)}

    def relabel(self, sid: int, annotator: str, label: str,
                node_id: Optional[int] = None,
                child: Optional[int] = None) -> dict:
        with self._lock:
            self._require_lock(sid, annotator)
            tree = self._current(sid).tree
            if (node_id is None) == (child is None):
                raise ServiceError(400, "give exactly one of node or child")
            if node_id is not None:
                if node_id not in tree.node_by_id:
                    raise ServiceError(404, f"no node {node_id}")
                if label not in self.tagsets.phrase_category_labels:
                    raise ServiceError(400, f"unknown category {label!r}")
                new_tree = relabel_node_op(tree, node_id, label)
                op = {"op": "relabel_node", "node": node_id, "label": label}
            else:
                if child not in tree.parent_edge:
                    raise ServiceError(404, f"no unit {child}")
                if tree.parent_edge[child].parent == VIRTUAL_ROOT:
                    raise ServiceError(400, "root edges keep their marker")
                if label not in self.tagsets.edge_label_labels:
                    raise ServiceError(400, f"unknown edge label {label!r}")
                new_tree = relabel_edge_op(tree, child, label)
                op = {"op": "relabel_edge", "child": child, "label": label}
            self._check_valid(new_tree)
            self._advance(sid, new_tree, self._current(sid).pending, op)
            return {"tree": tree_payload(new_tree)}

    def reattach(self, sid: int, annotator: str, child: int, parent: int,
                 label: Optional[str] = None) -> dict:
        with self._lock:
            self._require_lock(sid, annotator)
            tree = self._current(sid).tree
            if child not in tree.parent_edge:
                raise ServiceError(404, f"no unit {child}")
            if parent != VIRTUAL_ROOT and parent not in tree.node_by_id:
                raise ServiceError(404, f"no node {parent}")
            if label is not None and label != ROOT_EDGE \
                    and label not in self.tagsets.edge_label_labels:
                raise ServiceError(400, f"unknown edge label {label!r}")
            new_tree = reattach_op(tree, child, parent,
                                   None if label == ROOT_EDGE else label)
            self._check_valid(new_tree)
            self._advance(sid, new_tree, self._current(sid).pending,
                          {"op": "reattach", "child": child,
                           "parent": parent, "label": label})
            return {"tree": tree_payload(new_tree)}

    def put_tree(self, sid: int, annotator: str, tree: SyntaxTree) -> dict:
        """Replace a sentence tree wholesale (client-side editors)."""
        with self._lock:
            self._require_lock(sid, annotator)
            self._current(sid)
            new_tree = canonical_tree(tree)
            self._check_valid(new_tree)
            self._advance(sid, new_tree, (),
                          {"op": "put", "tree": new_tree})
            return {"tree": tree_payload(new_tree)}

    # -- models -----------------------------------------------------------

    def retrain(self) -> dict:
        """Train on all committed sentences and publish atomically."""
        with self._lock:
            corpus = self.corpus
        try:
            fresh = train(corpus)  # old generation keeps serving on failure
        except TaggerError as exc:
            raise ServiceError(409, f"retraining failed: {exc}") from None
        with self._lock:
            self.models = fresh
            self.generation += 1
            return {"generation": self.generation,
                    "categories": sorted(fresh)}

    def archive(self) -> ModelArchive:
        with self._lock:
            models = self._models_or_fail()
            return make_archive(models, self.tagsets, self.corpus,
                                created=self.clock())

    def export(self) -> bytes:
        with self._lock:
            return serialize_corpus(self.corpus)

    # -- payloads -----------------------------------------------------------

    def _group_payload(self, sid: int, proposal: Proposal,
                       committed: bool) -> dict:
        payload = proposal_payload(proposal)
        payload["committed"] = committed
        payload["tree"] = tree_payload(self._current(sid).tree)
        return payload

    def sentence_payload(self, sid: int) -> dict:
        with self._lock:
            snapshot = self._current(sid)
            return {
                "id": sid,
                "generation": self.generation,
                "locked_by": self.locks.get(sid),
                "can_undo": self._pointer[sid] > 0,
                "can_redo":
                    self._pointer[sid] < len(self._revisions[sid]) - 1,
                **tree_payload(snapshot.tree),
                "pending": [proposal_payload(p) for p in snapshot.pending],
            }


def _finite(ratio: float) -> Optional[float]:
    return None if math.isinf(ratio) else ratio


def _outcome_payload(index: int, child: int, outcome) -> dict:
    return {
        "index": index,
        "child": child,
        "label": outcome.label,
        "grade": outcome.grade.value,
        "ratio": _finite(outcome.ratio),
        "second_label": outcome.second_label,
    }


def item_payload(item: PendingItem) -> dict:
    return {
        "value": item.value,
        "grade": item.grade.value,
        "ratio": _finite(item.ratio),
        "second": item.second,
        "pending": item.pending,
        "resolved": item.resolved,
    }


def proposal_payload(proposal: Proposal) -> dict:
    return {
        "node": proposal.node_id,
        "children": list(proposal.children),
        "category": item_payload(proposal.category),
        "positions": [
            {"index": i, "child": c, **item_payload(item)}
            for i, (c, item) in enumerate(zip(proposal.children,
                                              proposal.edges))],
        "annotator": proposal.annotator,
    }


def tree_payload(tree: SyntaxTree) -> dict:
    return {
        "comment": tree.comment,
        "tokens": [{"position": t.position, "form": t.form, "pos": t.pos}
                   for t in tree.tokens],
        "nodes": [{"id": n.id, "category": n.category} for n in tree.nodes],
        "edges": [{"child": e.child, "parent": e.parent, "label": e.label}
                  for e in tree.edges],
    }


def tree_from_payload(doc: dict) -> SyntaxTree:
    try:
        tokens = tuple(Token(t["position"], t["form"], t["pos"])
                       for t in doc["tokens"])
        nodes = tuple(PhraseNode(n["id"], n["category"])
                      for n in doc.get("nodes", []))
        edges = tuple(Edge(e["child"], e["parent"], e["label"])
                      for e in doc.get("edges", []))
    except (KeyError, TypeError) as exc:
        raise ServiceError(400, f"bad tree payload: {exc}") from None
    return SyntaxTree(tokens, nodes, edges, doc.get("comment"))


# ---------------------------------------------------------------------------
# HTTP API

from pydantic import BaseModel, Field


class SessionBody(BaseModel):
    annotator: str
    sentence: int


class GroupBody(BaseModel):
    annotator: str
    children: list[int]
    category: Optional[str] = None
    edges: Optional[list[str]] = None
    theta1: Optional[float] = None
    theta2: Optional[float] = None


class PredictFunctionsBody(BaseModel):
    children: list[int]
    category: str
    theta1: Optional[float] = None
    theta2: Optional[float] = None


class PredictPhraseBody(BaseModel):
    children: list[int]
    theta1: Optional[float] = None
    theta2: Optional[float] = None


class ConfirmBody(BaseModel):
    annotator: str
    node: int
    target: Union[int, str] = Field(
        description="'category' or a 0-based daughter index")


class OverrideBody(ConfirmBody):
    label: str


class UngroupBody(BaseModel):
    annotator: str
    node: int


class RelabelBody(BaseModel):
    annotator: str
    label: str
    node: Optional[int] = None
    child: Optional[int] = None


class ReattachBody(BaseModel):
    annotator: str
    child: int
    parent: int
    label: Optional[str] = None


class AnnotatorBody(BaseModel):
    annotator: str


class PutTreeBody(BaseModel):
    annotator: str
    tree: dict


def create_app(workbench: Workbench):
    """JSON API over a workbench; payload field names are stable and
    documented in the README."""
    from fastapi import FastAPI, Request, Response
    from fastapi.responses import JSONResponse

    app = FastAPI(title="annobench annotation service")

    @app.exception_handler(ServiceError)
    async def _service_error(_request: Request, exc: ServiceError):
        return JSONResponse(status_code=exc.status,
                            content={"error": str(exc)})

    @app.get("/tagsets")
    def tagsets():
        t = workbench.tagsets
        return {
            "words": [{"label": e.label, "description": e.description}
                      for e in t.word_tags],
            "phrases": [{"label": e.label, "description": e.description}
                        for e in t.phrase_categories],
            "edges": [{"label": e.label, "description": e.description}
                      for e in t.edge_labels],
        }

    @app.get("/sentences")
    def sentences():
        return {
            "sentences": [
                {"id": sid,
                 "tokens": len(workbench.tree(sid).tokens),
                 "nodes": len(workbench.tree(sid).nodes),
                 "locked_by": workbench.locks.get(sid)}
                for sid in workbench.sentence_ids()],
            "generation": workbench.generation,
        }

    @app.get("/sentences/{sid}")
    def get_sentence(sid: int):
        return workbench.sentence_payload(sid)

    @app.put("/sentences/{sid}")
    def put_sentence(sid: int, body: PutTreeBody):
        return workbench.put_tree(sid, body.annotator,
                                  tree_from_payload(body.tree))

    @app.post("/sessions")
    def open_session(body: SessionBody):
        workbench.acquire(body.sentence, body.annotator)
        return {"sentence": body.sentence, "annotator": body.annotator}

    @app.delete("/sessions/{sid}")
    def close_session(sid: int, annotator: str):
        workbench.release(sid, annotator)
        return {"released": sid}

    @app.post("/sentences/{sid}/predict-functions")
    def predict_functions(sid: int, body: PredictFunctionsBody):
        return workbench.predict_functions(sid, body.children, body.category,
                                           body.theta1, body.theta2)

    @app.post("/sentences/{sid}/predict-phrase")
    def predict_phrase(sid: int, body: PredictPhraseBody):
        return workbench.predict_phrase(sid, body.children,
                                        body.theta1, body.theta2)

    @app.post("/sentences/{sid}/group")
    def group(sid: int, body: GroupBody):
        return workbench.group(sid, body.annotator, body.children,
                               body.category, body.edges,
                               body.theta1, body.theta2)

    @app.post("/sentences/{sid}/confirm")
    def confirm(sid: int, body: ConfirmBody):
        return workbench.confirm(sid, body.annotator, body.node, body.target)

    @app.post("/sentences/{sid}/override")
    def override(sid: int, body: OverrideBody):
        return workbench.override(sid, body.annotator, body.node,
                                  body.target, body.label)

    @app.post("/sentences/{sid}/ungroup")
    def ungroup(sid: int, body: UngroupBody):
        return workbench.ungroup(sid, body.annotator, body.node)

    @app.post("/sentences/{sid}/relabel")
    def relabel(sid: int, body: RelabelBody):
        return workbench.relabel(sid, body.annotator, body.label,
                                 body.node, body.child)

    @app.post("/sentences/{sid}/reattach")
    def reattach(sid: int, body: ReattachBody):
        return workbench.reattach(sid, body.annotator, body.child,
                                  body.parent, body.label)

    @app.post("/sentences/{sid}/undo")
    def undo(sid: int, body: AnnotatorBody):
        workbench.undo(sid, body.annotator)
        return workbench.sentence_payload(sid)

    @app.post("/sentences/{sid}/redo")
    def redo(sid: int, body: AnnotatorBody):
        workbench.redo(sid, body.annotator)
        return workbench.sentence_payload(sid)

    @app.post("/retrain")
    def retrain(_body: Optional[AnnotatorBody] = None):
        return workbench.retrain()

    @app.get("/export")
    def export():
        return Response(content=workbench.export(),
                        media_type="text/plain; charset=utf-8")

    @app.get("/stats")
    def stats():
        return {"overrides": list(workbench.overrides),
                "generation": workbench.generation}

    return app

