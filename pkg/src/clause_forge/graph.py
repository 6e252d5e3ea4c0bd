"""Condition/action graphs compiled from tagged spans.

A template fires only when its required tag set equals the annotation's tag
set exactly; otherwise :func:`create_graph` returns :data:`EMPTY`. Partial
graphs are never produced.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

from .core import AnnotationSet, TagType, parse_tag


class NodeKind(str, enum.Enum):
    CONDITION = "CONDITION"
    ACTION = "ACTION"


class EdgeLabel(str, enum.Enum):
    TRUE = "TRUE"
    FALSE = "FALSE"
    NEXT = "NEXT"


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Node:
    id: str
    kind: NodeKind
    text: str
    tag: TagType


@dataclass(frozen=True)
class Edge:
    source: str
    target: str
    label: EdgeLabel


@dataclass(frozen=True)
class GraphTemplate:
    id: str
    required: frozenset[TagType]
    kinds: tuple[tuple[TagType, NodeKind], ...]
    edges: tuple[tuple[TagType, TagType, EdgeLabel], ...]

    def __post_init__(self) -> None:
        if {t for t, _ in self.kinds} != set(self.required):
            raise GraphError(f"template {self.id}: node layout does not cover exactly the required tags")
        for a, b, _ in self.edges:
            if a not in self.required or b not in self.required:
                raise GraphError(f"template {self.id}: edge {a.value}->{b.value} leaves the template")


def _conditional(id: str, with_alt: bool) -> GraphTemplate:
    kinds = [(TagType.CND, NodeKind.CONDITION), (TagType.CSQ, NodeKind.ACTION)]
    edges = [(TagType.CND, TagType.CSQ, EdgeLabel.TRUE)]
    if with_alt:
        kinds.append((TagType.ALT, NodeKind.ACTION))
        edges.append((TagType.CND, TagType.ALT, EdgeLabel.FALSE))
    return GraphTemplate(id, frozenset(t for t, _ in kinds), tuple(kinds), tuple(edges))


def _sequence(id: str, tags: Sequence[TagType]) -> GraphTemplate:
    kinds = tuple((t, NodeKind.ACTION) for t in tags)
    edges = tuple((a, b, EdgeLabel.NEXT) for a, b in zip(tags, tags[1:]))
    return GraphTemplate(id, frozenset(tags), kinds, edges)


class TemplateRegistry:
    """Ordered templates; required tag sets must be distinct."""

    def __init__(self, templates: Iterable[GraphTemplate]) -> None:
        self._templates = tuple(templates)
        seen: dict[frozenset[TagType], str] = {}
        for t in self._templates:
            if t.required in seen:
                raise GraphError(f"templates {seen[t.required]} and {t.id} require the same tags")
            seen[t.required] = t.id

    def __iter__(self):
        return iter(self._templates)

    def __len__(self) -> int:
        return len(self._templates)

    def find(self, tags: frozenset[TagType]) -> GraphTemplate | None:
        for t in self._templates:
            if t.required == tags:
                return t
        return None

    def get(self, id: str) -> GraphTemplate:
        for t in self._templates:
            if t.id == id:
                return t
        raise KeyError(id)


DEFAULT_REGISTRY = TemplateRegistry(
    [
        _conditional("conditional", with_alt=False),
        _conditional("conditional-alternative", with_alt=True),
        _sequence("sequence-2", (TagType.FA, TagType.SA)),
        _sequence("sequence-3", (TagType.FA, TagType.SA, TagType.TA)),
    ]
)


@dataclass(frozen=True)
class DecompositionGraph:
    nodes: tuple[Node, ...] = ()
    edges: tuple[Edge, ...] = ()
    template: str | None = None

    @property
    def is_empty(self) -> bool:
        return not self.nodes

    def node(self, id: str) -> Node:
        for n in self.nodes:
            if n.id == id:
                return n
        raise KeyError(id)

    def validate(self) -> None:
        """Raise :class:`GraphError` unless the structural invariants hold."""
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise GraphError("duplicate node ids")
        idset = set(ids)
        for e in self.edges:
            if e.source not in idset or e.target not in idset:
                raise GraphError(f"edge {e.source}->{e.target} references a missing node")
        for n in self.nodes:
            if n.kind is NodeKind.CONDITION:
                out = {e.label for e in self.edges if e.source == n.id}
                if EdgeLabel.TRUE not in out:
                    raise GraphError(f"condition {n.id} has no TRUE edge")
                has_alt = any(m.tag is TagType.ALT for m in self.nodes)
                if (EdgeLabel.FALSE in out) != has_alt:
                    raise GraphError(f"condition {n.id}: FALSE edge must exist exactly when an ALT node does")
        if _has_cycle(ids, self.edges):
            raise GraphError("graph has a cycle")


EMPTY = DecompositionGraph()


def _has_cycle(ids: Sequence[str], edges: Sequence[Edge]) -> bool:
    succ: dict[str, list[str]] = {i: [] for i in ids}
    for e in edges:
        succ[e.source].append(e.target)
    state: dict[str, int] = {}

    def visit(v: str) -> bool:
        state[v] = 1
        for w in succ[v]:
            if state.get(w) == 1 or (w not in state and visit(w)):
                return True
        state[v] = 2
        return False

    return any(v not in state and visit(v) for v in ids)


def create_graph(annotations: AnnotationSet, registry: TemplateRegistry = DEFAULT_REGISTRY) -> DecompositionGraph:
    """Map each span to a node of the matching template, or return EMPTY."""
    spans = [s for s in annotations.spans if s.tag is not TagType.NN]
    tags = frozenset(s.tag for s in spans)
    if not spans or len(tags) != len(spans):
        return EMPTY
    template = registry.find(tags)
    if template is None:
        return EMPTY
    by_tag = {s.tag: s for s in spans}
    ids = {}
    nodes = []
    for k, (tag, kind) in enumerate(template.kinds):
        ids[tag] = f"n{k}"
        nodes.append(Node(ids[tag], kind, annotations.span_text(by_tag[tag]), tag))
    edges = tuple(Edge(ids[a], ids[b], label) for a, b, label in template.edges)
    return DecompositionGraph(tuple(nodes), edges, template.id)


# -- serialization -----------------------------------------------------------


def graph_to_json(graph: DecompositionGraph) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "nodes": [{"id": n.id, "kind": n.kind.value, "text": n.text, "tag": n.tag.value} for n in graph.nodes],
        "edges": [{"from": e.source, "to": e.target, "label": e.label.value} for e in graph.edges],
    }
    if graph.template is not None:
        doc["template"] = graph.template
    return doc


def graph_from_json(doc: dict[str, Any] | str | bytes) -> DecompositionGraph:
    if isinstance(doc, (str, bytes)):
        doc = json.loads(doc)
    try:
        nodes = tuple(
            Node(str(n["id"]), NodeKind(n["kind"]), str(n["text"]), parse_tag(n["tag"])) for n in doc["nodes"]
        )
        edges = tuple(Edge(str(e["from"]), str(e["to"]), EdgeLabel(e["label"])) for e in doc["edges"])
    except (KeyError, TypeError, ValueError) as exc:
        raise GraphError(f"malformed graph document: {exc}") from exc
    graph = DecompositionGraph(nodes, edges, doc.get("template"))
    graph.validate()
    return graph


def _dot_quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


_DOT_STYLE = {
    NodeKind.CONDITION: 'shape=diamond, style=filled, fillcolor="#fde9b8"',
    NodeKind.ACTION: 'shape=box, style="rounded,filled", fillcolor="#d6e8fa"',
}


def export_graph(graph: DecompositionGraph, format: str = "json") -> bytes:
    fmt = format.lower()
    if fmt == "json":
        return json.dumps(graph_to_json(graph), separators=(",", ":"), sort_keys=False, ensure_ascii=False).encode(
            "utf-8"
        )
    if fmt == "dot":
        lines = ["digraph decomposition {", "  rankdir=LR;"]
        for n in graph.nodes:
            label = _dot_quote(f"{n.tag.value}: {n.text}")
            lines.append(f"  {n.id} [label={label}, {_DOT_STYLE[n.kind]}];")
        for e in graph.edges:
            lines.append(f"  {e.source} -> {e.target} [label={e.label.value}];")
        lines.append("}")
        return ("\n".join(lines) + "\n").encode("utf-8")
    raise GraphError(f"unknown graph format {format!r}; expected json or dot")
