"""Peak-phrase graph construction and candidate-event detection.

Nodes are (phrase, day) peaks. Two edge families:

* same-day edges weighted by the geometric mean of truncated npmi
  (document co-occurrence on that day) and truncated embedding cosine;
* consecutive-day edges of a constant weight between the same
  phrase peaking on adjacent days.

Communities of this graph (found by weighted modularity optimisation)
become candidate events.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .corpus import Corpus, OccurrenceIndex
from .embeddings import EmbeddingTable, cosine
from .errors import DataError
from .louvain import louvain_communities, modularity
from .peaks import PeakPhrase

NodeKey = tuple[str, int]


@dataclass
class PeakPhraseGraph:
    nodes: list[PeakPhrase]
    edges: dict[tuple[NodeKey, NodeKey], float] = field(default_factory=dict)
    temporal_weight: float = 3.0

    def _canon(self, a: NodeKey, b: NodeKey) -> tuple[NodeKey, NodeKey]:
        return (a, b) if a <= b else (b, a)

    def add_edge(self, a: NodeKey, b: NodeKey, weight: float) -> None:
        if a == b:
            raise DataError("self-loops are not allowed in the peak graph")
        self.edges[self._canon(a, b)] = float(weight)

    def weight(self, a: NodeKey, b: NodeKey) -> float | None:
        return self.edges.get(self._canon(a, b))

    def adjacency(self) -> dict[NodeKey, dict[NodeKey, float]]:
        adj: dict[NodeKey, dict[NodeKey, float]] = {n.key: {} for n in self.nodes}
        for (a, b), w in self.edges.items():
            adj[a][b] = w
            adj[b][a] = w
        return adj


@dataclass
class CandidateEvent:
    """A community of peak phrases: the phrases plus the day span they cover."""

    event_id: int
    phrases: set[str]
    span: tuple[int, int]
    member_nodes: list[PeakPhrase]

    @classmethod
    def from_members(cls, event_id: int, members: list[PeakPhrase]) -> "CandidateEvent":
        days = [m.day for m in members]
        return cls(
            event_id=event_id,
            phrases={m.phrase for m in members},
            span=(min(days), max(days)),
            member_nodes=sorted(members, key=lambda m: m.key),
        )


def npmi(
    node_i: PeakPhrase | NodeKey,
    node_j: PeakPhrase | NodeKey,
    corpus: Corpus,
    index: OccurrenceIndex,
) -> float:
    """Normalized pointwise mutual information of two phrases among the
    documents published on their shared peak day.

    Probabilities are document fractions restricted to that day. Zero
    co-occurrence returns the limit value -1; all-documents co-occurrence
    returns the limit value 1.
    """
    pi, ti = node_i.key if isinstance(node_i, PeakPhrase) else node_i
    pj, tj = node_j.key if isinstance(node_j, PeakPhrase) else node_j
    if ti != tj:
        raise DataError("npmi is defined only for peaks on the same day")
    day_docs = set(corpus.docs_on_day(ti))
    n = len(day_docs)
    if n == 0:
        raise DataError(f"no documents on day {ti}; npmi undefined")
    docs_i = index.doc_presence(pi) & day_docs
    docs_j = index.doc_presence(pj) & day_docs
    joint = len(docs_i & docs_j)
    if joint == 0:
        return -1.0
    if joint == n:
        return 1.0
    p_joint = joint / n
    p_i = len(docs_i) / n
    p_j = len(docs_j) / n
    return math.log(p_joint / (p_i * p_j)) / -math.log(p_joint)


def same_day_weight(npmi_val: float, cos_val: float) -> float:
    """Geometric mean of the two similarities, each truncated at zero."""
    return math.sqrt(max(npmi_val, 0.0) * max(cos_val, 0.0))


def build_graph(
    peaks: list[PeakPhrase],
    corpus: Corpus,
    index: OccurrenceIndex,
    embeddings: EmbeddingTable,
    temporal_weight: float = 3.0,
    edge_floor: float = 0.0,
) -> PeakPhraseGraph:
    """Connect peaks by same-day similarity edges and consecutive-day
    same-phrase edges of the constant temporal weight.

    Same-day edges are kept only when their weight exceeds edge_floor.
    Days that hold peaks but no documents (possible because the peak score
    looks ahead in time) produce no same-day edges.
    """
    if temporal_weight <= 1:
        raise DataError(f"temporal_weight must exceed 1, got {temporal_weight}")
    missing = sorted({p.phrase for p in peaks if p.phrase not in embeddings})
    if missing:
        raise DataError(
            "missing embeddings for peak phrases: " + ", ".join(missing)
        )
    graph = PeakPhraseGraph(
        nodes=sorted(peaks, key=lambda p: p.key), temporal_weight=temporal_weight
    )
    node_keys = {p.key for p in peaks}

    by_day: dict[int, list[PeakPhrase]] = {}
    for p in graph.nodes:
        by_day.setdefault(p.day, []).append(p)

    for day in sorted(by_day):
        if not corpus.docs_on_day(day):
            continue
        group = by_day[day]
        for i in range(len(group)):
            vi = embeddings.get(group[i].phrase)
            for j in range(i + 1, len(group)):
                w = same_day_weight(
                    npmi(group[i], group[j], corpus, index),
                    cosine(vi, embeddings.get(group[j].phrase)),
                )
                if w > edge_floor:
                    graph.add_edge(group[i].key, group[j].key, w)

    for p in graph.nodes:
        succ = (p.phrase, p.day + 1)
        if succ in node_keys:
            graph.add_edge(p.key, succ, temporal_weight)
    return graph


def detect_communities(
    graph: PeakPhraseGraph,
    min_size: int = 2,
    resolution: float = 1.0,
    seed: int = 0,
) -> list[CandidateEvent]:
    """Partition the graph into communities and keep those with at least
    min_size nodes as candidate events.

    Node visitation follows sorted (phrase, day) order, so results are
    deterministic; the seed is reserved for alternative orderings and does
    not affect the default behaviour.
    """
    if not graph.nodes:
        raise DataError("cannot detect communities of an empty graph")
    adj = graph.adjacency()
    node_of = {p.key: p for p in graph.nodes}
    groups = louvain_communities(adj, resolution=resolution)
    events = []
    for group in groups:
        if len(group) < min_size:
            continue
        members = [node_of[k] for k in group]
        events.append(CandidateEvent.from_members(len(events), members))
    return events


def partition_modularity(graph: PeakPhraseGraph, events: list[CandidateEvent]) -> float:
    """Modularity of the event partition (non-members as singletons)."""
    partition: dict[NodeKey, int] = {}
    for ev in events:
        for m in ev.member_nodes:
            partition[m.key] = ev.event_id
    next_label = len(events)
    for p in graph.nodes:
        if p.key not in partition:
            partition[p.key] = next_label
            next_label += 1
    return modularity(graph.adjacency(), partition)


def write_edges_tsv(path, graph: PeakPhraseGraph) -> None:
    """Debug export: one row per undirected edge."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("phrase_i\tday_i\tphrase_j\tday_j\tweight\n")
        for (a, b) in sorted(graph.edges):
            w = graph.edges[(a, b)]
            fh.write(f"{a[0]}\t{a[1]}\t{b[0]}\t{b[1]}\t{w:.6f}\n")


def write_events_tsv(path, events: list[CandidateEvent], corpus: Corpus) -> None:
    """One line per candidate event: id, ISO span, sorted phrases."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("event_id\tstart\tend\tphrases\n")
        for ev in events:
            start = corpus.date_of_day(ev.span[0]).isoformat()
            end = corpus.date_of_day(ev.span[1]).isoformat()
            fh.write(f"{ev.event_id}\t{start}\t{end}\t{'|'.join(sorted(ev.phrases))}\n")
