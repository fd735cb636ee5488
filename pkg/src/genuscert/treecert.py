"""Spanning-tree certification of a directed path or cycle.

The standard scheme: a spanning tree rooted on the object, certified by
(root ID, parent ID, distance) per node, plus the per-vertex
(predecessor, vertex, successor) triples of the object.  Every node
checks root-ID uniformity with its neighbors, the distance decrement
toward the root, and that its triples mesh with its neighbors' triples.
One round suffices and a forged second component is always caught.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .graph import Graph, spanning_tree


@dataclass(frozen=True)
class Verdict:
    node: object
    accept: bool
    reason: str = ""

    @staticmethod
    def ok(node):
        return Verdict(node, True)

    @staticmethod
    def reject(node, reason):
        return Verdict(node, False, reason)


@dataclass
class TreeFragment:
    root: object
    parent: object  # None at the root
    dist: int
    # triples: (pred, vertex, succ) with None for a missing side; a
    # chain index accompanies each triple so components cannot hide
    triples: list = field(default_factory=list)  # [(index, pred, succ)]


def tree_subcertificates(g: Graph, kind: str, chain):
    """Fragments certifying a directed path or cycle in ``g``.

    ``chain`` lists the object's vertices in order; ``kind`` is "path"
    or "cycle".  Returns {vertex: TreeFragment}.
    """
    if kind not in ("path", "cycle"):
        raise ValueError(kind)
    if not chain:
        raise ValueError("empty object")
    for a, b in zip(chain, chain[1:]):
        if not g.has_edge(a, b):
            raise ValueError(f"object uses a non-edge {a}-{b}")
    if kind == "cycle" and len(chain) > 1 and not g.has_edge(chain[-1], chain[0]):
        raise ValueError("cycle does not close")
    root = chain[0]
    parent, dist = spanning_tree(g, root)
    frags = {
        v: TreeFragment(root=root, parent=parent[v], dist=dist[v]) for v in g.vertices
    }
    n = len(chain)
    for i, v in enumerate(chain):
        if kind == "cycle":
            pred = chain[(i - 1) % n]
            succ = chain[(i + 1) % n]
        else:
            pred = chain[i - 1] if i > 0 else None
            succ = chain[i + 1] if i < n - 1 else None
        frags[v].triples.append((i, pred, succ))
    return frags


def check_tree_fragment(g: Graph, v, frags: dict, kind: str):
    """The node-local verdict of vertex v on a tree sub-certificate.

    ``frags`` maps every vertex to its fragment (the verifier only reads
    v's own fragment and its neighbors').
    """
    own = frags.get(v)
    if own is None:
        return Verdict.reject(v, "missing fragment")
    for w in g.neighbors(v):
        other = frags.get(w)
        if other is None or other.root != own.root:
            return Verdict.reject(v, "root-id mismatch with a neighbor")
    if own.dist == 0:
        if v != own.root or own.parent is not None:
            return Verdict.reject(v, "bad root claim")
    else:
        if own.parent not in g.neighbors(v):
            return Verdict.reject(v, "parent is not a neighbor")
        pfrag = frags[own.parent]
        if pfrag.dist != own.dist - 1:
            return Verdict.reject(v, "distance does not decrease toward the root")
    seen_idx = set()
    for idx, pred, succ in own.triples:
        if idx in seen_idx:
            return Verdict.reject(v, "duplicate chain index")
        seen_idx.add(idx)
        if pred == succ and pred is not None:
            return Verdict.reject(v, "pred equals succ")
        if idx == 0 and v != own.root:
            return Verdict.reject(v, "chain start away from the root")
        if pred is not None:
            if pred not in g.neighbors(v):
                return Verdict.reject(v, "pred is not a neighbor")
            # for index 0 on a cycle the predecessor holds the closing index
            ok = any(
                succ2 == v
                and (idx2 == idx - 1 or (kind == "cycle" and idx == 0))
                for idx2, _, succ2 in frags[pred].triples
            )
            if not ok:
                return Verdict.reject(v, "predecessor does not point back")
        elif kind == "cycle":
            return Verdict.reject(v, "cycle occurrence without predecessor")
        if succ is not None:
            if succ not in g.neighbors(v):
                return Verdict.reject(v, "succ is not a neighbor")
            ok = any(
                (pred2 == v and (idx2 == idx + 1 or (kind == "cycle" and idx2 == 0)))
                for idx2, pred2, _ in frags[succ].triples
            )
            if not ok:
                return Verdict.reject(v, "successor does not point back")
        elif kind == "cycle":
            return Verdict.reject(v, "cycle occurrence without successor")
    return Verdict.ok(v)


def run_tree_checker(g: Graph, frags: dict, kind: str):
    """All verdicts; the certificate stands iff every node accepts."""
    return [check_tree_fragment(g, v, frags, kind) for v in sorted(g.vertices, key=repr)]
