"""Combinatorial surface embeddings: rotation systems with edge signatures.

An embedding scheme stores, per vertex, the cyclic order of darts leaving
it, plus a sign per edge.  Face tracing turns any such scheme into the
boundary walks of a 2-cell embedding of the surface its Euler
characteristic determines, which makes every surface-level statement used
by the surgery pipeline checkable by counting.

A dart is the ordered pair (origin, neighbor); each edge {u, v} owns
exactly the two darts (u, v) and (v, u).
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ParityError, ParseError
from .graph import Graph, spanning_tree


def edge_key(u, v):
    return frozenset((u, v))


@dataclass(frozen=True)
class SurfaceKind:
    """Orientability plus genus (demigenus when non-orientable)."""

    orientable: bool
    genus: int

    def __str__(self):
        if self.orientable:
            return f"orientable genus {self.genus}"
        return f"non-orientable demigenus {self.genus}"


@dataclass(frozen=True)
class BoundaryWalk:
    """A traced face: cyclic vertex sequence plus the darts realizing it.

    ``walk[i]`` is the origin of ``darts[i]``; consecutive darts share a
    vertex.  A vertex may repeat; an edge appears at most twice, once per
    direction.
    """

    walk: tuple
    darts: tuple

    def __len__(self):
        return len(self.walk)

    def vertex_set(self):
        return frozenset(self.walk)

    def rotations(self):
        n = len(self.walk)
        for t in range(n):
            yield tuple(self.walk[(t + i) % n] for i in range(n))

    def reversed_walk(self):
        darts = tuple((v, u) for (u, v) in reversed(self.darts))
        return BoundaryWalk(tuple(d[0] for d in darts), darts)

    def matches(self, vertices, both_directions=False):
        """True if ``vertices`` equals this walk up to cyclic rotation."""
        target = tuple(vertices)
        if len(target) != len(self.walk):
            return False
        if any(target == rot for rot in self.rotations()):
            return True
        if both_directions:
            return self.reversed_walk().matches(target)
        return False


class EmbeddingScheme:
    """Rotation system + edge signatures for a graph.

    ``rotation[v]`` is a tuple of neighbor labels in cyclic order;
    ``signature[edge_key(u, v)]`` is +1 or -1.  All-positive signatures are
    the canonical presentation of an orientable scheme.
    """

    __slots__ = ("graph", "rotation", "signature", "_faces")

    def __init__(self, graph: Graph, rotation, signature=None):
        self.graph = graph
        rot = {}
        for v in graph.vertices:
            r = tuple(rotation[v])
            if set(r) != set(graph.neighbors(v)) or len(r) != graph.degree(v):
                raise ValueError(f"rotation at {v!r} is not a cyclic order of its neighbors")
            rot[v] = r
        self.rotation = rot
        sig = {}
        for e in graph.edges():
            s = 1 if signature is None else signature.get(e, 1)
            if s not in (1, -1):
                raise ValueError(f"signature of {set(e)} must be +1 or -1")
            sig[e] = s
        self.signature = sig
        self._faces = None

    def sig(self, u, v):
        return self.signature[edge_key(u, v)]

    def rotation_successor(self, v, w):
        r = self.rotation[v]
        return r[(r.index(w) + 1) % len(r)]

    def rotation_predecessor(self, v, w):
        r = self.rotation[v]
        return r[(r.index(w) - 1) % len(r)]

    def all_positive(self):
        return all(s == 1 for s in self.signature.values())

    # -- face tracing ------------------------------------------------------

    def _step(self, u, v, side):
        """Advance one dart along a face: traverse (u -> v) carrying ``side``."""
        side2 = side * self.sig(u, v)
        if side2 == 1:
            w = self.rotation_successor(v, u)
        else:
            w = self.rotation_predecessor(v, u)
        return v, w, side2

    def trace_face_from(self, u, v, side=1):
        """Trace the face orbit through the state (dart u->v, side)."""
        states = []
        state = (u, v, side)
        while True:
            states.append(state)
            state = self._step(*state)
            if state == (u, v, side):
                break
        darts = tuple((a, b) for (a, b, _) in states)
        return BoundaryWalk(tuple(d[0] for d in darts), darts), states

    def trace_faces(self):
        """All faces, each traced once, in a deterministic canonical order.

        Every (dart, side) state belongs to exactly one orbit and orbits
        pair up into a walk and its mirror image; one representative per
        pair is kept.  The total walk length over faces is 2|E|.
        """
        if self._faces is not None:
            return self._faces
        seen = set()
        faces = []
        # Sides form the outer loop: on an all-positive scheme every face
        # is then traced in its coherent (+1) direction, so each dart
        # belongs to exactly one listed face.
        for side in (1, -1):
            for u in sorted(self.graph.vertices):
                for v in self.rotation[u]:
                    if (u, v, side) in seen:
                        continue
                    face, states = self.trace_face_from(u, v, side)
                    seen.update(states)
                    # Consume the mirror orbit so the face is reported once.
                    mu, mv, ms = v, u, -side * self.sig(u, v)
                    if (mu, mv, ms) not in seen:
                        _, mirror = self.trace_face_from(mu, mv, ms)
                        seen.update(mirror)
                    else:
                        raise AssertionError("self-paired face orbit")
                    faces.append(face)
        total = sum(len(f) for f in faces)
        if total != 2 * self.graph.num_edges():
            raise AssertionError("face tracing lost or duplicated darts")
        self._faces = faces
        return faces

    def euler_characteristic(self):
        g = self.graph
        return len(g) - g.num_edges() + len(self.trace_faces())

    def is_orientable(self):
        """True iff a spanning-tree sign normalization clears every edge."""
        flips = _normalizing_flips(self)
        for e in self.graph.edges():
            u, v = sorted(e, key=repr)
            if self.signature[e] * flips[u] * flips[v] != 1:
                return False
        return True

    def face_of_dart(self, u, v):
        """The canonical face whose walk traverses the dart (u -> v).

        Only meaningful for all-positive schemes, where each dart is
        traversed by exactly one canonical face.
        """
        if not self.all_positive():
            raise ValueError("dart-to-face lookup needs an all-positive scheme")
        for idx, face in enumerate(self.trace_faces()):
            if (u, v) in face.darts:
                return idx, face
        raise KeyError((u, v))

    def copy_with(self, rotation=None, signature=None, graph=None):
        return EmbeddingScheme(
            graph or self.graph,
            rotation if rotation is not None else self.rotation,
            signature if signature is not None else self.signature,
        )


def _normalizing_flips(scheme: EmbeddingScheme):
    """Per-vertex flip signs making every spanning-tree edge positive."""
    g = scheme.graph
    root = min(g.vertices, key=repr)
    parent, _ = spanning_tree(g, root)
    order = sorted(parent, key=lambda v: (parent[v] is not None, repr(v)))
    flips = {}
    # BFS order guarantees the parent flip is known first.
    pending = [root]
    flips[root] = 1
    children = {}
    for v, p in parent.items():
        if p is not None:
            children.setdefault(p, []).append(v)
    while pending:
        v = pending.pop()
        for w in children.get(v, ()):
            flips[w] = flips[v] * scheme.sig(v, w)
            pending.append(w)
    del order
    return flips


def flip_vertex(scheme: EmbeddingScheme, v):
    """Reverse the rotation at ``v`` and negate its incident signatures.

    Flips never change the embedded surface; they are the change of local
    orientation at one vertex.
    """
    rotation = dict(scheme.rotation)
    rotation[v] = tuple(reversed(rotation[v]))
    signature = dict(scheme.signature)
    for w in scheme.graph.neighbors(v):
        e = edge_key(v, w)
        signature[e] = -signature[e]
    return scheme.copy_with(rotation=rotation, signature=signature)


def normalize_orientable(scheme: EmbeddingScheme):
    """Re-sign an orientable scheme into the canonical all-positive form."""
    flips = _normalizing_flips(scheme)
    out = scheme
    for v in sorted(scheme.graph.vertices, key=repr):
        if flips[v] == -1:
            out = flip_vertex(out, v)
    if not out.all_positive():
        raise ValueError("scheme is not orientable")
    return out


def euler_genus(scheme: EmbeddingScheme) -> SurfaceKind:
    """Surface of the 2-cell embedding the scheme encodes.

    Orientable: genus (2 - chi) / 2.  Non-orientable: demigenus 2 - chi.
    """
    chi = scheme.euler_characteristic()
    if scheme.is_orientable():
        if chi % 2 != 0:
            raise ParityError(f"orientable scheme with odd Euler characteristic {chi}")
        return SurfaceKind(True, (2 - chi) // 2)
    return SurfaceKind(False, 2 - chi)


# -- text format -----------------------------------------------------------
#
# One record per vertex:  v <id> : <dart list in rotation order>
# where each dart is the neighbor id, optionally suffixed "-" to declare
# the edge signature -1.  The suffix is stored once per edge; giving it on
# both sides is a conflict.  Blank lines and "#" comments are ignored.


def parse_embedding(text: str) -> EmbeddingScheme:
    rotations = {}
    neg_marks = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if not line.startswith("v"):
            raise ParseError(f"expected 'v <id> : ...', got {raw!r}", lineno)
        body = line[1:].strip()
        if ":" not in body:
            raise ParseError("missing ':' separator", lineno)
        head, tail = body.split(":", 1)
        try:
            vid = int(head.strip())
        except ValueError:
            raise ParseError(f"bad vertex id {head.strip()!r}", lineno) from None
        if vid in rotations:
            raise ParseError(f"duplicate record for vertex {vid}", lineno)
        order = []
        for tok in tail.split():
            negative = tok.endswith("-")
            if negative:
                tok = tok[:-1]
            try:
                w = int(tok)
            except ValueError:
                raise ParseError(f"bad dart {tok!r}", lineno) from None
            if w == vid:
                raise ParseError(f"self-loop at {vid}", lineno)
            if w in order:
                raise ParseError(f"repeated neighbor {w} at vertex {vid}", lineno)
            order.append(w)
            if negative:
                e = edge_key(vid, w)
                if e in neg_marks:
                    raise ParseError(
                        f"conflicting '-' suffixes on edge {{{vid}, {w}}}", lineno
                    )
                neg_marks[e] = lineno
        rotations[vid] = tuple(order)
    if not rotations:
        raise ParseError("empty embedding file", None)
    for v, order in rotations.items():
        for w in order:
            if w not in rotations or v not in rotations[w]:
                raise ParseError(f"edge {{{v}, {w}}} listed on one side only", None)
    graph = Graph({v: set(order) for v, order in rotations.items()})
    if not graph.is_connected():
        raise ParseError("graph is not connected", None)
    signature = {e: -1 for e in neg_marks}
    return EmbeddingScheme(graph, rotations, signature)


def format_embedding(scheme: EmbeddingScheme) -> str:
    lines = []
    written = set()
    for v in sorted(scheme.graph.vertices):
        darts = []
        for w in scheme.rotation[v]:
            e = edge_key(v, w)
            if scheme.signature[e] == -1 and e not in written:
                darts.append(f"{w}-")
                written.add(e)
            else:
                darts.append(str(w))
        lines.append(f"v {v} : {' '.join(darts)}")
    return "\n".join(lines) + "\n"
