"""Random positive instances for completeness and size studies.

Random planar triangulations grow by repeated vertex insertion into a
face; handles are added by bridging two vertex-disjoint faces of equal
length with new edges, identified with opposite orientations so the
Euler characteristic drops by exactly 2 per handle.
"""

from __future__ import annotations

import random

from .embedding import EmbeddingScheme, edge_key, euler_genus
from .errors import GenusCertError
from .graph import Graph


def random_planar_triangulation(n: int, rng: random.Random) -> EmbeddingScheme:
    """A random planar triangulation on n >= 3 vertices with IDs 1..n.

    Faces are kept as coherently directed triples; inserting vertex v
    into face (a, b, c) adds the dart toward v at each corner, right
    after the dart toward the walk predecessor.
    """
    if n < 3:
        raise ValueError("need n >= 3")
    rotation = {1: [2, 3], 2: [3, 1], 3: [1, 2]}
    faces = [(1, 2, 3), (1, 3, 2)]
    for v in range(4, n + 1):
        idx = rng.randrange(len(faces))
        a, b, c = faces.pop(idx)
        walk = (a, b, c)
        for t, x in enumerate(walk):
            pred = walk[(t - 1) % 3]
            r = rotation[x]
            r.insert(r.index(pred) + 1, v)
        rotation[v] = [a, c, b]
        faces += [(a, b, v), (b, c, v), (c, a, v)]
    g = Graph({v: set(r) for v, r in rotation.items()})
    scheme = EmbeddingScheme(g, {v: tuple(r) for v, r in rotation.items()})
    kind = euler_genus(scheme)
    if not (kind.orientable and kind.genus == 0):
        raise AssertionError("triangulation generator produced a non-sphere")
    return scheme


def add_handle(scheme: EmbeddingScheme, rng: random.Random | None = None) -> EmbeddingScheme:
    """Attach a handle between two vertex-disjoint faces of equal length.

    The faces are joined corner-to-corner with opposite orientations by
    new edges, replacing the two faces with a tube of quadrilaterals;
    the genus rises by exactly one.  Raises if no eligible face pair
    exists.
    """
    faces = scheme.trace_faces()
    order = list(range(len(faces)))
    if rng is not None:
        rng.shuffle(order)
    g = scheme.graph
    for ii in range(len(order)):
        for jj in range(ii + 1, len(order)):
            f1, f2 = faces[order[ii]], faces[order[jj]]
            if len(f1) != len(f2):
                continue
            if len(set(f1.walk)) != len(f1) or len(set(f2.walk)) != len(f2):
                continue
            if f1.vertex_set() & f2.vertex_set():
                continue
            m = len(f1)
            # pair corner i of f1 with corner -i of f2 (opposite direction)
            for shift in range(m):
                pairs = [
                    (f1.walk[i], f2.walk[(shift - i) % m]) for i in range(m)
                ]
                if all(not g.has_edge(u, w) for u, w in pairs):
                    return _bridge(scheme, f1, f2, pairs)
    raise GenusCertError("no disjoint equal-length face pair available for a handle")


def _bridge(scheme: EmbeddingScheme, f1, f2, pairs):
    """Insert the tube edges for add_handle; pairs run opposite ways."""
    rotation = {v: list(r) for v, r in scheme.rotation.items()}
    m = len(f1)
    partner = dict(pairs)
    rpartner = {w: u for u, w in pairs}
    # at each corner the new dart goes right after the dart toward the
    # walk predecessor, on both faces
    for t in range(m):
        u = f1.walk[t]
        prev_u = f1.walk[(t - 1) % m]
        r = rotation[u]
        r.insert(r.index(prev_u) + 1, partner[u])
    for t in range(m):
        w = f2.walk[t]
        prev_w = f2.walk[(t - 1) % m]
        r = rotation[w]
        r.insert(r.index(prev_w) + 1, rpartner[w])
    adj = {v: set(r) for v, r in rotation.items()}
    g = Graph(adj)
    signature = dict(scheme.signature)
    for u, w in pairs:
        signature[edge_key(u, w)] = 1
    out = EmbeddingScheme(g, {v: tuple(r) for v, r in rotation.items()}, signature)
    before = scheme.euler_characteristic()
    after = out.euler_characteristic()
    if after != before - 2:
        raise AssertionError(f"handle changed chi by {after - before}, expected -2")
    return out


def random_genus_instance(n: int, genus: int, seed: int) -> EmbeddingScheme:
    """A random scheme of the requested orientable genus with n vertices."""
    rng = random.Random(seed)
    scheme = random_planar_triangulation(n, rng)
    for _ in range(genus):
        scheme = add_handle(scheme, rng)
    kind = euler_genus(scheme)
    if not (kind.orientable and kind.genus == genus):
        raise AssertionError("instance generator missed the requested genus")
    return scheme
