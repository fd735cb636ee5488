"""Frozen embedding fixtures used by tests, the CLI docs, and benchmarks.

Each fixture was found by explicit search or by a deterministic geometric
construction, then validated through face tracing; the validation is
repeated in the test suite so a regression in the tracer cannot hide a
stale constant.
"""

from __future__ import annotations

import math

from .embedding import EmbeddingScheme, edge_key
from .graph import Graph


def _complete(n, offset=0):
    vs = [offset + i for i in range(1, n + 1)]
    return Graph.from_edges([(u, v) for u in vs for v in vs if u < v])


def k4_torus() -> EmbeddingScheme:
    """K4 on the torus: faces of sizes 3 and 9.

    The 9-walk equals (d, a, b, d, c, a, d, b, c) up to cyclic rotation
    with a, b, c, d = 1, 2, 3, 4, and the other face is the triangle
    (a, b, c).
    """
    rot = {1: (2, 3, 4), 2: (1, 4, 3), 3: (1, 2, 4), 4: (1, 2, 3)}
    return EmbeddingScheme(_complete(4), rot)


def k4_planar() -> EmbeddingScheme:
    rot = {1: (2, 3, 4), 2: (3, 1, 4), 3: (1, 2, 4), 4: (1, 3, 2)}
    return EmbeddingScheme(_complete(4), rot)


def k5_torus() -> EmbeddingScheme:
    """A genus-1 rotation system of K5 (one of 462, found by search)."""
    rot = {
        1: (2, 3, 4, 5),
        2: (1, 3, 4, 5),
        3: (1, 2, 5, 4),
        4: (1, 3, 2, 5),
        5: (1, 4, 2, 3),
    }
    return EmbeddingScheme(_complete(5), rot)


def k33_torus() -> EmbeddingScheme:
    """A genus-1 rotation system of K3,3 with three hexagonal faces."""
    g = Graph.from_edges([(u, v) for u in (1, 2, 3) for v in (4, 5, 6)])
    rot = {
        1: (4, 5, 6),
        2: (4, 5, 6),
        3: (4, 5, 6),
        4: (1, 2, 3),
        5: (1, 2, 3),
        6: (1, 2, 3),
    }
    return EmbeddingScheme(g, rot)


def k7_torus() -> EmbeddingScheme:
    """The classical triangular embedding of K7 on the torus.

    Vertices 1..7; the rotation at vertex i is the shift pattern
    (i+1, i+3, i+2, i+6, i+4, i+5) mod 7.
    """
    pattern = (1, 3, 2, 6, 4, 5)
    rot = {
        i + 1: tuple((i + s) % 7 + 1 for s in pattern) for i in range(7)
    }
    return EmbeddingScheme(_complete(7), rot)


def k6_projective() -> EmbeddingScheme:
    """K6 on the projective plane (demigenus 1, ten triangular faces).

    Built as the antipodal quotient of the icosahedron; frozen here after
    validation by face tracing.
    """
    rot = {
        1: (3, 2, 5, 6, 4),
        2: (3, 6, 4, 5, 1),
        3: (5, 6, 2, 1, 4),
        4: (2, 6, 1, 3, 5),
        5: (6, 3, 4, 2, 1),
        6: (4, 1, 5, 3, 2),
    }
    neg = [(1, 4), (1, 5), (2, 5), (2, 6), (3, 4), (3, 6), (4, 5), (4, 6), (5, 6)]
    sig = {edge_key(u, v): -1 for u, v in neg}
    return EmbeddingScheme(_complete(6), rot, sig)


def icosahedron() -> EmbeddingScheme:
    """The icosahedron on the sphere, rotations from golden-ratio coordinates."""
    phi = (1 + 5**0.5) / 2
    coords = []
    for a in (1, -1):
        for b in (phi, -phi):
            coords += [(0, a, b), (a, b, 0), (b, 0, a)]

    def dist2(p, q):
        return sum((x - y) ** 2 for x, y in zip(p, q))

    adj = {
        i: {j for j in range(12) if j != i and abs(dist2(coords[i], coords[j]) - 4) < 1e-9}
        for i in range(12)
    }

    def cross(u, v):
        return (
            u[1] * v[2] - u[2] * v[1],
            u[2] * v[0] - u[0] * v[2],
            u[0] * v[1] - u[1] * v[0],
        )

    def dot(u, v):
        return sum(a * b for a, b in zip(u, v))

    def norm(u):
        l = math.sqrt(dot(u, u))
        return tuple(x / l for x in u)

    rot = {}
    for i in range(12):
        n = norm(coords[i])
        ref = (1.0, 0.0, 0.0) if abs(n[0]) < 0.9 else (0.0, 1.0, 0.0)
        e1 = norm(cross(n, ref))
        e2 = cross(n, e1)
        ang = {}
        for j in adj[i]:
            d = tuple(a - b for a, b in zip(coords[j], coords[i]))
            ang[j] = math.atan2(dot(d, e2), dot(d, e1))
        rot[i + 1] = tuple(sorted((j + 1 for j in adj[i]), key=lambda j: ang[j - 1]))
    g = Graph({i + 1: {j + 1 for j in adj[i]} for i in range(12)})
    return EmbeddingScheme(g, rot)


def _grid_ids(w, h):
    def vid(i, j):
        return j * w + i + 1

    return vid


def torus_grid(w=4, h=4) -> EmbeddingScheme:
    """The w x h grid on the torus (genus 1, all quadrilateral faces)."""
    vid = _grid_ids(w, h)
    rot = {}
    for j in range(h):
        for i in range(w):
            rot[vid(i, j)] = (
                vid((i + 1) % w, j),
                vid(i, (j + 1) % h),
                vid((i - 1) % w, j),
                vid(i, (j - 1) % h),
            )
    g = Graph({v: set(r) for v, r in rot.items()})
    return EmbeddingScheme(g, rot)


def klein_grid(w=4, h=4) -> EmbeddingScheme:
    """The w x h grid on the Klein bottle (demigenus 2).

    Horizontal wrap as on the torus; the vertical wrap is twisted, with
    signature -1 on the wrap edges.
    """
    vid = _grid_ids(w, h)
    rot = {}
    sig = {}
    for j in range(h):
        for i in range(w):
            right = vid((i + 1) % w, j)
            left = vid((i - 1) % w, j)
            up = vid(i, j + 1) if j < h - 1 else vid((-i) % w, 0)
            down = vid(i, j - 1) if j > 0 else vid((-i) % w, h - 1)
            rot[vid(i, j)] = (right, up, left, down)
            if j == h - 1:
                sig[edge_key(vid(i, j), up)] = -1
    g = Graph({v: set(r) for v, r in rot.items()})
    return EmbeddingScheme(g, rot, sig)


def k5_demigenus3() -> EmbeddingScheme:
    """A signed K5 scheme with Euler characteristic -1 (demigenus 3).

    Found by seeded random search; one doubling leaves demigenus 2 or an
    orientable genus-1 scheme depending on the cycle chosen.
    """
    rot = {
        1: (2, 5, 4, 3),
        2: (1, 4, 3, 5),
        3: (1, 2, 4, 5),
        4: (1, 5, 2, 3),
        5: (1, 3, 4, 2),
    }
    neg = [(1, 4), (1, 5), (2, 4), (2, 5), (3, 4), (3, 5), (4, 5)]
    sig = {edge_key(u, v): -1 for u, v in neg}
    return EmbeddingScheme(_complete(5), rot, sig)


def two_k5_wedge() -> EmbeddingScheme:
    """Two K5 tori sharing one vertex: genus 2 with intersecting handles."""
    base = k5_torus()
    shift = 4  # second copy uses 1 -> 1, i -> i+4 for i in 2..5
    rot = {v: list(base.rotation[v]) for v in base.graph.vertices}

    def m(v):
        return 1 if v == 1 else v + shift

    for v in base.graph.vertices:
        mapped = tuple(m(w) for w in base.rotation[v])
        if v == 1:
            rot[1] = tuple(rot[1]) + mapped
        else:
            rot[m(v)] = mapped
    rot[1] = tuple(rot[1])
    adj = {}
    for v, r in rot.items():
        adj[v] = set(r)
    g = Graph(adj)
    return EmbeddingScheme(g, {v: tuple(r) for v, r in rot.items()})


def corpus():
    """The named instance corpus exercised by the acceptance suite."""
    from .generators import add_handle  # local import to avoid a cycle

    genus2 = add_handle(torus_grid(4, 4))
    return {
        "k5_torus": k5_torus(),
        "k33_torus": k33_torus(),
        "k7_torus": k7_torus(),
        "genus2_grid": genus2,
        "k6_projective": k6_projective(),
        "klein_grid": klein_grid(),
    }


def klein_attack_trace():
    """A genuine Klein-bottle unfolding presented as a torus claim.

    The Klein-bottle grid is cut along its two-sided row cycle and the
    two rims merged by a path, exactly like a torus unfolding; gluing
    the rims back would need a same-direction identification, so any
    sound checker must refuse the cycle-gluing condition.
    """
    from .embedding import normalize_orientable
    from .surgery import (
        SurgeryStep,
        UnfoldingTrace,
        _locate_path_pattern,
        duplicate_cycle,
        duplicate_path,
        find_connecting_path,
        find_face,
    )

    kg = klein_grid()
    row = [1, 2, 3, 4]
    res = duplicate_cycle(kg.graph, kg, row)
    s1 = res.scheme
    if not s1.all_positive():
        s1 = normalize_orientable(s1)
    phi1 = find_face(s1, res.created["prime"])
    phi2 = find_face(s1, res.created["double_prime"])
    sib = {}
    for _, childs in res.splitting.alpha.items():
        if len(childs) == 2:
            sib[childs[0]] = childs[1]
            sib[childs[1]] = childs[0]
    step1 = SurgeryStep(
        kind="cycle_dup",
        index=1,
        obj=tuple(row),
        splitting=res.splitting,
        prime=phi1.walk,
        double_prime=tuple(sib[v] for v in phi1.walk),
        created_walks=(phi1, phi2),
    )
    path = find_connecting_path(res.graph, phi1, phi2)
    res2 = duplicate_path(res.graph, s1, path, phi1, phi2)
    merged, prime, double, _, _ = _locate_path_pattern(
        res2.created["merged"], res2.created["side_a"], res2.created["side_b"]
    )
    step2 = SurgeryStep(
        kind="path_dup",
        index=1,
        obj=tuple(path),
        splitting=res2.splitting,
        prime=prime,
        double_prime=double,
        created_walks=(merged,),
    )
    return UnfoldingTrace(
        graphs=[kg.graph, res.graph, res2.graph],
        schemes=[kg, s1, res2.scheme],
        steps=[step1, step2],
        special=[[], [phi1, phi2], [merged]],
        special_walk=merged,
        params={"orientable": True, "k": 1, "m": 0, "k_prime": 1},
    )
