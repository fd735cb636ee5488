"""Surface surgery on embedding schemes.

Three cut operations drive the unfolding pipeline:

* cycle duplication: slice along a two-sided non-separating cycle,
  trading a handle for two disk faces (genus - 1);
* path duplication: slit between two faces along a path, merging them
  into one face (genus unchanged, faces - 1);
* cycle doubling: slice along a one-sided cycle, trading a cross-cap for
  one disk face bounded by the doubled cycle (demigenus - 1).

Each operation returns the rewritten graph and scheme together with the
vertex splitting relating the two stages, so the whole pipeline can be
replayed, certified, and inverted.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .embedding import (
    BoundaryWalk,
    EmbeddingScheme,
    edge_key,
    euler_genus,
    flip_vertex,
    normalize_orientable,
)
from .errors import (
    GlobalInconsistency,
    NoCycleFound,
    OneSidedCycle,
    PathTouchesBoundary,
    SameFace,
    SeparatingCycle,
    Stuck,
    TwoSidedCycle,
)
from .graph import Graph, spanning_tree


@dataclass(frozen=True)
class Splitting:
    """Vertex/edge correspondence between consecutive pipeline stages.

    ``alpha`` maps each parent vertex to the tuple of its child copies
    (a 1-tuple when the vertex is untouched).  ``beta`` maps each parent
    edge key to the frozenset of child edge keys it becomes; for every
    edge that set is a non-empty matching between the two childs sets.
    """

    alpha: dict
    beta: dict

    def degree(self):
        return max(len(c) for c in self.alpha.values())

    def parent_of(self):
        out = {}
        for p, children in self.alpha.items():
            for c in children:
                out[c] = p
        return out

    def split_vertices(self):
        return {p for p, c in self.alpha.items() if len(c) > 1}

    def validate(self, parent_graph: Graph, child_graph: Graph):
        children = [c for cs in self.alpha.values() for c in cs]
        if len(children) != len(set(children)) or set(children) != set(child_graph.vertices):
            raise ValueError("alpha does not partition the child vertex set")
        if set(self.alpha) != set(parent_graph.vertices):
            raise ValueError("alpha domain mismatch")
        covered = set()
        parent = self.parent_of()
        for e, childs in self.beta.items():
            u, v = tuple(e)
            if not parent_graph.has_edge(u, v):
                raise ValueError(f"beta key {set(e)} is not a parent edge")
            if not childs:
                raise ValueError(f"beta({set(e)}) is empty")
            ends_u, ends_v = set(), set()
            for ce in childs:
                a, b = tuple(ce)
                if not child_graph.has_edge(a, b):
                    raise ValueError(f"beta value {set(ce)} is not a child edge")
                pa, pb = parent[a], parent[b]
                if {pa, pb} != {u, v}:
                    raise ValueError(f"beta({set(e)}) contains a foreign edge {set(ce)}")
                ua = a if pa == u else b
                va = b if pa == u else a
                if ua in ends_u or va in ends_v:
                    raise ValueError(f"beta({set(e)}) is not a matching")
                ends_u.add(ua)
                ends_v.add(va)
            covered.update(childs)
        all_child_edges = set(child_graph.edges())
        if covered != all_child_edges:
            raise ValueError("beta does not cover the child edge set exactly")
        if set(self.beta) != set(parent_graph.edges()):
            raise ValueError("beta domain mismatch")


def recover_states(scheme: EmbeddingScheme, walk: BoundaryWalk):
    """Per-dart side flags of a traced face walk (either direction)."""
    u, v = walk.darts[0]
    for side in (1, -1):
        face, states = scheme.trace_face_from(u, v, side)
        if face.darts == walk.darts:
            return states
    raise ValueError("walk is not a face of the scheme")


def _split_arcs(rotation, out, inn):
    """Split a cyclic rotation at the darts toward ``out`` and ``inn``.

    Returns (arc_a, arc_b): arc_a lists neighbors strictly between the
    out-dart and the in-dart following rotation order, arc_b the rest.
    """
    r = list(rotation)
    i_out = r.index(out)
    rolled = r[i_out:] + r[:i_out]
    i_in = rolled.index(inn)
    arc_a = tuple(rolled[1:i_in])
    arc_b = tuple(rolled[i_in + 1 :])
    return arc_a, arc_b


@dataclass
class SurgeryResult:
    graph: Graph
    scheme: EmbeddingScheme
    splitting: Splitting
    # faces created by this step, as traced walks of the new scheme
    created: dict
    # (vertex, after-neighbor) -> copy owning that rotation gap
    gap_owner: dict
    kind: str = ""


def _gap_keys_of_walk(scheme: EmbeddingScheme, walk: BoundaryWalk):
    """Ordered gap key (vertex, after-neighbor) for each walk occurrence."""
    states = recover_states(scheme, walk)
    keys = []
    n = len(states)
    for t in range(n):
        pu, pv, _ = states[t - 1]
        u, v, _ = states[t]
        # the face enters u along (pu -> u) and leaves along (u -> v);
        # the corner sits after the earlier dart in rotation order
        side_in = states[t - 1][2] * scheme.sig(pu, pv)
        if side_in == 1:
            keys.append((u, pu))
        else:
            keys.append((u, v))
    return keys


def map_walk(old_scheme: EmbeddingScheme, result: SurgeryResult, walk: BoundaryWalk):
    """Image of a face walk under a surgery step, re-validated by tracing."""
    keys = _gap_keys_of_walk(old_scheme, walk)
    new_vertices = []
    for (v, after) in keys:
        owner = result.gap_owner.get((v, after), v)
        if owner is None:
            raise ValueError(f"gap ({v}, {after}) was destroyed by the surgery")
        new_vertices.append(owner)
    n = len(new_vertices)
    darts = tuple((new_vertices[t], new_vertices[(t + 1) % n]) for t in range(n))
    for a, b in darts:
        if not result.graph.has_edge(a, b):
            raise ValueError(f"mapped walk uses a non-edge {a}-{b}")
    mapped = BoundaryWalk(tuple(new_vertices), darts)
    face = find_face(result.scheme, mapped)
    if face is None:
        raise ValueError("mapped walk is not a face of the new scheme")
    return face


def find_face(scheme: EmbeddingScheme, walk: BoundaryWalk):
    """The traced face equal to ``walk`` up to rotation (either direction).

    Returns the canonical BoundaryWalk rotated so that it starts at the
    same occurrence as ``walk``, or None.
    """
    for face in scheme.trace_faces():
        aligned = _align(face, walk)
        if aligned is not None:
            return aligned
    return None


def _align(face: BoundaryWalk, walk: BoundaryWalk):
    n = len(face.darts)
    if n != len(walk.darts):
        return None
    for direction in (face, face.reversed_walk()):
        for shift in range(n):
            rotated = direction.darts[shift:] + direction.darts[:shift]
            if rotated == walk.darts:
                return BoundaryWalk(tuple(d[0] for d in rotated), rotated)
    return None


class _TokenAllocator:
    def __init__(self, start):
        self._next = start

    def take(self):
        tok = self._next
        self._next += 1
        return tok


def _fresh_tokens(graph: Graph):
    numeric = [v for v in graph.vertices if isinstance(v, int)]
    return _TokenAllocator(max(numeric, default=0) + 1)


def cycle_signature(scheme: EmbeddingScheme, cycle):
    prod = 1
    for i in range(len(cycle)):
        prod *= scheme.sig(cycle[i], cycle[(i + 1) % len(cycle)])
    return prod


def _check_simple_cycle(graph: Graph, cycle):
    if len(cycle) < 3:
        raise ValueError("cycle must have length >= 3")
    if len(set(cycle)) != len(cycle):
        raise ValueError("cycle is not simple")
    for i in range(len(cycle)):
        if not graph.has_edge(cycle[i], cycle[(i + 1) % len(cycle)]):
            raise ValueError(f"cycle uses a non-edge {cycle[i]}-{cycle[(i + 1) % len(cycle)]}")


def duplicate_cycle(graph: Graph, scheme: EmbeddingScheme, cycle, alloc=None) -> SurgeryResult:
    """Slice along a two-sided non-separating cycle.

    Every cycle vertex v_i becomes a left copy (on the side of the arc
    following the outgoing cycle dart) and a right copy; the two new
    faces are bounded by the left cycle traversed forward and the right
    cycle traversed backward.  Genus drops by exactly one.
    """
    _check_simple_cycle(graph, cycle)
    if cycle_signature(scheme, cycle) != 1:
        raise OneSidedCycle(f"cycle {cycle} has signature product -1")
    # re-sign so every cycle edge carries +1; side signatures may remain
    work = scheme
    for i in range(1, len(cycle)):
        if work.sig(cycle[i - 1], cycle[i]) == -1:
            work = flip_vertex(work, cycle[i])
    assert all(
        work.sig(cycle[i], cycle[(i + 1) % len(cycle)]) == 1 for i in range(len(cycle))
    )
    scheme = work
    alloc = alloc or _fresh_tokens(graph)
    r = len(cycle)
    pos = {v: i for i, v in enumerate(cycle)}
    left = {v: alloc.take() for v in cycle}
    right = {v: alloc.take() for v in cycle}

    arcs = {}
    for i, v in enumerate(cycle):
        out, inn = cycle[(i + 1) % r], cycle[(i - 1) % r]
        arcs[v] = _split_arcs(scheme.rotation[v], out, inn)

    def end_copy(v, w):
        """Copy of cycle vertex v owning its dart toward w (non-cycle dart)."""
        arc_a, _ = arcs[v]
        return left[v] if w in arc_a else right[v]

    def image(v, w):
        """New endpoint label of the dart (v -> w)."""
        if v in pos:
            return end_copy(v, w)
        return v

    rotation = {}
    adj = {}
    gap_owner = {}
    for v in graph.vertices:
        if v in pos:
            continue
        new_order = []
        for w in scheme.rotation[v]:
            if w in pos:
                new_order.append(end_copy(w, v))
            else:
                new_order.append(w)
        rotation[v] = tuple(new_order)
        adj[v] = set(new_order)
    for i, v in enumerate(cycle):
        out, inn = cycle[(i + 1) % r], cycle[(i - 1) % r]
        arc_a, arc_b = arcs[v]

        def m(w):
            return image(w, v)

        l_order = (left[cycle[(i + 1) % r]],) + tuple(m(w) for w in arc_a) + (
            left[cycle[(i - 1) % r]],
        )
        r_order = (right[cycle[(i - 1) % r]],) + tuple(m(w) for w in arc_b) + (
            right[cycle[(i + 1) % r]],
        )
        rotation[left[v]] = l_order
        rotation[right[v]] = r_order
        adj[left[v]] = set(l_order)
        adj[right[v]] = set(r_order)
        for w in (out,) + arc_a:
            gap_owner[(v, w)] = left[v]
        for w in (inn,) + arc_b:
            gap_owner[(v, w)] = right[v]

    new_graph = Graph(adj)
    if not new_graph.is_connected():
        raise SeparatingCycle(f"cutting along {cycle} disconnects the graph")
    signature = {}
    for e in graph.edges():
        u, w = tuple(e)
        if u in pos and w in pos and (pos[w] - pos[u]) % r in (1, r - 1):
            continue
        signature[edge_key(image(u, w), image(w, u))] = scheme.sig(u, w)
    for i in range(r):
        signature[edge_key(left[cycle[i]], left[cycle[(i + 1) % r]])] = 1
        signature[edge_key(right[cycle[i]], right[cycle[(i + 1) % r]])] = 1
    new_scheme = EmbeddingScheme(new_graph, rotation, signature)

    alpha = {v: (v,) for v in graph.vertices if v not in pos}
    alpha.update({v: (left[v], right[v]) for v in cycle})
    beta = {}
    for e in graph.edges():
        u, w = tuple(e)
        if u in pos and w in pos and (pos[w] - pos[u]) % r in (1, r - 1):
            a, b = (u, w) if (pos[w] - pos[u]) % r == 1 else (w, u)
            beta[e] = frozenset(
                {edge_key(left[a], left[b]), edge_key(right[a], right[b])}
            )
        else:
            beta[e] = frozenset({edge_key(image(u, w), image(w, u))})
    splitting = Splitting(alpha, beta)
    splitting.validate(graph, new_graph)

    left_cycle = tuple(left[v] for v in cycle)
    right_back = (right[cycle[0]],) + tuple(right[v] for v in reversed(cycle[1:]))
    face_left = find_face(new_scheme, _walk_of(left_cycle))
    face_right = find_face(new_scheme, _walk_of(right_back))
    if face_left is None or face_right is None:
        raise AssertionError("duplication did not create the expected disk faces")
    return SurgeryResult(
        graph=new_graph,
        scheme=new_scheme,
        splitting=splitting,
        created={"prime": face_left, "double_prime": face_right},
        gap_owner=gap_owner,
        kind="cycle_dup",
    )


def _walk_of(vertices):
    vs = tuple(vertices)
    darts = tuple((vs[i], vs[(i + 1) % len(vs)]) for i in range(len(vs)))
    return BoundaryWalk(vs, darts)


def _corner_after(scheme, walk, occurrence_index):
    """At walk position t, the dart the face corner follows in rotation."""
    keys = _gap_keys_of_walk(scheme, walk)
    return keys[occurrence_index]


def duplicate_path(
    graph: Graph,
    scheme: EmbeddingScheme,
    path,
    face_chi: BoundaryWalk,
    face_psi: BoundaryWalk,
    alloc=None,
) -> SurgeryResult:
    """Slit from the interior of one face to the interior of another.

    The slit enters through a corner of ``face_chi`` at path[0], runs
    along the path, and exits through a corner of ``face_psi`` at
    path[-1]; the two faces merge into one whose boundary walk contains
    both path copies, one per direction.
    """
    path = list(path)
    if len(set(path)) != len(path):
        raise ValueError("path is not simple")
    for a, b in zip(path, path[1:]):
        if not graph.has_edge(a, b):
            raise ValueError(f"path uses a non-edge {a}-{b}")
    if not scheme.all_positive():
        raise ValueError("path duplication expects the canonical all-positive form")
    chi = find_face(scheme, face_chi)
    psi = find_face(scheme, face_psi)
    if chi is None or psi is None:
        raise ValueError("face walks are not faces of the scheme")
    if set(chi.darts) == set(psi.darts):
        raise SameFace("path duplication needs two distinct faces")
    s = len(path) - 1
    chi_set, psi_set = chi.vertex_set(), psi.vertex_set()
    if path[0] not in chi_set or path[-1] not in psi_set:
        raise ValueError("path endpoints must lie on the two face boundaries")
    for w in path[1:-1]:
        if w in chi_set or w in psi_set:
            raise PathTouchesBoundary(f"interior vertex {w} lies on a face boundary")

    alloc = alloc or _fresh_tokens(graph)
    on_path = {v: i for i, v in enumerate(path)}
    copy_a = {v: alloc.take() for v in path}
    copy_b = {v: alloc.take() for v in path}

    # slit corners: first occurrence of each endpoint on its face walk
    t_chi = chi.walk.index(path[0])
    t_psi = psi.walk.index(path[-1])
    chi_keys = _gap_keys_of_walk(scheme, chi)
    psi_keys = _gap_keys_of_walk(scheme, psi)
    _, chi_after = chi_keys[t_chi]
    _, psi_after = psi_keys[t_psi]
    # corner after dart ->chi_after at path[0]; the walk leaves toward:
    chi_b = scheme.rotation_successor(path[0], chi_after)
    psi_b = scheme.rotation_successor(path[-1], psi_after)

    arcs = {}
    vanished = set()
    if s == 0:
        w = path[0]
        rot = scheme.rotation[w]
        if (w, chi_after) == (w, psi_after):
            raise SameFace("the two slit corners coincide")
        # elements strictly after ->chi_after up to and including
        # ->psi_after form side A; the rest side B
        r = list(rot)
        i0 = r.index(chi_after)
        rolled = r[i0 + 1 :] + r[: i0 + 1]
        i1 = rolled.index(psi_after)
        side_a = tuple(rolled[: i1 + 1])
        side_b = tuple(rolled[i1 + 1 :])
        arcs[w] = (side_a, side_b)
        vanished.update({(w, chi_after), (w, psi_after)})
    else:
        for j, w in enumerate(path):
            rot = scheme.rotation[w]
            if j == 0:
                out = path[1]
                if chi_after == out or chi_b == out:
                    raise PathTouchesBoundary(
                        "path leaves through the slit corner itself"
                    )
                r = list(rot)
                i0 = r.index(out)
                rolled = r[i0 + 1 :] + r[: i0 + 1]
                i1 = rolled.index(chi_after)
                arc_a = tuple(rolled[: i1 + 1])  # succ(out) .. ->chi_after
                arc_b = tuple(rolled[i1 + 1 : -1])  # chi_b .. pred(out)
                arcs[w] = (arc_a, arc_b)
                vanished.add((w, chi_after))
            elif j == s:
                inn = path[s - 1]
                if psi_after == inn or psi_b == inn:
                    raise PathTouchesBoundary(
                        "path arrives through the slit corner itself"
                    )
                r = list(rot)
                i0 = r.index(inn)
                rolled = r[i0 + 1 :] + r[: i0 + 1]
                i1 = rolled.index(psi_after)
                arc_b = tuple(rolled[: i1 + 1])  # succ(in) .. ->psi_after
                arc_a = tuple(rolled[i1 + 1 : -1])  # psi_b .. pred(in)
                arcs[w] = (arc_a, arc_b)
                vanished.add((w, psi_after))
            else:
                arcs[w] = _split_arcs(rot, path[j + 1], path[j - 1])

    def end_copy(v, w):
        arc_a, _ = arcs[v]
        return copy_a[v] if w in arc_a else copy_b[v]

    def image(v, w):
        return end_copy(v, w) if v in on_path else v

    rotation = {}
    adj = {}
    gap_owner = {}
    for v in graph.vertices:
        if v in on_path:
            continue
        order = tuple(end_copy(w, v) if w in on_path else w for w in scheme.rotation[v])
        rotation[v] = order
        adj[v] = set(order)

    for j, w in enumerate(path):
        arc_a, arc_b = arcs[w]

        def m(x):
            return image(x, w)

        if s == 0:
            a_order = tuple(m(x) for x in arc_a)
            b_order = tuple(m(x) for x in arc_b)
        elif j == 0:
            a_order = (copy_a[path[1]],) + tuple(m(x) for x in arc_a)
            b_order = tuple(m(x) for x in arc_b) + (copy_b[path[1]],)
        elif j == s:
            a_order = tuple(m(x) for x in arc_a) + (copy_a[path[s - 1]],)
            b_order = (copy_b[path[s - 1]],) + tuple(m(x) for x in arc_b)
        else:
            a_order = (
                (copy_a[path[j + 1]],)
                + tuple(m(x) for x in arc_a)
                + (copy_a[path[j - 1]],)
            )
            b_order = (
                (copy_b[path[j - 1]],)
                + tuple(m(x) for x in arc_b)
                + (copy_b[path[j + 1]],)
            )
        rotation[copy_a[w]] = a_order
        rotation[copy_b[w]] = b_order
        adj[copy_a[w]] = set(a_order)
        adj[copy_b[w]] = set(b_order)
        for x in arc_a:
            gap_owner[(w, x)] = copy_a[w]
        for x in arc_b:
            gap_owner[(w, x)] = copy_b[w]
        if s > 0:
            if j < s:
                gap_owner[(w, path[j + 1])] = copy_a[w]
            if j > 0:
                gap_owner[(w, path[j - 1])] = copy_b[w]
        for key in vanished:
            gap_owner[key] = None

    new_graph = Graph(adj)
    new_scheme = EmbeddingScheme(new_graph, rotation)

    alpha = {v: (v,) for v in graph.vertices if v not in on_path}
    alpha.update({v: (copy_a[v], copy_b[v]) for v in path})
    beta = {}
    for e in graph.edges():
        u, w = tuple(e)
        if (
            u in on_path
            and w in on_path
            and abs(on_path[u] - on_path[w]) == 1
        ):
            beta[e] = frozenset(
                {edge_key(copy_a[u], copy_a[w]), edge_key(copy_b[u], copy_b[w])}
            )
        else:
            beta[e] = frozenset({edge_key(image(u, w), image(w, u))})
    splitting = Splitting(alpha, beta)
    splitting.validate(graph, new_graph)

    # the merged face leaves the w_0 copy that owns the chi-side exit dart
    chi_b_img = chi_b if chi_b not in on_path else end_copy(chi_b, path[0])
    if s == 0:
        probe = (copy_a[path[0]], chi_b_img)
    else:
        probe = (copy_b[path[0]], chi_b_img)
    merged = None
    for face in new_scheme.trace_faces():
        if probe in face.darts:
            merged = face
            break
    if merged is None:
        raise AssertionError("merged face not found after path duplication")
    expected = len(chi) + len(psi) + 2 * (s + 1) - 2
    if len(merged) != expected:
        raise AssertionError(
            f"merged face has length {len(merged)}, expected {expected}"
        )
    return SurgeryResult(
        graph=new_graph,
        scheme=new_scheme,
        splitting=splitting,
        created={
            "merged": merged,
            "side_a": tuple(copy_a[v] for v in path),
            "side_b": tuple(copy_b[v] for v in path),
        },
        gap_owner={k: v for k, v in gap_owner.items()},
        kind="path_dup",
    )


def double_cycle(graph: Graph, scheme: EmbeddingScheme, cycle, alloc=None) -> SurgeryResult:
    """Slice along a one-sided cycle, removing a cross-cap.

    Each cycle vertex v_i splits into a first-round and a second-round
    copy; the doubled cycle of length 2p bounds one new face.  The
    Euler characteristic rises by exactly one.
    """
    _check_simple_cycle(graph, cycle)
    if cycle_signature(scheme, cycle) != -1:
        raise TwoSidedCycle(f"cycle {cycle} has signature product +1")
    alloc = alloc or _fresh_tokens(graph)
    p = len(cycle)

    # re-sign so every cycle edge is +1 except the seam (last -> first)
    work = scheme
    for i in range(1, p):
        if work.sig(cycle[i - 1], cycle[i]) == -1:
            work = flip_vertex(work, cycle[i])
    assert all(work.sig(cycle[i - 1], cycle[i]) == 1 for i in range(1, p))
    assert work.sig(cycle[-1], cycle[0]) == -1

    pos = {v: i for i, v in enumerate(cycle)}
    first = {v: alloc.take() for v in cycle}
    second = {v: alloc.take() for v in cycle}
    arcs = {}
    for i, v in enumerate(cycle):
        out, inn = cycle[(i + 1) % p], cycle[(i - 1) % p]
        arcs[v] = _split_arcs(work.rotation[v], out, inn)

    def end_copy(v, w):
        arc_a, _ = arcs[v]
        return first[v] if w in arc_a else second[v]

    def image(v, w):
        return end_copy(v, w) if v in pos else v

    def ring(i):
        """Vertex at position i (mod 2p) of the doubled cycle."""
        i %= 2 * p
        return first[cycle[i]] if i < p else second[cycle[i - p]]

    rotation = {}
    adj = {}
    signature = {}
    gap_owner = {}
    for v in graph.vertices:
        if v in pos:
            continue
        order = tuple(end_copy(w, v) if w in pos else w for w in work.rotation[v])
        rotation[v] = order
        adj[v] = set(order)
    for i, v in enumerate(cycle):
        out, inn = cycle[(i + 1) % p], cycle[(i - 1) % p]
        arc_a, arc_b = arcs[v]
        f_order = (
            (ring(i + 1),)
            + tuple(image(w, v) for w in arc_a)
            + (ring(i - 1),)
        )
        s_order = (
            (ring(p + i + 1),)
            + tuple(image(w, v) for w in reversed(arc_b))
            + (ring(p + i - 1),)
        )
        rotation[first[v]] = f_order
        rotation[second[v]] = s_order
        adj[first[v]] = set(f_order)
        adj[second[v]] = set(s_order)
        for w in (out,) + arc_a:
            gap_owner[(v, w)] = first[v]
        for w in (inn,) + arc_b:
            gap_owner[(v, w)] = second[v]
    # signatures: second-round copies are locally flipped, so every edge
    # picks up one negation per second-round endpoint it gained
    for e in graph.edges():
        u, w = tuple(e)
        if u in pos and w in pos and (pos[w] - pos[u]) % p in (1, p - 1):
            continue  # cycle edges handled below
        a, b = image(u, w), image(w, u)
        sgn = work.sig(u, w)
        if u in pos and a == second[u]:
            sgn = -sgn
        if w in pos and b == second[w]:
            sgn = -sgn
        signature[edge_key(a, b)] = sgn
    for i in range(2 * p):
        signature[edge_key(ring(i), ring(i + 1))] = 1

    new_graph = Graph(adj)
    new_scheme = EmbeddingScheme(new_graph, rotation, signature)

    alpha = {v: (v,) for v in graph.vertices if v not in pos}
    alpha.update({v: (first[v], second[v]) for v in cycle})
    beta = {}
    for e in graph.edges():
        u, w = tuple(e)
        if u in pos and w in pos and (pos[w] - pos[u]) % p in (1, p - 1):
            a, b = (u, w) if (pos[w] - pos[u]) % p == 1 else (w, u)
            i = pos[a]
            beta[e] = frozenset(
                {edge_key(ring(i), ring(i + 1)), edge_key(ring(p + i), ring(p + i + 1))}
            )
        else:
            beta[e] = frozenset({edge_key(image(u, w), image(w, u))})
    splitting = Splitting(alpha, beta)
    splitting.validate(graph, new_graph)

    doubled = tuple(ring(i) for i in range(2 * p))
    face = find_face(new_scheme, _walk_of(doubled))
    if face is None:
        raise AssertionError("doubling did not create the expected 2p-gon face")
    if new_scheme.euler_characteristic() != scheme.euler_characteristic() + 1:
        raise AssertionError("doubling did not raise the Euler characteristic by 1")
    return SurgeryResult(
        graph=new_graph,
        scheme=new_scheme,
        splitting=splitting,
        created={"doubled": face, "ring": doubled},
        gap_owner=gap_owner,
        kind="cycle_double",
    )


# -- canonical search ------------------------------------------------------


def _canonical_cycle(vertices):
    """Rotate/reflect a vertex cycle into its canonical representation."""
    vs = list(vertices)
    k = min(range(len(vs)), key=lambda i: repr(vs[i]))
    vs = vs[k:] + vs[:k]
    back = [vs[0]] + vs[1:][::-1]
    return tuple(min(vs, back, key=lambda seq: [repr(x) for x in seq]))


def _facial_edge_sets(scheme):
    out = set()
    for f in scheme.trace_faces():
        es = frozenset(
            edge_key(f.walk[i], f.walk[(i + 1) % len(f)]) for i in range(len(f))
        )
        out.add(es)
    return out


def simple_cycles_of_length(graph: Graph, length: int, limit: int = 100000):
    """All simple cycles of one exact length, canonically ordered."""
    found = set()
    order = sorted(graph.vertices, key=repr)
    rank = {v: i for i, v in enumerate(order)}
    for start in order:
        stack = [(start, (start,), {start})]
        while stack:
            v, path, on = stack.pop()
            for w in sorted(graph.neighbors(v), key=repr):
                if rank[w] < rank[start]:
                    continue
                if w == start and len(path) == length:
                    found.add(_canonical_cycle(path))
                    if len(found) >= limit:
                        stack.clear()
                        break
                elif w not in on and len(path) < length:
                    stack.append((w, path + (w,), on | {w}))
    return sorted(found, key=lambda c: [repr(x) for x in c])


def candidate_cycles(graph: Graph, max_len: int):
    """Candidate cycles, shortest first, then BFS fundamental cycles."""
    for length in range(3, min(max_len, len(graph)) + 1):
        yield from simple_cycles_of_length(graph, length)
        if length >= 4:
            # short cycles suffice for every pipeline input family; the
            # fundamental cycles below complete the search
            break
    yield from fundamental_cycles(graph)
    for length in range(5, min(max_len, len(graph)) + 1):
        yield from simple_cycles_of_length(graph, length)


def fundamental_cycles(graph: Graph):
    """Cycles of the BFS tree rooted at the lowest vertex, one per co-tree edge."""
    root = min(graph.vertices, key=repr)
    parent, dist = spanning_tree(graph, root)
    cycles = []
    for e in sorted(graph.edges(), key=lambda e: sorted(map(repr, e))):
        u, v = sorted(e, key=repr)
        if parent.get(u) == v or parent.get(v) == u:
            continue
        pu, pv = [u], [v]
        a, b = u, v
        while dist[a] > dist[b]:
            a = parent[a]
            pu.append(a)
        while dist[b] > dist[a]:
            b = parent[b]
            pv.append(b)
        while a != b:
            a, b = parent[a], parent[b]
            pu.append(a)
            pv.append(b)
        cycle = pu + pv[:-1][::-1]
        if len(cycle) >= 3:
            cycles.append(tuple(cycle))
    cycles.sort(key=lambda c: (len(c), [repr(x) for x in c]))
    return cycles


def find_non_separating_cycle(
    graph: Graph, scheme: EmbeddingScheme, want_one_sided: bool, max_len: int = 12
):
    """A cycle whose surgery is valid, found by trying candidates.

    Candidates are enumerated shortest-first (then canonically), facial
    cycles are skipped, and each survivor is validated by actually
    performing the surgery.  Falls back to the fundamental cycles of a
    BFS tree before giving up.
    """
    facial = _facial_edge_sets(scheme)
    tried = set()
    for cand in candidate_cycles(graph, max_len):
        key = _canonical_cycle(cand)
        if key in tried:
            continue
        tried.add(key)
        cyc = list(key)
        sig = cycle_signature(scheme, cyc)
        if want_one_sided:
            if sig != -1:
                continue
            return cyc  # one-sided cycles are never separating
        if sig != 1:
            continue
        es = frozenset(
            edge_key(cyc[i], cyc[(i + 1) % len(cyc)]) for i in range(len(cyc))
        )
        if es in facial:
            continue
        try:
            duplicate_cycle(graph, scheme, cyc)
        except (SeparatingCycle, OneSidedCycle):
            continue
        return cyc
    raise NoCycleFound(
        "no one-sided cycle found" if want_one_sided else "every candidate cycle separates"
    )


def find_connecting_path(graph: Graph, chi: BoundaryWalk, psi: BoundaryWalk):
    """Shortest path from chi's boundary to psi's, interior avoiding both.

    Ties break toward lexicographically smaller vertex labels.  A shared
    boundary vertex yields the single-vertex path.
    """
    chi_set, psi_set = chi.vertex_set(), psi.vertex_set()
    shared = sorted(chi_set & psi_set, key=repr)
    if shared:
        return [shared[0]]
    from collections import deque

    forbidden = chi_set | psi_set
    start = sorted(chi_set, key=repr)
    parent = {v: None for v in start}
    queue = deque(start)
    while queue:
        v = queue.popleft()
        if v in psi_set:
            path = []
            while v is not None:
                path.append(v)
                v = parent[v]
            return path[::-1]
        for w in sorted(graph.neighbors(v), key=repr):
            if w in parent:
                continue
            if w in forbidden and w not in psi_set:
                continue
            if w in chi_set:
                continue
            parent[w] = v
            queue.append(w)
    raise Stuck("no connecting path between the two faces")


# -- the pipeline ----------------------------------------------------------


@dataclass
class SurgeryStep:
    kind: str  # "cycle_dup" | "path_dup" | "cycle_double"
    index: int  # 1-based within its kind
    obj: tuple  # cycle or path in the pre-step graph
    splitting: Splitting
    prime: tuple  # copies in reference order (see each op)
    double_prime: tuple  # aligned sibling copies (empty for doubling)
    created_walks: tuple  # directed walk(s) created by the step


@dataclass
class UnfoldingTrace:
    graphs: list
    schemes: list
    steps: list
    special: list  # per stage, the tracked special-face walks in creation order
    special_walk: BoundaryWalk | None
    params: dict

    @property
    def final_graph(self):
        return self.graphs[-1]

    @property
    def final_scheme(self):
        return self.schemes[-1]


def _locate_path_pattern(merged: BoundaryWalk, side_a, side_b):
    """Rotate the merged walk into (prime-run, psi-part, reversed run, chi-part).

    Returns (rotated walk, prime side tuple, double side tuple,
    psi_part, chi_part); the prime side is the one traversed first in
    path order.
    """
    n = len(merged)
    s = len(side_a) - 1
    walk = merged.walk
    for prime, double in ((side_a, side_b), (side_b, side_a)):
        for r in range(n):
            rot = tuple(walk[(r + i) % n] for i in range(n))
            if rot[: s + 1] != tuple(prime):
                continue
            # find the reversed double-prime run after some psi-part
            target = tuple(reversed(double))
            for q in range(s + 1, n - s):
                if rot[q : q + s + 1] == target:
                    psi_part = rot[s + 1 : q]
                    chi_part = rot[q + s + 1 :]
                    if any(x in prime or x in double for x in psi_part + chi_part):
                        interior = set(prime[1:-1]) | set(double[1:-1])
                        if any(x in interior for x in psi_part + chi_part):
                            continue
                    darts = tuple(
                        (rot[i], rot[(i + 1) % n]) for i in range(n)
                    )
                    return (
                        BoundaryWalk(rot, darts),
                        tuple(prime),
                        tuple(double),
                        psi_part,
                        chi_part,
                    )
    raise AssertionError("merged walk does not show the expected slit pattern")


def unfold(graph: Graph, scheme: EmbeddingScheme) -> UnfoldingTrace:
    """Flatten a scheme to the sphere by doublings and duplications.

    Orientable genus k: k cycle duplications then 2k - 1 path
    duplications.  Demigenus k: doublings until orientable (m of them),
    then k' = (k - m) / 2 cycle duplications and k - 1 path
    duplications.  Returns the full stage-by-stage trace.
    """
    kind = euler_genus(scheme)
    alloc = _fresh_tokens(graph)
    graphs = [graph]
    schemes_raw = [scheme]
    steps = []
    tracked = []  # special-face walks of the current stage, creation order
    special = [[]]
    m_doublings = 0

    cur_g, cur_s = graph, scheme

    # doubling phase (non-orientable inputs)
    while not cur_s.is_orientable():
        cyc = find_non_separating_cycle(cur_g, cur_s, want_one_sided=True)
        res = double_cycle(cur_g, cur_s, cyc, alloc=alloc)
        tracked = [map_walk(cur_s, res, w) for w in tracked]
        tracked.append(res.created["doubled"])
        m_doublings += 1
        steps.append(
            SurgeryStep(
                kind="cycle_double",
                index=m_doublings,
                obj=tuple(cyc),
                splitting=res.splitting,
                prime=res.created["ring"],
                double_prime=(),
                created_walks=(res.created["doubled"],),
            )
        )
        cur_g, cur_s = res.graph, res.scheme
        graphs.append(cur_g)
        schemes_raw.append(cur_s)
        special.append(list(tracked))

    if not cur_s.all_positive():
        cur_s = normalize_orientable(cur_s)
        tracked = [find_face(cur_s, w) for w in tracked]
        schemes_raw[-1] = cur_s
        special[-1] = list(tracked)

    # face-duplication phase
    n_cycles = 0
    while euler_genus(cur_s).genus > 0:
        cyc = find_non_separating_cycle(cur_g, cur_s, want_one_sided=False)
        res = duplicate_cycle(cur_g, cur_s, cyc, alloc=alloc)
        tracked = [map_walk(cur_s, res, w) for w in tracked]
        tracked += [res.created["prime"], res.created["double_prime"]]
        n_cycles += 1
        prime_walk = res.created["prime"]
        double_walk = res.created["double_prime"]
        # align: double_prime[j] is the sibling of prime[j]
        sib = {}
        for parent, childs in res.splitting.alpha.items():
            if len(childs) == 2:
                sib[childs[0]] = childs[1]
                sib[childs[1]] = childs[0]
        prime_order = prime_walk.walk
        double_order = tuple(sib[v] for v in prime_order)
        steps.append(
            SurgeryStep(
                kind="cycle_dup",
                index=n_cycles,
                obj=tuple(cyc),
                splitting=res.splitting,
                prime=prime_order,
                double_prime=double_order,
                created_walks=(prime_walk, double_walk),
            )
        )
        cur_g, cur_s = res.graph, res.scheme
        graphs.append(cur_g)
        schemes_raw.append(cur_s)
        special.append(list(tracked))

    # face-reduction phase
    n_paths = 0
    while len(tracked) > 1:
        chi, psi = tracked[0], tracked[1]
        path = find_connecting_path(cur_g, chi, psi)
        res = duplicate_path(cur_g, cur_s, path, chi, psi, alloc=alloc)
        rest = [map_walk(cur_s, res, w) for w in tracked[2:]]
        merged, prime, double, _, _ = _locate_path_pattern(
            res.created["merged"], res.created["side_a"], res.created["side_b"]
        )
        tracked = [merged] + rest
        n_paths += 1
        steps.append(
            SurgeryStep(
                kind="path_dup",
                index=n_paths,
                obj=tuple(path),
                splitting=res.splitting,
                prime=prime,
                double_prime=double,
                created_walks=(merged,),
            )
        )
        cur_g, cur_s = res.graph, res.scheme
        graphs.append(cur_g)
        schemes_raw.append(cur_s)
        special.append(list(tracked))

    final_kind = euler_genus(cur_s)
    if final_kind.genus != 0 or not final_kind.orientable:
        raise Stuck("pipeline did not reach the sphere")
    if kind.orientable:
        expect = 3 * kind.genus - 1 if kind.genus else 0
        params = {"orientable": True, "k": kind.genus, "m": 0, "k_prime": kind.genus}
    else:
        k = kind.genus
        kp = (k - m_doublings) // 2
        expect = m_doublings + kp + k - 1
        params = {"orientable": False, "k": k, "m": m_doublings, "k_prime": kp}
    if len(steps) != expect:
        raise Stuck(f"pipeline took {len(steps)} steps, expected {expect}")
    return UnfoldingTrace(
        graphs=graphs,
        schemes=schemes_raw,
        steps=steps,
        special=special,
        special_walk=tracked[0] if tracked else None,
        params=params,
    )


# -- refold: the certified inverse ------------------------------------------


def _linearize_at_gap(scheme: EmbeddingScheme, walk: BoundaryWalk, occurrence: int):
    """Rotation of the vertex at ``occurrence``, cut at that face corner.

    Returns the rotation as a linear list starting just after the gap
    the face passes through at this occurrence.
    """
    v, after = _gap_keys_of_walk(scheme, walk)[occurrence]
    rot = list(scheme.rotation[v])
    i = rot.index(after)
    return v, rot[i + 1 :] + rot[: i + 1]


def _merge_pairs(
    scheme: EmbeddingScheme,
    pair_corners,
    parent_label,
    edge_merge,
    second_flipped=False,
    sign_overrides=None,
):
    """Glue copy pairs back into their parents by splicing rotations.

    ``pair_corners`` maps each parent to ((walk, occ) for the first copy,
    (walk, occ) for the second); the rotations are cut at those corners
    and concatenated.  ``edge_merge`` maps sibling child edges onto one
    parent edge; adjacent duplicate darts collapsing onto the same parent
    edge are unified.  With ``second_flipped`` the second copy's rotation
    is reversed and its edge signatures negated.
    """
    pairs = {}
    for parent, ((w1, t1), (w2, t2)) in pair_corners.items():
        c1, lin1 = _linearize_at_gap(scheme, w1, t1)
        c2, lin2 = _linearize_at_gap(scheme, w2, t2)
        if second_flipped:
            lin2 = lin2[::-1]
        pairs[parent] = (c1, lin1, c2, lin2)
    child_parent = {}
    for parent, (c1, _, c2, _) in pairs.items():
        child_parent[c1] = parent
        child_parent[c2] = parent

    def relabel(x):
        return child_parent.get(x, x)

    rotation = {}
    signature = {}
    for v in scheme.graph.vertices:
        if v in child_parent:
            continue
        order = []
        for w in scheme.rotation[v]:
            order.append(relabel(w))
        rotation[v] = tuple(order)
    for parent, (c1, lin1, c2, lin2) in pairs.items():
        merged = [relabel(x) for x in lin1 + lin2]
        # collapse adjacent duplicates arising from merged sibling edges
        out = []
        n = len(merged)
        for i, x in enumerate(merged):
            if out and out[-1] == x:
                continue
            out.append(x)
        if len(out) > 1 and out[0] == out[-1]:
            out.pop()
        rotation[parent] = tuple(out)
    adj = {v: set(r) for v, r in rotation.items()}
    for v, r in rotation.items():
        if len(r) != len(set(r)):
            raise GlobalInconsistency(
                "merge", "?", f"merged rotation at {v} repeats a neighbor"
            )
    g = Graph(adj)
    # signatures
    flipped_children = {c2 for (_, (c1, _, c2, _)) in zip(pairs, pairs.values())} if False else {
        p[2] for p in pairs.values()
    }
    for e in g.edges():
        u, v = tuple(e)
        signature[e] = 1
    for e in scheme.graph.edges():
        a, b = tuple(e)
        pa, pb = relabel(a), relabel(b)
        if pa == pb:
            continue
        s = scheme.sig(a, b)
        if second_flipped:
            if a in flipped_children:
                s = -s
            if b in flipped_children:
                s = -s
        key = edge_key(pa, pb)
        signature[key] = s
    if sign_overrides:
        signature.update(sign_overrides)
    return Graph(adj), rotation, signature


def _project_walk(walk: BoundaryWalk, child_parent, splitting: Splitting):
    """Project a child-stage walk to the parent stage, checking beta."""
    verts = [child_parent.get(v, v) for v in walk.walk]
    n = len(verts)
    for i in range(n):
        a, b = walk.walk[i], walk.walk[(i + 1) % n]
        pa, pb = verts[i], verts[(i + 1) % n]
        e = edge_key(pa, pb)
        if e not in splitting.beta or edge_key(a, b) not in splitting.beta[e]:
            raise GlobalInconsistency(
                "face-projection", "?", f"walk edge {a}-{b} has no parent edge"
            )
    darts = tuple((verts[i], verts[(i + 1) % n]) for i in range(n))
    return BoundaryWalk(tuple(verts), darts)


def refold(trace: UnfoldingTrace) -> EmbeddingScheme:
    """Rebuild the original scheme from the trace, verifying every gluing.

    Works from the final planar scheme, the special walk, and the
    per-step splittings; derives face walks downward and refuses (with
    GlobalInconsistency) whenever a decomposition or gluing fails, in
    particular when a face pair would glue into a Klein-bottle-style
    identification instead of a handle.
    """
    scheme = trace.final_scheme
    kind = euler_genus(scheme)
    if not trace.steps:
        return scheme
    if not kind.orientable or kind.genus != 0:
        raise GlobalInconsistency("planarity", len(trace.steps), "final stage not a sphere")
    if trace.special_walk is None:
        raise GlobalInconsistency("special-face", len(trace.steps), "missing special walk")
    bstar = find_face(scheme, trace.special_walk)
    if bstar is None or bstar.darts != trace.special_walk.darts:
        if _align(trace.special_walk, trace.special_walk) and find_face(scheme, trace.special_walk) is None:
            raise GlobalInconsistency(
                "special-face", len(trace.steps), "special walk is not a face"
            )
    derived = [trace.special_walk]

    for stage in range(len(trace.steps) - 1, -1, -1):
        step = trace.steps[stage]
        split = step.splitting
        child_parent = split.parent_of()
        try:
            split.validate(trace.graphs[stage], scheme.graph)
        except ValueError as exc:
            raise GlobalInconsistency("splitting", stage, str(exc)) from None
        if step.kind == "path_dup":
            scheme, derived = _refold_path(scheme, derived, step, stage)
        elif step.kind == "cycle_dup":
            scheme, derived = _refold_cycle(scheme, derived, step, stage)
        else:
            scheme, derived = _refold_double(scheme, derived, step, stage)
        if scheme.graph.vertices != trace.graphs[stage].vertices:
            raise GlobalInconsistency("stage-graph", stage, "vertex set mismatch")
        if set(scheme.graph.edges()) != set(trace.graphs[stage].edges()):
            raise GlobalInconsistency("stage-graph", stage, "edge set mismatch")
    return scheme


def _require_face(scheme, walk, condition, stage):
    face = find_face(scheme, walk)
    if face is None:
        raise GlobalInconsistency(condition, stage, "derived walk is not a face")
    return face


def _refold_path(scheme, derived, step, stage):
    split = step.splitting
    child_parent = split.parent_of()
    prime, double = list(step.prime), list(step.double_prime)
    s = len(prime) - 1
    merged = derived[0]
    n = len(merged)
    walk = merged.walk
    pattern = None
    for r in range(n):
        rot = tuple(walk[(r + i) % n] for i in range(n))
        if list(rot[: s + 1]) != prime:
            continue
        target = tuple(reversed(double))
        for q in range(s + 1, n - s):
            if rot[q : q + s + 1] == target:
                pattern = (rot, rot[s + 1 : q], rot[q + s + 1 :])
                break
        if pattern:
            break
    if pattern is None:
        raise GlobalInconsistency("path-duplication", stage, "slit pattern not found")
    rot, psi_part, chi_part = pattern
    # the split set must be exactly the two copy runs
    splits = {c for cs in split.alpha.values() for c in cs if len(split.alpha[child_parent[c]]) > 1}
    if splits != set(prime) | set(double):
        raise GlobalInconsistency("path-duplication", stage, "split set mismatch")
    for a, b in zip(prime, double):
        if child_parent[a] != child_parent[b]:
            raise GlobalInconsistency("path-duplication", stage, "copy pairing mismatch")
    parents = [child_parent[c] for c in prime]
    if len(set(parents)) != len(parents):
        raise GlobalInconsistency("path-duplication", stage, "path parents repeat")
    # locate the corners of each copy on the merged walk
    rot_walk = _rewalk(rot)
    occ_prime = list(range(0, s + 1))
    occ_double = list(range(len(rot) - 1 - (len(chi_part)) - s, len(rot) - len(chi_part)))
    occ_double = occ_double[::-1]  # double[j] sits at the mirrored position
    pair_corners = {}
    for j, parent in enumerate(parents):
        pair_corners[parent] = ((rot_walk, occ_prime[j]), (rot_walk, occ_double[j]))
    g, rotation, signature = _merge_pairs(scheme, pair_corners, child_parent, split.beta)
    new_scheme = EmbeddingScheme(g, rotation, signature)
    # derive the two lower faces at parent level and re-project the others
    chi_lower = _rewalk(
        (parents[0],) + tuple(child_parent.get(v, v) for v in chi_part)
    )
    psi_lower = _rewalk(
        (parents[s],) + tuple(child_parent.get(v, v) for v in psi_part)
    )
    chi_lower = _require_face(new_scheme, chi_lower, "path-duplication", stage)
    psi_lower = _require_face(new_scheme, psi_lower, "path-duplication", stage)
    rest = []
    for w in derived[1:]:
        pw = _project_walk(w, child_parent, split)
        rest.append(_require_face(new_scheme, pw, "face-projection", stage))
    return new_scheme, [chi_lower, psi_lower] + rest


def _rewalk(vertices):
    vs = tuple(vertices)
    darts = tuple((vs[i], vs[(i + 1) % len(vs)]) for i in range(len(vs)))
    return BoundaryWalk(vs, darts)


def _refold_cycle(scheme, derived, step, stage):
    split = step.splitting
    child_parent = split.parent_of()
    if len(derived) < 2:
        raise GlobalInconsistency("cycle-gluing", stage, "missing face pair")
    w_prime, w_double = derived[-2], derived[-1]
    if len(w_prime) != len(w_double):
        raise GlobalInconsistency("cycle-gluing", stage, "face lengths differ")
    r = len(w_prime)
    if len(set(w_prime.walk)) != r or len(set(w_double.walk)) != r:
        raise GlobalInconsistency("cycle-gluing", stage, "face walk not a simple cycle")
    par_p = [child_parent[v] for v in w_prime.walk]
    par_d = [child_parent[v] for v in w_double.walk]
    if len(set(par_p)) != r or set(par_p) != set(par_d):
        raise GlobalInconsistency("cycle-gluing", stage, "parent cycles differ")
    splits = {c for c in child_parent if len(split.alpha[child_parent[c]]) > 1}
    if splits != set(w_prime.walk) | set(w_double.walk):
        raise GlobalInconsistency("cycle-gluing", stage, "split set mismatch")
    # handle condition: the double-prime walk runs through the parents in
    # the opposite direction; a same-direction match is a Klein gluing
    rev = par_d[::-1]
    shift = None
    for t in range(r):
        if rev[t:] + rev[:t] == par_p:
            shift = t
            break
    if shift is None:
        same = any(par_d[t:] + par_d[:t] == par_p for t in range(r))
        detail = "face pair glues into a Klein bottle" if same else "cycles cannot be aligned"
        raise GlobalInconsistency("cycle-gluing", stage, detail)
    # occurrence t of prime pairs with the occurrence of its sibling
    pair_corners = {}
    pos_d = {child_parent[v]: i for i, v in enumerate(w_double.walk)}
    for i, v in enumerate(w_prime.walk):
        parent = child_parent[v]
        pair_corners[parent] = ((w_prime, i), (w_double, pos_d[parent]))
    g, rotation, signature = _merge_pairs(scheme, pair_corners, child_parent, split.beta)
    new_scheme = EmbeddingScheme(g, rotation, signature)
    if new_scheme.euler_characteristic() != scheme.euler_characteristic() - 2:
        raise GlobalInconsistency("cycle-gluing", stage, "gluing did not add a handle")
    rest = []
    for w in derived[:-2]:
        pw = _project_walk(w, child_parent, split)
        rest.append(_require_face(new_scheme, pw, "face-projection", stage))
    return new_scheme, rest


def _refold_double(scheme, derived, step, stage):
    split = step.splitting
    child_parent = split.parent_of()
    if not derived:
        raise GlobalInconsistency("cycle-doubling", stage, "missing doubled face")
    ring = derived[-1]
    n = len(ring)
    if n % 2 != 0:
        raise GlobalInconsistency("cycle-doubling", stage, "odd doubled face")
    p = n // 2
    if len(set(ring.walk)) != n:
        raise GlobalInconsistency("cycle-doubling", stage, "doubled face revisits a vertex")
    parents = [child_parent[v] for v in ring.walk]
    ok = all(parents[t] == parents[(t + p) % n] for t in range(p)) and len(set(parents[:p])) == p
    if not ok:
        raise GlobalInconsistency(
            "cycle-doubling", stage, "antipodal pairing violated on the doubled face"
        )
    splits = {c for c in child_parent if len(split.alpha[child_parent[c]]) > 1}
    if splits != set(ring.walk):
        raise GlobalInconsistency("cycle-doubling", stage, "split set mismatch")
    pair_corners = {}
    seam = {}
    for t in range(p):
        parent = parents[t]
        pair_corners[parent] = ((ring, t), (ring, t + p))
    overrides = {}
    for t in range(p):
        e = edge_key(parents[t], parents[(t + 1) % p])
        overrides[e] = 1
    overrides[edge_key(parents[p - 1], parents[0])] = -1
    g, rotation, signature = _merge_pairs(
        scheme,
        pair_corners,
        child_parent,
        split.beta,
        second_flipped=True,
        sign_overrides=overrides,
    )
    new_scheme = EmbeddingScheme(g, rotation, signature)
    if new_scheme.euler_characteristic() != scheme.euler_characteristic() - 1:
        raise GlobalInconsistency("cycle-doubling", stage, "gluing did not add a cross-cap")
    rest = []
    for w in derived[:-1]:
        pw = _project_walk(w, child_parent, split)
        rest.append(_require_face(new_scheme, pw, "face-projection", stage))
    return new_scheme, rest


def format_trace(trace: UnfoldingTrace) -> str:
    """Byte-stable structured text form of an unfolding trace."""
    lines = [
        "unfolding-trace",
        "params "
        + " ".join(f"{k}={trace.params[k]}" for k in sorted(trace.params)),
        f"stages {len(trace.graphs)}",
    ]
    for i, g in enumerate(trace.graphs):
        lines.append(f"stage {i} vertices {len(g)} edges {g.num_edges()}")
    for i, step in enumerate(trace.steps):
        lines.append(f"step {i} kind {step.kind} index {step.index}")
        lines.append("  object " + " ".join(str(x) for x in step.obj))
        for parent in sorted(step.splitting.alpha, key=repr):
            childs = step.splitting.alpha[parent]
            if len(childs) > 1:
                lines.append(
                    f"  split {parent} -> " + " ".join(str(c) for c in childs)
                )
        if step.prime:
            lines.append("  prime " + " ".join(str(x) for x in step.prime))
        if step.double_prime:
            lines.append(
                "  double-prime " + " ".join(str(x) for x in step.double_prime)
            )
    if trace.special_walk is not None:
        lines.append(
            "special-walk " + " ".join(str(v) for v in trace.special_walk.walk)
        )
    return "\n".join(lines) + "\n"
