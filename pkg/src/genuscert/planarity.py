"""Planarity-with-distinguished-face certification.

A spanning tree of the planar graph is flattened into its facial tour
(every tree edge walked twice); each co-tree edge becomes a chord of
the tour circle.  Chords of a planar embedding nest, and the nesting is
certified locally by a stack discipline: every tour position carries
the innermost chord jumping over it and the stack top it hands to the
next position, and every chord carries its parent chord.  Positions not
jumped by any chord are exactly the corners of the distinguished face,
and carry their index on its boundary walk.
"""

from __future__ import annotations

from dataclasses import dataclass

from .embedding import EmbeddingScheme
from .graph import Graph
from .treecert import Verdict


@dataclass(frozen=True)
class ChordRec:
    x: object  # vertex at the earlier tour position
    y: object
    pa: tuple  # refined position (t, rank) of the x side
    pb: tuple  # refined position of the y side
    parent: tuple | None  # (pa, pb) of the enclosing chord, or None
    jump_bpos: int | None  # walk index of the y-side landing, for roots

    @property
    def ref(self):
        return (self.pa, self.pb)


@dataclass(frozen=True)
class VisitRec:
    pos: int
    vertex: object
    low: tuple | None  # ref of the innermost chord strictly over this corner
    handoff: tuple | None  # stack top handed to the next position
    bpos: int | None  # index on the distinguished walk when uncovered


@dataclass(frozen=True)
class MoveRec:
    pos_from: int
    pos_to: int
    v_from: object
    v_to: object
    visit_from: VisitRec
    visit_to: VisitRec


@dataclass
class PlanarityData:
    """Prover output: per-edge records plus uniform header values."""

    n_vertices: int
    tour_len: int
    root: object
    walk_len: int
    tree_moves: dict  # edge frozenset -> (MoveRec, MoveRec)
    chords: dict  # edge frozenset -> ChordRec


def _tree_rotations(scheme: EmbeddingScheme, tree_edges):
    rot = {}
    for v in scheme.graph.vertices:
        keep = tuple(w for w in scheme.rotation[v] if frozenset((v, w)) in tree_edges)
        rot[v] = keep
    return rot


def _facial_tour(rot, start_v, start_w):
    """The closed walk of the tree's single face, as a dart list."""
    darts = []
    u, v = start_v, start_w
    while True:
        darts.append((u, v))
        r = rot[v]
        u, v = v, r[(r.index(u) + 1) % len(r)]
        if (u, v) == (start_v, start_w):
            break
    return darts


def planarity_subcertificates(
    scheme: EmbeddingScheme, bwalk_vertices, spanning_parent
):
    """Build the planarity fragments for a planar scheme.

    ``bwalk_vertices`` is the directed distinguished walk (vertex
    sequence); ``spanning_parent`` maps each vertex to its tree parent
    (root maps to None).  Returns PlanarityData.
    """
    g = scheme.graph
    tree_edges = {
        frozenset((v, p)) for v, p in spanning_parent.items() if p is not None
    }
    root = next(v for v, p in spanning_parent.items() if p is None)
    rot = _tree_rotations(scheme, tree_edges)
    start_w = rot[root][0]
    tour = _facial_tour(rot, root, start_w)
    n = len(g)
    if len(tour) != 2 * (n - 1):
        raise ValueError("spanning tree tour has the wrong length")

    bwalk = list(bwalk_vertices)
    walk_len = len(bwalk)

    def build(tour_darts):
        # visit t = arrival vertex of dart t-1 = origin of dart t
        visits = [d[0] for d in tour_darts]
        # corner after tree dart: position of each corner
        corner_pos = {}
        for t, (u, v) in enumerate(tour_darts):
            # arriving at visits[t] via dart (prev -> visits[t]); corner
            # follows the reversed dart (visits[t] -> prev)
            prev = tour_darts[t - 1][0]
            corner_pos[(visits[t], prev)] = t
        # chord coarse positions
        coarse = {}
        for e in g.edges():
            if e in tree_edges:
                continue
            x, y = sorted(e, key=repr)
            px = _chord_corner(scheme, rot, corner_pos, x, y)
            py = _chord_corner(scheme, rot, corner_pos, y, x)
            coarse[e] = ((px, x), (py, y))
        return visits, corner_pos, coarse

    visits, corner_pos, coarse = build(tour)
    # the uncovered corners must realize the walk in tour order; if they
    # run backwards, flip the tour direction
    ordered = _order_chords(coarse)
    uncovered = _uncovered_positions(len(tour), ordered)
    seq = [visits[t] for t in uncovered]
    if walk_len and not _cyclic_equal(seq, bwalk):
        tour = [(b, a) for (a, b) in reversed(tour)]
        visits, corner_pos, coarse = build(tour)
        ordered = _order_chords(coarse)
        uncovered = _uncovered_positions(len(tour), ordered)
        seq = [visits[t] for t in uncovered]
    if walk_len and not _cyclic_equal(seq, bwalk):
        raise ValueError("uncovered corners do not realize the distinguished walk")

    # nesting structure
    parent, low, handoff = _stack_structure(len(tour), ordered)
    # walk indices
    bpos = {}
    if walk_len:
        shift = _cyclic_shift(seq, bwalk)
        for i, t in enumerate(uncovered):
            bpos[t] = (i + shift) % walk_len

    chords = {}
    for e, ((px, x), (py, y)) in coarse.items():
        (pa, ra), (pb, rb) = ordered[e]
        if (px, x) != _side_of(ordered[e][0], (px, x), (py, y)):
            x, y = y, x
        par = parent.get(e)
        jb = None
        if par is None and walk_len:
            jb = bpos[ordered[e][1][0]]
        chords[e] = ChordRec(
            x=x, y=y, pa=ordered[e][0], pb=ordered[e][1], parent=par, jump_bpos=jb
        )

    def visit_rec(t):
        return VisitRec(
            pos=t,
            vertex=visits[t],
            low=low[t],
            handoff=handoff[t],
            bpos=bpos.get(t),
        )

    tree_moves = {}
    L = len(tour)
    move_of = {}
    for t, (u, v) in enumerate(tour):
        move_of[t] = MoveRec(
            pos_from=t,
            pos_to=(t + 1) % L,
            v_from=u,
            v_to=v,
            visit_from=visit_rec(t),
            visit_to=visit_rec((t + 1) % L),
        )
    for e in tree_edges:
        ms = [move_of[t] for t, (u, v) in enumerate(tour) if frozenset((u, v)) == e]
        assert len(ms) == 2
        tree_moves[e] = tuple(ms)
    return PlanarityData(
        n_vertices=n,
        tour_len=L,
        root=root,
        walk_len=walk_len,
        tree_moves=tree_moves,
        chords=chords,
    )


def _chord_corner(scheme, tree_rot, corner_pos, x, y):
    """Tour position of the corner holding the dart (x -> y)."""
    r = scheme.rotation[x]
    i = r.index(y)
    for back in range(1, len(r) + 1):
        w = r[(i - back) % len(r)]
        if w in tree_rot[x]:
            return corner_pos[(x, w)]
    raise ValueError(f"vertex {x} has no tree dart")


def _order_chords(coarse):
    """Refined endpoint positions: ends before starts, nested ranks."""
    # coarse[e] = ((px, x), (py, y)); normalize so pa <= pb
    spans = {}
    for e, ((px, x), (py, y)) in coarse.items():
        if (px) <= (py):
            spans[e] = (px, py)
        else:
            spans[e] = (py, px)
    by_pos = {}
    for e, (a, b) in spans.items():
        by_pos.setdefault(a, []).append(("start", b, e))
        by_pos.setdefault(b, []).append(("end", a, e))
    refined = {}
    for t, items in by_pos.items():
        ends = sorted(
            [it for it in items if it[0] == "end"],
            key=lambda it: (-it[1], repr(it[2])),
        )
        starts = sorted(
            [it for it in items if it[0] == "start"],
            key=lambda it: (-it[1], repr(it[2])),
        )
        rank = 0
        for _, _, e in ends:
            refined[(e, t, "end")] = rank
            rank += 1
        for _, _, e in starts:
            refined[(e, t, "start")] = rank
            rank += 1
    out = {}
    for e, (a, b) in spans.items():
        out[e] = ((a, refined[(e, a, "start")]), (b, refined[(e, b, "end")]))
    return out


def _side_of(ref_a, side1, side2):
    return side1 if side1[0] == ref_a[0] else side2


def _uncovered_positions(L, ordered):
    cover = [0] * L
    for e, ((a, _), (b, _)) in ordered.items():
        for t in range(a + 1, b):
            cover[t] += 1
    return [t for t in range(L) if cover[t] == 0]


def _stack_structure(L, ordered):
    """Simulate the chord stack around the tour; derive parents and lows."""
    starts = {}
    ends = {}
    for e, (pa, pb) in ordered.items():
        starts.setdefault(pa[0], []).append((pa[1], e))
        ends.setdefault(pb[0], []).append((pb[1], e))
    parent = {}
    low = {}
    handoff = {}
    stack = []
    for t in range(L):
        for _, e in sorted(ends.get(t, [])):
            if not stack or stack[-1] != e:
                raise ValueError("chords cross: pop order violated")
            stack.pop()
        low[t] = ordered[stack[-1]] if stack else None
        for _, e in sorted(starts.get(t, [])):
            parent[e] = ordered[stack[-1]] if stack else None
            stack.append(e)
        handoff[t] = ordered[stack[-1]] if stack else None
    if stack:
        raise ValueError("chords cross: unbalanced stack")
    return parent, low, handoff


def _cyclic_equal(a, b):
    if len(a) != len(b):
        return False
    if not a:
        return True
    return any(a[i:] + a[:i] == list(b) for i in range(len(a)))


def _cyclic_shift(a, b):
    for i in range(len(a) or 1):
        if list(b[i:]) + list(b[:i]) == list(a):
            return i
    return 0


# -- standalone node-local checker ------------------------------------------


def check_planarity_at(g_hstar: Graph, vertex_avatars, data: PlanarityData, walk_occ):
    """Node-local verdicts for the avatars owned by one node.

    ``vertex_avatars`` lists the H*-vertices owned by the checking node;
    ``walk_occ`` maps each avatar to the multiset of walk indices it
    occupies on the distinguished walk.  Only records incident to the
    owned avatars are read, mirroring the one-round visibility.
    """
    L = data.tour_len
    N = data.walk_len
    problems = []

    def chord_by_ref():
        return {c.ref: c for c in data.chords.values()}

    refs = chord_by_ref()
    # per-avatar incident records
    for z in vertex_avatars:
        incident_tree = [
            (e, ms) for e, ms in data.tree_moves.items() if z in e
        ]
        incident_chords = [(e, c) for e, c in data.chords.items() if z in e]
        for e in g_hstar.neighbors(z):
            ek = frozenset((z, e))
            roles = (1 if ek in data.tree_moves else 0) + (
                1 if ek in data.chords else 0
            )
            if roles != 1:
                problems.append(f"edge {set(ek)} has {roles} planarity roles")
        if not incident_tree:
            problems.append(f"avatar {z} missing from the tour")
            continue
        # collect this avatar's visits from arriving moves
        my_visits = {}
        for e, ms in incident_tree:
            for m in ms:
                for vr in (m.visit_from, m.visit_to):
                    if vr.vertex == z:
                        prev = my_visits.get(vr.pos)
                        if prev is not None and prev != vr:
                            problems.append(f"visit copies disagree at {vr.pos}")
                        my_visits[vr.pos] = vr
                if m.pos_to != (m.pos_from + 1) % L:
                    problems.append("move positions not consecutive")
        arrivals = set()
        departures = set()
        for e, ms in incident_tree:
            for m in ms:
                if m.v_to == z:
                    arrivals.add(m.pos_to)
                if m.v_from == z:
                    departures.add(m.pos_from)
        if arrivals != departures or arrivals != set(my_visits):
            problems.append(f"avatar {z} visits lack arrivals or departures")
        if len({t for t in my_visits}) != len(my_visits):
            problems.append("duplicate positions")
        # stack rules at each arriving move: the arrival owner sees its
        # own incident chords and the handoff carried on the move record
        for e, ms in incident_tree:
            for m in ms:
                if m.v_to != z:
                    continue
                vf, vt = m.visit_from, m.visit_to
                out_chords = sorted(
                    (c for _, c in _chords_at(data, z) if c.pb[0] == vt.pos),
                    key=lambda c: c.pb[1],
                )
                top = vf.handoff
                bad = False
                for c in out_chords:
                    if top != c.ref:
                        problems.append(f"pop order violated at {vt.pos}")
                        bad = True
                        break
                    top = c.parent
                if not bad and vt.low != top:
                    problems.append(f"low mismatch at {vt.pos}")
                in_chords = sorted(
                    (c for _, c in _chords_at(data, z) if c.pa[0] == vt.pos),
                    key=lambda c: c.pa[1],
                )
                top = vt.low
                bad = False
                for c in in_chords:
                    if c.parent != top:
                        problems.append(f"push parent violated at {vt.pos}")
                        bad = True
                        break
                    top = c.ref
                if not bad and vt.handoff != top:
                    problems.append(f"handoff mismatch at {vt.pos}")
        # root / wrap conditions
        for t, vr in my_visits.items():
            if t == 0:
                if z != data.root:
                    problems.append("position 0 away from the root")
                if vr.low is not None:
                    problems.append("root corner covered")
        # walk indices
        claimed = sorted(vr.bpos for vr in my_visits.values() if vr.bpos is not None)
        expected = sorted(walk_occ.get(z, []))
        if claimed != expected:
            problems.append(
                f"avatar {z} uncovered corners {claimed} != walk occurrences {expected}"
            )
        for t, vr in my_visits.items():
            if N == 0:
                if vr.bpos is not None:
                    problems.append(f"walk index without a walk at {t}")
            elif (vr.low is None) != (vr.bpos is not None):
                problems.append(f"coverage/walk-index mismatch at {t}")
        # walk stepping rules
        for e, ms in incident_tree:
            for m in ms:
                if m.v_from != z:
                    continue
                vf, vt = m.visit_from, m.visit_to
                if vf.bpos is not None and N:
                    if vt.bpos is not None:
                        if vt.bpos != (vf.bpos + 1) % N:
                            problems.append("walk index does not advance by one")
                    else:
                        # the walk jumps the unique parentless chord at vf
                        jumps = [
                            c
                            for _, c in _chords_at(data, z)
                            if c.pa[0] == vf.pos and c.parent is None
                        ]
                        if len(jumps) != 1:
                            problems.append("covered stretch without a jump chord")
                        elif jumps[0].jump_bpos != (vf.bpos + 1) % N:
                            problems.append("jump landing index wrong")
        refined_seen = set()
        for e, c in incident_chords:
            for side, vert in ((c.pa, c.x), (c.pb, c.y)):
                if vert == z:
                    if side in refined_seen:
                        problems.append(f"refined position {side} reused")
                    refined_seen.add(side)
            # both owners hold the record; the landing side validates the
            # claimed walk index against its own visit
            if c.parent is None and c.y == z and N:
                vr = my_visits.get(c.pb[0])
                if vr is None or vr.bpos != c.jump_bpos:
                    problems.append("jump chord lands on a mismatched corner")
            if c.x == z and c.pa[0] not in my_visits:
                problems.append("chord start position is not a visit here")
            if c.y == z and c.pb[0] not in my_visits:
                problems.append("chord end position is not a visit here")
    return problems


def _chords_at(data: PlanarityData, z):
    for e, c in data.chords.items():
        if z in e:
            yield e, c
