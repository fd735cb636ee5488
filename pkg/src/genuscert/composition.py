"""The centralized evaluation route: reassemble, then check globally.

This is the second, independent route against which the distributed
verifier is held: decode every certificate, rebuild the history
collection, the final-stage graph, and the special walk, then run the
centralized consistency checker together with the global forms of the
planarity and spanning-tree sub-checkers.  Any reassembly defect counts
as a rejection, mirroring a decode failure at some node.
"""

from __future__ import annotations

from collections import defaultdict

from .certificates import DecodeError, decode_certificate
from .graph import Graph
from .histories import (
    Footprint,
    HistoryCollection,
    HistoryNode,
    check_local_consistency,
    type_creation_level,
)
from .planarity import ChordRec, MoveRec, PlanarityData, VisitRec, check_planarity_at
from .verifier import OwnerShape, _Reject


class ReassemblyError(Exception):
    pass


def _labels_of_mask(owner, mask):
    return frozenset((owner, i + 1) for i in range(mask.bit_length()) if mask & (1 << i))


def reassemble(g: Graph, assignment):
    """Rebuild (hc, hstar graph, bwalk, planarity data, frags) or raise."""
    certs = {}
    for v in sorted(g.vertices):
        bits = assignment.get(v)
        if bits is None:
            raise ReassemblyError(f"node {v} has no certificate")
        try:
            certs[v] = decode_certificate(tuple(bits))
        except DecodeError as exc:
            raise ReassemblyError(f"node {v}: {exc}") from None
        if certs[v].node != v:
            raise ReassemblyError(f"node {v} holds a foreign certificate")
    headers = {
        (
            c.n,
            tuple(sorted(c.params.items())),
            tuple(c.object_table),
            c.hstar_n,
            c.planar_root,
            c.walk_len,
        )
        for c in certs.values()
    }
    if len(headers) != 1:
        raise ReassemblyError("headers differ")
    ref = next(iter(certs.values()))
    params = ref.params
    if params["orientable"]:
        depth = 3 * params["k"] - 1 if params["k"] else 0
    else:
        if params["m"] < 1 or params["k"] != params["m"] + 2 * params["k_prime"]:
            raise ReassemblyError("inconsistent parameters")
        depth = params["m"] + params["k_prime"] + params["k"] - 1

    # hosting: exactly one payload per edge
    payloads = {}
    for v, c in certs.items():
        for ep in c.hosted:
            if v not in (ep.u, ep.v):
                raise ReassemblyError("foreign hosted payload")
            ekey = frozenset((ep.u, ep.v))
            if not g.has_edge(ep.u, ep.v):
                raise ReassemblyError("payload for a non-edge")
            if ekey in payloads:
                raise ReassemblyError("edge hosted twice")
            payloads[ekey] = ep
    for e in g.edges():
        if e not in payloads:
            raise ReassemblyError(f"edge {set(e)} not hosted")

    shapes = {}
    for v, c in certs.items():
        try:
            shapes[v] = OwnerShape(v, c.nu, c.shape, depth)
        except _Reject as r:
            raise ReassemblyError(f"node {v}: {r.reason}") from None

    # stage neighborhoods from the edge records
    neighbor_sets = defaultdict(set)  # (owner, level, mask) -> {(owner2, mask2)}
    edge_types = {}
    for ekey, ep in payloads.items():
        by_level = defaultdict(list)
        for r in ep.levels:
            by_level[r.level].append(r)
        seen = set()
        for level, rs in by_level.items():
            if not 0 <= level <= depth:
                raise ReassemblyError("record level out of range")
            for r in rs:
                if not shapes[ep.u].has(level, r.mask_u) or not shapes[ep.v].has(
                    level, r.mask_v
                ):
                    raise ReassemblyError("edge record at a non-node mask")
                key = (level, r.mask_u, r.mask_v)
                if key in seen:
                    raise ReassemblyError("duplicate edge record")
                seen.add(key)
                neighbor_sets[(ep.u, level, r.mask_u)].add((ep.v, r.mask_v))
                neighbor_sets[(ep.v, level, r.mask_v)].add((ep.u, r.mask_u))
                edge_types[(level, ep.u, r.mask_u, ep.v, r.mask_v)] = r.etype
                edge_types[(level, ep.v, r.mask_v, ep.u, r.mask_u)] = r.etype
        if len(by_level.get(0, [])) != 1:
            raise ReassemblyError("missing level-0 record")

    # footprints, with both-copies validation
    fp_copies = defaultdict(list)
    for ekey, ep in payloads.items():
        for f in ep.footprints:
            if f.y_owner not in ekey:
                raise ReassemblyError("footprint hosted off its edges")
            fp_copies[(f.y_owner, f.key())].append(ekey)
    fps_by_node = defaultdict(list)
    for (owner, key), hosts in fp_copies.items():
        (level, seq, y_owner, y_mask, pred_owner, pred_mask, succ_owner, succ_mask,
         t_in, t_out, obj, index, walk_index) = key
        want = {frozenset((owner, pred_owner)), frozenset((owner, succ_owner))}
        if set(hosts) != want or len(hosts) != len(want):
            raise ReassemblyError("footprint copies not on both edges")
        fps_by_node[(owner, level, y_mask)].append(
            Footprint(
                pred=(pred_owner, _labels_of_mask(pred_owner, pred_mask)),
                succ=(succ_owner, _labels_of_mask(succ_owner, succ_mask)),
                type_in=t_in,
                type_out=t_out,
                obj=obj,
                index=index,
                walk_index=walk_index,
            )
        )

    # typed-record discipline (coverage at creation, persistence upward)
    for (level, ou, mu, ov, mv), t in edge_types.items():
        if t is None:
            continue
        created = type_creation_level(params, t)
        if created > level:
            raise ReassemblyError("edge typed before creation")
        if created == level:
            covered = any(
                (f.type_out == t and f.succ == (ov, _labels_of_mask(ov, mv)))
                or (f.type_in == t and f.pred == (ov, _labels_of_mask(ov, mv)))
                for f in fps_by_node.get((ou, level, mu), [])
            )
            covered = covered or any(
                (f.type_out == t and f.succ == (ou, _labels_of_mask(ou, mu)))
                or (f.type_in == t and f.pred == (ou, _labels_of_mask(ou, mu)))
                for f in fps_by_node.get((ov, level, mv), [])
            )
            if not covered:
                raise ReassemblyError("typed record without a covering footprint")
        else:
            pu = shapes[ou].project(level, mu)
            pv = shapes[ov].project(level, mv)
            if edge_types.get((level - 1, ou, pu, ov, pv), "missing") != t:
                raise ReassemblyError("edge type does not persist")
        if level < depth:
            typed_children = [
                1
                for (l2, o2, m2, o3, m3), t2 in edge_types.items()
                if l2 == level + 1
                and o2 == ou
                and o3 == ov
                and t2 == t
                and shapes[ou].project(level + 1, m2) == mu
                and shapes[ov].project(level + 1, m3) == mv
            ]
            if len(typed_children) != 1:
                raise ReassemblyError("typed edge persists to a wrong child count")

    # build the history collection
    def build_node(owner, level, mask):
        ident_avatars = _labels_of_mask(owner, mask)
        nbrs = frozenset(
            (o2, _labels_of_mask(o2, m2)) for (o2, m2) in neighbor_sets.get((owner, level, mask), ())
        )
        children = tuple(
            build_node(owner, level + 1, cm)
            for cm in (shapes[owner].children.get((level, mask)) or ())
        )
        node = HistoryNode(owner, level, ident_avatars, nbrs, children)
        node.footprints = list(fps_by_node.get((owner, level, mask), []))
        return node

    trees = {
        v: build_node(v, 0, (1 << certs[v].nu) - 1) for v in sorted(g.vertices)
    }
    hc = HistoryCollection(trees=trees, depth=depth, params=dict(params), bwalk=None)

    # the special walk from the walk indices
    walk_len = ref.walk_len
    bwalk = None
    if walk_len:
        slots = {}
        for n in hc.all_nodes():
            if not n.is_leaf():
                continue
            for f in n.footprints:
                if f.walk_index is None:
                    continue
                if f.walk_index in slots:
                    raise ReassemblyError("duplicate walk index")
                slots[f.walk_index] = next(iter(n.avatars))
        if set(slots) != set(range(walk_len)):
            raise ReassemblyError("walk indices do not cover the walk")
        bwalk = tuple(slots[t] for t in range(walk_len))
    hc.bwalk = bwalk

    # final-stage graph over avatar labels
    adj = defaultdict(set)
    for n in hc.all_nodes():
        if not n.is_leaf():
            continue
        a = next(iter(n.avatars))
        adj[a]
        for (o2, s2) in n.neighbors:
            if len(s2) != 1:
                raise ReassemblyError("final stage neighbor is not a leaf")
            adj[a].add(next(iter(s2)))
    hstar = Graph({a: set(ns) for a, ns in adj.items()})

    # planarity data
    tree_moves = {}
    chords = {}
    for ekey, ep in payloads.items():
        for pr in ep.planar:
            a = (ep.u, pr.mask_u.bit_length())
            b = (ep.v, pr.mask_v.bit_length())
            if bin(pr.mask_u).count("1") != 1 or bin(pr.mask_v).count("1") != 1:
                raise ReassemblyError("planarity record at a non-leaf mask")
            hk = frozenset((a, b))
            if hk in tree_moves or hk in chords:
                raise ReassemblyError("duplicate planarity role")
            L = 2 * (ref.hstar_n - 1)
            if pr.is_tree:
                ms = []
                for m in pr.moves:
                    v_from = a if m.forward else b
                    v_to = b if m.forward else a
                    ms.append(
                        MoveRec(
                            pos_from=m.pos_from,
                            pos_to=(m.pos_from + 1) % L,
                            v_from=v_from,
                            v_to=v_to,
                            visit_from=VisitRec(m.pos_from, v_from, m.low_from, m.handoff_from, m.bpos_from),
                            visit_to=VisitRec((m.pos_from + 1) % L, v_to, m.low_to, m.handoff_to, m.bpos_to),
                        )
                    )
                tree_moves[hk] = tuple(ms)
            else:
                x, y = (a, b) if pr.x_is_u else (b, a)
                chords[hk] = ChordRec(
                    x=x, y=y, pa=pr.pa, pb=pr.pb, parent=pr.parent, jump_bpos=pr.jump_bpos
                )
    pdata = PlanarityData(
        n_vertices=ref.hstar_n,
        tour_len=2 * (ref.hstar_n - 1),
        root=ref.planar_root,
        walk_len=walk_len,
        tree_moves=tree_moves,
        chords=chords,
    )
    return certs, hc, hstar, bwalk, pdata


def centralized_evaluate(g: Graph, assignment):
    """Accept/reject of the centralized route, with a reason on reject."""
    try:
        certs, hc, hstar, bwalk, pdata = reassemble(g, assignment)
    except ReassemblyError as exc:
        return False, f"reassembly: {exc}"
    except Exception as exc:
        return False, f"reassembly: {type(exc).__name__}: {exc}"
    try:
        report = check_local_consistency(g, hstar, bwalk, hc)
    except Exception as exc:
        return False, f"consistency: {type(exc).__name__}: {exc}"
    if not report.accept:
        return False, f"consistency: {report.violations[0]}"
    ref = next(iter(certs.values()))
    depth = hc.depth
    if True:
        # global planarity
        occ = defaultdict(list)
        if bwalk:
            for i, a in enumerate(bwalk):
                occ[a].append(i)
        owners = defaultdict(list)
        for a in hstar.vertices:
            owners[a[0]].append(a)
        try:
            for o, avs in owners.items():
                problems = check_planarity_at(hstar, avs, pdata, occ)
                if problems:
                    return False, f"planarity: {problems[0]}"
        except Exception as exc:
            return False, f"planarity: {type(exc).__name__}: {exc}"
        # global tree fragments
        objects = ref.object_table
        for i, (kind, idx, length, root) in enumerate(objects):
            if root not in certs:
                return False, "tree root is not a node"
            for v, c in certs.items():
                if len(c.tree_frags) != len(objects):
                    return False, "tree fragment count"
                parent, dist = c.tree_frags[i]
                if v == root:
                    if dist != 0 or parent != 0:
                        return False, "bad root fragment"
                elif parent == 0 or parent not in g.neighbors(v) or dist == 0:
                    return False, "bad tree fragment"
                else:
                    pd = certs[parent].tree_frags[i][1]
                    if pd != dist - 1:
                        return False, "distances do not decrease"
        # index 0 of every object sits at its root
        zero_holders = defaultdict(set)
        for n in hc.all_nodes():
            for f in n.footprints:
                if f.obj is not None and f.index == 0:
                    zero_holders[f.obj].add(n.owner)
                if f.walk_index == 0:
                    zero_holders[("B", 0)].add(n.owner)
        for (kind, idx, length, root) in objects:
            if zero_holders.get((kind, idx), set()) != {root}:
                return False, f"index 0 of {(kind, idx)} is not exactly at its root"
    return True, ""


# -- reconstructed refold: the topological anchor ----------------------------


def scheme_from_planarity(pdata: PlanarityData, hstar: Graph):
    """An embedding scheme realized by accepted planarity data.

    Rotations are read off the tour circle: at each avatar, visits in
    tour order contribute their arriving tree dart followed by their
    chord darts in refined-rank order.
    """
    from .embedding import EmbeddingScheme

    arrive = defaultdict(list)  # avatar -> [(pos, neighbor)]
    for e, ms in pdata.tree_moves.items():
        for m in ms:
            arrive[m.v_to].append((m.pos_to, m.v_from))
    chords_at = defaultdict(list)  # avatar -> [(pos, rank, neighbor)]
    for e, c in pdata.chords.items():
        chords_at[c.x].append((c.pa[0], c.pa[1], c.y))
        chords_at[c.y].append((c.pb[0], c.pb[1], c.x))
    rotation = {}
    for z in hstar.vertices:
        order = []
        for pos, nb in sorted(arrive.get(z, [])):
            order.append(nb)
            for p, r, cn in sorted(chords_at.get(z, [])):
                if p == pos:
                    order.append(cn)
        if set(order) != set(hstar.neighbors(z)) or len(order) != hstar.degree(z):
            raise ReassemblyError(f"planarity data does not cover the edges at {z}")
        rotation[z] = tuple(order)
    return EmbeddingScheme(hstar, rotation)


def trace_from_collection(hc, hstar_scheme):
    """Rebuild unfolding traces from a history collection.

    Step objects and copy orders come from the typed chains; ambiguous
    single-vertex path steps yield one candidate per copy order, so a
    list of candidate traces is returned.
    """
    from .embedding import BoundaryWalk
    from .histories import _StageView, level_kind, type_creation_level
    from .surgery import Splitting, SurgeryStep, UnfoldingTrace
    from .embedding import edge_key as ek

    L = hc.depth
    idents = []
    graphs = []
    for level in range(L + 1):
        nodes = {n.ident: n for n in hc.nodes_at(level)}
        adj = {i: {nb for nb in n.neighbors} for i, n in nodes.items()}
        graphs.append(Graph(adj))
        idents.append(nodes)

    chains = defaultdict(dict)
    for n in hc.all_nodes():
        for f in n.footprints:
            if f.obj is not None:
                chains[f.obj][f.index] = n.ident
    steps_options = []
    for level in range(1, L + 1):
        kind, i = level_kind(hc.params, level)
        view = _StageView(hc, level)
        alpha = {}
        for parent, childs in view.children.items():
            alpha[parent] = tuple(childs)
        split_parents = [p for p, cs in alpha.items() if len(cs) > 1]
        beta = {}
        for e in graphs[level - 1].edges():
            a, b = tuple(e)
            child_edges = set()
            for x in alpha[a]:
                for y in alpha[b]:
                    if graphs[level].has_edge(x, y):
                        child_edges.add(frozenset((x, y)))
            if not child_edges:
                raise ReassemblyError("empty beta during reconstruction")
            beta[e] = frozenset(child_edges)

        def aligned(prime_obj, double_obj):
            pm = chains.get(prime_obj, {})
            dm = chains.get(double_obj, {})
            order_p = [pm[t] for t in sorted(pm)]
            order_d = [dm[t] for t in sorted(dm)]
            return order_p, order_d

        if kind == "cycle_dup":
            order_p, order_d = aligned(("C'", i), ("C''", i))
            if len(order_p) != len(split_parents):
                raise ReassemblyError("cycle chain does not cover the splits")
            obj = tuple(view.parent[x] for x in order_p)
            steps_options.append([
                SurgeryStep(
                    kind="cycle_dup", index=i, obj=obj,
                    splitting=_ordered_splitting(alpha, beta, order_p, view),
                    prime=tuple(order_p), double_prime=tuple(order_d),
                    created_walks=(),
                )
            ])
        elif kind == "cycle_double":
            dm = chains.get(("D'", i), {})
            ring = [dm[t] for t in sorted(dm)]
            if len(ring) != 2 * len(split_parents):
                raise ReassemblyError("doubling chain does not cover the splits")
            obj = tuple(view.parent[x] for x in ring[: len(ring) // 2])
            steps_options.append([
                SurgeryStep(
                    kind="cycle_double", index=i, obj=obj,
                    splitting=_ordered_splitting(alpha, beta, ring[: len(ring) // 2], view),
                    prime=tuple(ring), double_prime=(),
                    created_walks=(),
                )
            ])
        else:
            order_p, order_d = aligned(("P'", i), ("P''", i))
            if order_p:
                if len(order_p) != len(split_parents):
                    raise ReassemblyError("path chain does not cover the splits")
                obj = tuple(view.parent[x] for x in order_p)
                steps_options.append([
                    SurgeryStep(
                        kind="path_dup", index=i, obj=obj,
                        splitting=_ordered_splitting(alpha, beta, order_p, view),
                        prime=tuple(order_p), double_prime=tuple(order_d),
                        created_walks=(),
                    )
                ])
            else:
                # single-vertex path: both copy orders are candidates
                if len(split_parents) != 1:
                    raise ReassemblyError("empty path chain with several splits")
                parent = split_parents[0]
                c1, c2 = alpha[parent]
                opts = []
                for pr, db in ((c1, c2), (c2, c1)):
                    opts.append(
                        SurgeryStep(
                            kind="path_dup", index=i, obj=(parent,),
                            splitting=Splitting(dict(alpha), dict(beta)),
                            prime=(pr,), double_prime=(db,),
                            created_walks=(),
                        )
                    )
                steps_options.append(opts)

    # special walk over final-stage idents
    bwalk = None
    if hc.bwalk:
        seq = tuple((lab[0], frozenset({lab})) for lab in hc.bwalk)
        darts = tuple((seq[t], seq[(t + 1) % len(seq)]) for t in range(len(seq)))
        bwalk = BoundaryWalk(seq, darts)

    # final scheme over idents
    lab_to_ident = {next(iter(i[1])): i for i in idents[L]}
    g_fin = graphs[L]
    rot = {}
    sig = {}
    for z, order in hstar_scheme.rotation.items():
        zi = lab_to_ident[z]
        rot[zi] = tuple(lab_to_ident[w] for w in order)
    for e, s in hstar_scheme.signature.items():
        a, b = tuple(e)
        sig[frozenset((lab_to_ident[a], lab_to_ident[b]))] = s
    from .embedding import EmbeddingScheme

    fin_scheme = EmbeddingScheme(g_fin, rot, sig)

    traces = [[]]
    for opts in steps_options:
        traces = [t + [o] for t in traces for o in opts]
    out = []
    for steps in traces:
        schemes = [None] * L + [fin_scheme]
        out.append(
            UnfoldingTrace(
                graphs=graphs,
                schemes=schemes,
                steps=steps,
                special=[],
                special_walk=bwalk,
                params=dict(hc.params),
            )
        )
    return out


def _ordered_splitting(alpha, beta, prime_order, view):
    from .surgery import Splitting

    ordered = {}
    prime_set = set(prime_order)
    for parent, childs in alpha.items():
        if len(childs) > 1:
            a, b = childs
            if b in prime_set:
                a, b = b, a
            ordered[parent] = (a, b)
        else:
            ordered[parent] = childs
    return Splitting(ordered, dict(beta))


def refold_from_collection(g: Graph, hc, hstar_scheme):
    """True iff some reconstructed trace refolds to the claimed surface."""
    from .embedding import euler_genus
    from .errors import GenusCertError, GlobalInconsistency
    from .surgery import refold

    try:
        traces = trace_from_collection(hc, hstar_scheme)
    except (ReassemblyError, KeyError, ValueError):
        return False
    p = hc.params
    for trace in traces:
        try:
            back = refold(trace)
        except (GlobalInconsistency, GenusCertError, ValueError, KeyError, AssertionError):
            continue
        kind = euler_genus(back)
        if p["orientable"] and kind.orientable and kind.genus == p["k"]:
            return True
        if not p["orientable"] and not kind.orientable and kind.genus == p["k"]:
            return True
    return False
