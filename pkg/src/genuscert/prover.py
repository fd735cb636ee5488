"""Honest certificate construction.

Runs the unfolding pipeline, decorates the histories, builds the
planarity and spanning-tree sub-certificates, and packs everything into
per-node bit strings via the degeneracy hosting rule.
"""

from __future__ import annotations

from collections import defaultdict

from .certificates import (
    Certificate,
    EdgePayload,
    FootprintRec,
    LevelEdgeRec,
    MoveRecBits,
    PlanarEdgeRec,
    encode_certificate,
    host_assignment,
)
from .embedding import EmbeddingScheme, euler_genus
from .graph import Graph, spanning_tree
from .histories import HistoryCollection, decorate_histories, type_creation_level
from .planarity import planarity_subcertificates
from .surgery import UnfoldingTrace, unfold


def mask_of(avatars):
    m = 0
    for (_, i) in avatars:
        m |= 1 << (i - 1)
    return m


def hstar_label_scheme(trace: UnfoldingTrace, hc: HistoryCollection):
    """The final-stage scheme with vertices renamed to avatar labels."""
    from .histories import _token_idents

    ti = _token_idents(hc, trace, hc.depth)
    lab = {tok: next(iter(ident[1])) for tok, ident in ti.items()}
    sch = trace.final_scheme
    g = Graph(
        {lab[v]: {lab[w] for w in sch.graph.neighbors(v)} for v in sch.graph.vertices}
    )
    rot = {lab[v]: tuple(lab[w] for w in sch.rotation[v]) for v in sch.graph.vertices}
    sig = {frozenset(lab[x] for x in e): s for e, s in sch.signature.items()}
    return EmbeddingScheme(g, rot, sig)


def chain_objects(hc: HistoryCollection):
    """All chain objects with their member lists, ordered by index."""
    chains = defaultdict(dict)
    for n in hc.all_nodes():
        for f in n.footprints:
            if f.walk_index is not None:
                chains[("B", 0)][f.walk_index] = (n, f)
            if f.obj is not None:
                chains[(f.obj[0], f.obj[1])][f.index] = (n, f)
    out = {}
    for key, members in chains.items():
        out[key] = [members[i] for i in sorted(members)]
    return out


class ProverError(Exception):
    pass


def build_assignment(g: Graph, scheme: EmbeddingScheme):
    """Certificates for every node of an embedded graph.

    Returns (assignment dict node -> bit tuple, trace, hc) so callers
    can inspect the intermediate artifacts.
    """
    trace = unfold(g, scheme)
    hc = decorate_histories(trace)
    return assignment_from_histories(g, trace, hc), trace, hc


def assignment_from_histories(g: Graph, trace: UnfoldingTrace, hc: HistoryCollection):
    n = len(g)
    params = dict(hc.params)
    L = hc.depth

    hstar = hstar_label_scheme(trace, hc)
    bwalk = list(hc.bwalk) if hc.bwalk else []
    walk_len = len(bwalk)

    # planarity data
    if bwalk:
        root_avatar = min(bwalk)
    else:
        root_avatar = min(hstar.graph.vertices)
    parent_h, _ = spanning_tree(hstar.graph, root_avatar)
    pdata = planarity_subcertificates(hstar, bwalk, parent_h)

    # chain objects and their per-object spanning trees over g
    chains = chain_objects(hc)
    object_table = []
    object_trees = []
    for key in sorted(chains, key=lambda k: (k[0], k[1])):
        members = chains[key]
        root_owner = members[0][0].owner
        object_table.append((key[0], key[1], len(members), root_owner))
        par, dist = spanning_tree(g, root_owner)
        object_trees.append((par, dist))
    if bwalk and ("B", 0) not in chains:
        raise ProverError("walk without a B chain")

    # per-node trees: shapes and footprints
    shape = {v: [[] for _ in range(L)] for v in g.vertices}
    for v, tree in hc.trees.items():
        stack = [tree]
        while stack:
            node = stack.pop()
            if len(node.children) == 2:
                shape[v][node.level].append(
                    (mask_of(node.avatars), mask_of(node.children[0].avatars))
                )
            stack.extend(node.children)
    nu = {v: len(hc.trees[v].avatars) for v in g.vertices}

    # stage-edge records and footprint records per g-edge
    payloads = {}
    for e in g.edges():
        u, w = sorted(e)
        payloads[e] = EdgePayload(u=u, v=w)

    edge_types = {}
    for node in hc.all_nodes():
        for f in node.footprints:
            for (a, b, t) in (
                (f.pred, node.ident, f.type_in),
                (node.ident, f.succ, f.type_out),
            ):
                if t is None:
                    continue
                key = (node.level, frozenset((a, b)))
                if key in edge_types and edge_types[key] != t:
                    raise ProverError(f"conflicting types on stage edge {key}")
                edge_types[key] = t

    for node in hc.all_nodes():
        v = node.owner
        for nb_owner, nb_avatars in node.neighbors:
            if (v, nb_owner) > (nb_owner, v):
                continue  # visit each stage edge once, from the smaller side
            e = frozenset((v, nb_owner))
            t = edge_types.get(
                (node.level, frozenset((node.ident, (nb_owner, nb_avatars))))
            )
            ep = payloads[e]
            mu, mw = (
                (mask_of(node.avatars), mask_of(nb_avatars))
                if ep.u == v
                else (mask_of(nb_avatars), mask_of(node.avatars))
            )
            ep.levels.append(LevelEdgeRec(level=node.level, mask_u=mu, mask_v=mw, etype=t))

    seq_counter = defaultdict(int)
    for node in hc.all_nodes():
        v = node.owner
        for f in node.footprints:
            dup_key = (
                v, node.level, mask_of(node.avatars), f.pred, f.succ,
                f.type_in, f.type_out, f.obj, f.index, f.walk_index,
            )
            seq = seq_counter[dup_key]
            seq_counter[dup_key] += 1
            rec = FootprintRec(
                level=node.level,
                seq=seq,
                y_owner=v,
                y_mask=mask_of(node.avatars),
                pred_owner=f.pred[0],
                pred_mask=mask_of(f.pred[1]),
                succ_owner=f.succ[0],
                succ_mask=mask_of(f.succ[1]),
                type_in=f.type_in,
                type_out=f.type_out,
                obj=f.obj,
                index=f.index,
                walk_index=f.walk_index,
            )
            hosts = {frozenset((v, f.pred[0])), frozenset((v, f.succ[0]))}
            for e in hosts:
                payloads[e].footprints.append(rec)

    # planarity records on the final-stage edges
    def chord_ref(c):
        return (c.pa, c.pb)

    for e_h, ms in pdata.tree_moves.items():
        x, y = tuple(e_h)
        ge = frozenset((x[0], y[0]))
        ep = payloads[ge]
        mu = mask_of({x if x[0] == ep.u else y})
        mv = mask_of({y if x[0] == ep.u else x})
        u_avatar = x if x[0] == ep.u else y
        moves = []
        for m in ms:
            moves.append(
                MoveRecBits(
                    pos_from=m.pos_from,
                    forward=(m.v_from == u_avatar),
                    low_from=m.visit_from.low,
                    handoff_from=m.visit_from.handoff,
                    bpos_from=m.visit_from.bpos,
                    low_to=m.visit_to.low,
                    handoff_to=m.visit_to.handoff,
                    bpos_to=m.visit_to.bpos,
                )
            )
        ep.planar.append(
            PlanarEdgeRec(mask_u=mu, mask_v=mv, is_tree=True, moves=tuple(moves))
        )
    for e_h, c in pdata.chords.items():
        x, y = tuple(e_h)
        ge = frozenset((x[0], y[0]))
        ep = payloads[ge]
        mu = mask_of({x if x[0] == ep.u else y})
        mv = mask_of({y if x[0] == ep.u else x})
        ep.planar.append(
            PlanarEdgeRec(
                mask_u=mu,
                mask_v=mv,
                is_tree=False,
                pa=c.pa,
                pb=c.pb,
                x_is_u=(c.x[0] == ep.u),
                parent=c.parent,
                jump_bpos=c.jump_bpos,
            )
        )

    hosts = host_assignment(g)
    certs = {}
    for v in sorted(g.vertices):
        hosted = [payloads[e] for e in sorted(hosts, key=lambda e: sorted(e)) if hosts[e] == v]
        cert = Certificate(
            node=v,
            n=n,
            params=params,
            nu=nu[v],
            shape=shape[v],
            object_table=object_table,
            tree_frags=[
                (par.get(v) or 0, dist[v]) for (par, dist) in object_trees
            ],
            hstar_n=len(hstar.graph),
            planar_root=root_avatar,
            walk_len=walk_len,
            hosted=hosted,
        )
        certs[v] = encode_certificate(cert)
    return certs
