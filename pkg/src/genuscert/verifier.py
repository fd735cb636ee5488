"""The one-round distributed verifier.

Every node decides from its ID, its certificate, and its neighbors'
certificates only.  All checks are node-local projections of the
consistency conditions: tree-shape and stage-edge validity, the
footprint fill and typing re-derived over the node's own tree, chain
links with sibling and antipodal pairings, spanning-tree fragments per
certified object, the planarity stack rules, and the packing recovery.
A malformed certificate is a rejection at its holder, never a crash.
"""

from __future__ import annotations

from collections import defaultdict
from functools import lru_cache

from .certificates import DecodeError, decode_certificate
from .graph import Graph
from .histories import _classify_pair, _produced, fresh_types, level_kind, type_creation_level
from .treecert import Verdict


@lru_cache(maxsize=4096)
def _decode_cached(bits):
    return decode_certificate(bits)


class _Reject(Exception):
    def __init__(self, reason):
        self.reason = reason


def _fail(reason):
    raise _Reject(reason)


class OwnerShape:
    """Level structure of one node's history tree, from its shape data."""

    def __init__(self, owner, nu, shape, depth):
        self.owner = owner
        self.nu = nu
        full = (1 << nu) - 1
        if nu <= 0:
            _fail("empty avatar set")
        self.levels = [{full}]
        self.children = {}  # (level, mask) -> (child1, child2) or (child,)
        self.parent = {}  # (level, mask) -> parent mask
        for level in range(depth):
            cur = self.levels[level]
            splits = {pm: cm for pm, cm in shape[level]} if level < len(shape) else {}
            if len(splits) != len(shape[level] if level < len(shape) else []):
                _fail("duplicate split masks")
            nxt = set()
            for m in cur:
                if m in splits:
                    prime = splits[m]
                    double = m & ~prime
                    if prime == 0 or double == 0 or (prime & ~m):
                        _fail("invalid split mask")
                    self.children[(level, m)] = (prime, double)
                    nxt.add(prime)
                    nxt.add(double)
                    self.parent[(level + 1, prime)] = m
                    self.parent[(level + 1, double)] = m
                else:
                    self.children[(level, m)] = (m,)
                    nxt.add(m)
                    self.parent[(level + 1, m)] = m
            if any(pm not in cur for pm in splits):
                _fail("split of a non-node mask")
            self.levels.append(nxt)
        for m in self.levels[depth]:
            if bin(m).count("1") != 1:
                _fail("non-singleton leaf")

    def has(self, level, mask):
        return 0 <= level < len(self.levels) and mask in self.levels[level]

    def project(self, level, mask):
        return self.parent[(level, mask)]

    def is_split(self, level, mask):
        """Whether the node at ``level`` came from a split at step level-1."""
        parent = self.parent[(level, mask)]
        return len(self.children[(level - 1, parent)]) == 2

    def sibling(self, level, mask):
        parent = self.parent[(level, mask)]
        ch = self.children[(level - 1, parent)]
        if len(ch) != 2:
            return None
        return ch[0] if ch[1] == mask else ch[1]


class _LocalView:
    """is_split / sibling_pair / project over identities, for the fill."""

    def __init__(self, shapes, level):
        self.shapes = shapes
        self.level = level

    def _shape(self, ident):
        owner = ident[0]
        sh = self.shapes.get(owner)
        if sh is None or not sh.has(self.level, ident[1]):
            _fail(f"unknown stage vertex {ident}")
        return sh

    def is_split(self, ident):
        return self._shape(ident).is_split(self.level, ident[1])

    def sibling_pair(self, a, b):
        if a == b or a[0] != b[0]:
            return False
        sh = self._shape(a)
        self._shape(b)
        return sh.is_split(self.level, a[1]) and sh.sibling(self.level, a[1]) == b[1]

    def project(self, ident):
        sh = self._shape(ident)
        return (ident[0], sh.project(self.level, ident[1]))


class _Fp:
    __slots__ = ("pred", "succ", "type_in", "type_out", "obj", "index", "walk_index")

    def __init__(self, pred, succ, type_in=None, type_out=None, obj=None, index=None, walk_index=None):
        self.pred = pred
        self.succ = succ
        self.type_in = type_in
        self.type_out = type_out
        self.obj = obj
        self.index = index
        self.walk_index = walk_index

    def key(self):
        return (self.pred, self.succ, self.type_in, self.type_out)


def verify_node(node, own_bits, neighbor_bits):
    """Accept/reject decision of one node from its 1-neighborhood view."""
    try:
        _verify(node, own_bits, neighbor_bits)
        return Verdict.ok(node)
    except _Reject as r:
        return Verdict.reject(node, r.reason)
    except DecodeError as exc:
        return Verdict.reject(node, f"decode: {exc}")
    except Exception as exc:  # total function: malformed data rejects
        return Verdict.reject(node, f"malformed: {type(exc).__name__}: {exc}")


def _verify(node, own_bits, neighbor_bits):
    try:
        own = _decode_cached(tuple(own_bits))
    except DecodeError as exc:
        _fail(f"decode: {exc}")
    if own.node != node:
        _fail("certificate names another node")
    nbrs = {}
    for w, bits in neighbor_bits.items():
        try:
            nbrs[w] = _decode_cached(tuple(bits))
        except DecodeError as exc:
            _fail(f"neighbor {w} undecodable: {exc}")
        if nbrs[w].node != w:
            _fail(f"neighbor {w} holds a foreign certificate")

    # header uniformity
    header = (
        own.n,
        tuple(sorted(own.params.items())),
        tuple(own.object_table),
        own.hstar_n,
        own.planar_root,
        own.walk_len,
    )
    for w, c in nbrs.items():
        other = (
            c.n,
            tuple(sorted(c.params.items())),
            tuple(c.object_table),
            c.hstar_n,
            c.planar_root,
            c.walk_len,
        )
        if other != header:
            _fail(f"header mismatch with neighbor {w}")
    params = own.params
    if params["orientable"]:
        depth = 3 * params["k"] - 1 if params["k"] else 0
        if params["m"] != 0:
            _fail("orientable parameters carry doublings")
    else:
        if params["m"] < 1 or params["k"] != params["m"] + 2 * params["k_prime"]:
            _fail("inconsistent non-orientable parameters")
        depth = params["m"] + params["k_prime"] + params["k"] - 1
    if depth == 0:
        if own.walk_len != 0 or own.object_table:
            _fail("planar claim with walk data")
    elif own.walk_len <= 0:
        _fail("missing special walk")
    if own.hstar_n < 1:
        _fail("empty final stage")

    # packing recovery: exactly one host per incident edge
    payloads = {}
    all_certs = dict(nbrs)
    all_certs[node] = own
    for w in nbrs:
        ekey = frozenset((node, w))
        found = []
        for holder in (node, w):
            for ep in all_certs[holder].hosted:
                if frozenset((ep.u, ep.v)) == ekey:
                    found.append(ep)
        if len(found) != 1:
            _fail(f"edge {set(ekey)} hosted {len(found)} times")
        payloads[ekey] = found[0]
    for ep in own.hosted:
        if node not in (ep.u, ep.v):
            _fail("hosting a foreign edge")
        other = ep.v if ep.u == node else ep.u
        if other not in nbrs:
            _fail("hosting a non-incident edge")

    # shapes
    shapes = {}
    for v, c in all_certs.items():
        shapes[v] = OwnerShape(v, c.nu, c.shape, depth)

    # stage-edge records per incident edge
    def recs_by_level(ep):
        out = defaultdict(list)
        for r in ep.levels:
            out[r.level].append(r)
        return out

    edge_recs = {}
    for w in nbrs:
        ekey = frozenset((node, w))
        ep = payloads[ekey]
        by_level = recs_by_level(ep)
        # level bounds, mask validity, uniqueness
        seen = set()
        for level, rs in by_level.items():
            if not 0 <= level <= depth:
                _fail("record level out of range")
            for r in rs:
                for owner, mask in ((ep.u, r.mask_u), (ep.v, r.mask_v)):
                    if not shapes[owner].has(level, mask):
                        _fail(f"edge record names a non-node mask at level {level}")
                key = (level, r.mask_u, r.mask_v)
                if key in seen:
                    _fail("duplicate edge record")
                seen.add(key)
        if [r for r in by_level.get(0, [])] != [
            r
            for r in by_level.get(0, [])
            if r.mask_u == (1 << shapes[ep.u].nu) - 1
            and r.mask_v == (1 << shapes[ep.v].nu) - 1
        ] or len(by_level.get(0, [])) != 1:
            _fail(f"edge {set(ekey)} lacks its level-0 record")
        # refinement: children of each record form a non-empty matching
        for level in range(depth):
            parents = {(r.mask_u, r.mask_v): r for r in by_level.get(level, [])}
            groups = defaultdict(list)
            for r in by_level.get(level + 1, []):
                pu = shapes[ep.u].project(level + 1, r.mask_u)
                pv = shapes[ep.v].project(level + 1, r.mask_v)
                if (pu, pv) not in parents:
                    _fail("edge record without a parent record")
                groups[(pu, pv)].append(r)
            for key, rec in parents.items():
                rs = groups.get(key, [])
                if not rs:
                    _fail("edge record with no child records")
                us = [r.mask_u for r in rs]
                vs = [r.mask_v for r in rs]
                if len(set(us)) != len(us) or len(set(vs)) != len(vs):
                    _fail("edge records do not form a matching")
        edge_recs[w] = by_level

    # type lookup for stage edges incident to own idents
    def rec_type(w, level, own_mask, other_mask):
        ep = payloads[frozenset((node, w))]
        for r in edge_recs[w].get(level, []):
            mu, mv = (r.mask_u, r.mask_v) if ep.u == node else (r.mask_v, r.mask_u)
            if mu == own_mask and mv == other_mask:
                return r.etype
        return "missing"

    # collect own footprints (each must appear on both its host edges)
    own_fps = defaultdict(list)  # (level, mask) -> [_Fp]
    copies = defaultdict(list)
    for w in nbrs:
        ep = payloads[frozenset((node, w))]
        for f in ep.footprints:
            if f.y_owner != node:
                continue
            copies[f.key()].append(w)
    for key, hosts in sorted(copies.items(), key=repr):
        (level, seq, y_owner, y_mask, pred_owner, pred_mask, succ_owner, succ_mask,
         t_in, t_out, obj, index, walk_index) = key
        want = {pred_owner, succ_owner}
        if want - set(nbrs):
            _fail("footprint references a non-neighbor")
        if sorted(hosts) != sorted(want):
            _fail("footprint copies missing from a host edge")
        if not shapes[node].has(level, y_mask):
            _fail("footprint at a non-node mask")
        for owner, mask in ((pred_owner, pred_mask), (succ_owner, succ_mask)):
            if not shapes[owner].has(level, mask):
                _fail("footprint endpoint is not a stage vertex")
        # the two footprint edges must be stage edges with matching types
        if rec_type(pred_owner, level, y_mask, pred_mask) in ("missing",):
            _fail("footprint pred edge is not a stage edge")
        if rec_type(succ_owner, level, y_mask, succ_mask) in ("missing",):
            _fail("footprint succ edge is not a stage edge")
        own_fps[(level, y_mask)].append(
            _Fp(
                pred=(pred_owner, pred_mask),
                succ=(succ_owner, succ_mask),
                type_in=t_in,
                type_out=t_out,
                obj=obj,
                index=index,
                walk_index=walk_index,
            )
        )

    # visible neighbor footprints (for link checks)
    nbr_fps = defaultdict(list)  # owner -> [_Fp at (level, y_mask)]
    for w in nbrs:
        ep = payloads[frozenset((node, w))]
        for f in ep.footprints:
            if f.y_owner == node:
                continue
            nbr_fps[f.y_owner].append(f)

    _check_fill(node, shapes, own_fps, params, depth, own.walk_len)
    _check_chain_links(node, own, shapes, own_fps, nbr_fps, params, depth)
    _check_tree_frags(node, own, nbrs)
    _check_edge_types(node, shapes, payloads, edge_recs, own_fps, nbr_fps, params, depth, nbrs)
    _check_planarity_local(node, own, nbrs, shapes, payloads, own_fps, depth)


def _check_fill(node, shapes, own_fps, params, depth, walk_len):
    """Re-derive the fill and typing over the node's own tree."""
    sh = shapes[node]
    # leaves: footprints at level == depth must carry walk indices
    derived = {}
    for mask in sh.levels[depth]:
        fps = []
        for f in own_fps.get((depth, mask), []):
            if f.walk_index is None:
                _fail("leaf footprint without a walk index")
            fps.append(_Fp(f.pred, f.succ, walk_index=f.walk_index))
        derived[(depth, mask)] = fps
    events = {}
    for level in range(depth, 0, -1):
        view = _LocalView(shapes, level)
        kind, _ = level_kind(params, level)
        for pmask in sh.levels[level - 1]:
            ch = sh.children[(level - 1, pmask)]
            if len(ch) == 1:
                ups = []
                for f in derived[(level, ch[0])]:
                    ups.append(_Fp(view.project(f.pred), view.project(f.succ)))
                derived[(level - 1, pmask)] = ups
                continue
            c1, c2 = ch
            f1s = derived[(level, c1)]
            f2s = derived[(level, c2)]
            cands = []
            for i, f1 in enumerate(f1s):
                for j, f2 in enumerate(f2s):
                    rule = _classify_pair(view, f1, f2, kind)
                    if rule:
                        cands.append((i, j, rule))
            if len(cands) != 1:
                _fail(
                    "no rule applies at a binary node"
                    if not cands
                    else "ambiguous rules at a binary node"
                )
            i, j, rule = cands[0]
            f1, f2 = f1s[i], f2s[j]
            produced = [
                _Fp(g.pred, g.succ) for g in _produced(rule, view, (node, pmask), f1, f2)
            ]
            ups = list(produced)
            for fs, skip in ((f1s, i), (f2s, j)):
                for t, f in enumerate(fs):
                    if t != skip:
                        ups.append(_Fp(view.project(f.pred), view.project(f.succ)))
            derived[(level - 1, pmask)] = ups
            events[(level - 1, pmask)] = (rule, f1, f2, produced)
    for mask in sh.levels[0]:
        if derived[(0, mask)]:
            _fail("root retains footprints")
    # types downward
    used_parents = set()
    for level in range(0, depth):
        tp, td = fresh_types(params, level + 1)
        for pmask in sh.levels[level]:
            ev = events.get((level, pmask))
            if ev is None:
                ch = sh.children[(level, pmask)]
                if len(ch) == 2:
                    continue
            else:
                rule, f1, f2, produced = ev
                if rule == "elementary":
                    f1.type_in = f1.type_out = tp
                    f2.type_in = f2.type_out = td
                elif rule == "crosscap":
                    f1.type_in = f1.type_out = tp
                    f2.type_in = f2.type_out = tp
                elif rule == "single_a":
                    (g,) = produced
                    f1.type_in, f1.type_out = g.type_in, tp
                    f2.type_in, f2.type_out = td, g.type_out
                elif rule == "single_b":
                    (g,) = produced
                    f1.type_in, f1.type_out = tp, g.type_out
                    f2.type_in, f2.type_out = g.type_in, td
                elif rule == "double":
                    g1, g2 = produced
                    f1.type_in, f1.type_out = g1.type_in, g2.type_out
                    f2.type_in, f2.type_out = g2.type_in, g1.type_out
            # vacancy: project-match child footprints against parent's
            view = _LocalView(shapes, level + 1)
            consumed = set()
            if ev is not None:
                consumed = {id(ev[1]), id(ev[2])}
            parent_pool = [
                f
                for f in derived[(level, pmask)]
                if ev is None or not any(f is g for g in ev[3])
            ]
            for cmask in sh.children[(level, pmask)]:
                for f in derived[(level + 1, cmask)]:
                    if id(f) in consumed:
                        continue
                    key = (view.project(f.pred), view.project(f.succ))
                    for g in parent_pool:
                        if (
                            (g.pred, g.succ) == key
                            and g.type_in is not None
                            and id(g) not in used_parents
                        ):
                            f.type_in, f.type_out = g.type_in, g.type_out
                            used_parents.add(id(g))
                            break
    # compare with the stored footprints, level by level
    for (level, mask), fps in derived.items():
        stored = own_fps.get((level, mask), [])
        a = sorted((f.key() for f in fps), key=repr)
        b = sorted((f.key() for f in stored), key=repr)
        if a != b:
            _fail(f"stored footprints at level {level} differ from the derived fill")
    for (level, mask), stored in own_fps.items():
        if (level, mask) not in derived:
            _fail("footprints at an unknown tree node")


def _object_map(own):
    out = {}
    for i, (kind, idx, length, root) in enumerate(own.object_table):
        out[(kind, idx)] = (length, root, i)
    return out


def _check_chain_links(node, own, shapes, own_fps, nbr_fps, params, depth):
    objects = _object_map(own)
    if own.walk_len:
        if ("B", 0) not in objects or objects[("B", 0)][0] != own.walk_len:
            _fail("walk object missing from the table")

    def visible(owner, level, y_mask, want_obj, want_index=None, want_walk=None):
        for f in nbr_fps.get(owner, []):
            if f.level != level or f.y_mask != y_mask:
                continue
            if want_obj is not None and f.obj != want_obj:
                continue
            if want_index is not None and f.index != want_index:
                continue
            if want_walk is not None and f.walk_index != want_walk:
                continue
            return f
        return None

    holds_zero = set()
    for (level, mask), fps in own_fps.items():
        for f in fps:
            if f.walk_index is not None:
                N = own.walk_len
                if not 0 <= f.walk_index < N:
                    _fail("walk index out of range")
                if f.walk_index == 0:
                    holds_zero.add(("B", 0))
                    if len([1 for fs in own_fps.values() for x in fs if x.walk_index == 0]) > 1:
                        _fail("duplicate walk index 0")
                nxt = visible(
                    f.succ[0], level, f.succ[1], None, want_walk=(f.walk_index + 1) % N
                )
                if nxt is None or (nxt.pred_owner, nxt.pred_mask) != (node, mask):
                    _fail("walk successor link broken")
                prv = visible(
                    f.pred[0], level, f.pred[1], None, want_walk=(f.walk_index - 1) % N
                )
                if prv is None or (prv.succ_owner, prv.succ_mask) != (node, mask):
                    _fail("walk predecessor link broken")
            if f.obj is None:
                continue
            if f.obj not in objects:
                _fail(f"unknown chain object {f.obj}")
            length, root, _ = objects[f.obj]
            kind = f.obj[0]
            if f.index is None or not 0 <= f.index < length:
                _fail("chain index out of range")
            if f.index == 0:
                holds_zero.add(f.obj)
            level_expect = type_creation_level(params, f.obj if kind != "B" else ("C'", 1))
            if kind != "B" and level != level_expect:
                _fail("chain footprint at the wrong level")
            sh = shapes[node]
            if kind in ("C'", "C''"):
                if f.type_in != f.obj or f.type_out != f.obj:
                    _fail("cycle chain member mistyped")
                fwd = kind == "C'"
                succ_idx = (f.index + (1 if fwd else -1)) % length
                pred_idx = (f.index - (1 if fwd else -1)) % length
                nxt = visible(f.succ[0], level, f.succ[1], f.obj, want_index=succ_idx)
                prv = visible(f.pred[0], level, f.pred[1], f.obj, want_index=pred_idx)
                if nxt is None or prv is None:
                    _fail(f"{kind} chain link broken at {f.index}")
                # sibling pairing with the opposite cycle at the same index
                twin_obj = ("C''" if fwd else "C'", f.obj[1])
                twin_mask = sh.sibling(level, mask)
                if twin_mask is None:
                    _fail("cycle chain member is not a split copy")
                twin = [
                    x
                    for x in own_fps.get((level, twin_mask), [])
                    if x.obj == twin_obj and x.index == f.index
                ]
                if not twin:
                    _fail("cycle chains are not aligned sibling-wise")
            elif kind in ("P'", "P''"):
                if f.obj[1] < 1:
                    _fail("bad path index")
                fwd = kind == "P'"
                if f.index + 1 < length:
                    idxn = f.index + 1
                    ident = f.succ if fwd else f.pred
                    nxt = visible(ident[0], level, ident[1], f.obj, want_index=idxn)
                    if nxt is None:
                        _fail(f"{kind} chain link broken at {f.index}")
                    tcheck = f.type_out if fwd else f.type_in
                    if tcheck != f.obj:
                        _fail("path chain member mistyped")
                if f.index > 0:
                    ident = f.pred if fwd else f.succ
                    prv = visible(ident[0], level, ident[1], f.obj, want_index=f.index - 1)
                    if prv is None:
                        _fail(f"{kind} chain link broken at {f.index}")
                    tcheck = f.type_in if fwd else f.type_out
                    if tcheck != f.obj:
                        _fail("path chain member mistyped")
                twin_obj = ("P''" if fwd else "P'", f.obj[1])
                twin_mask = sh.sibling(level, mask)
                if twin_mask is None:
                    _fail("path chain member is not a split copy")
                twin = [
                    x
                    for x in own_fps.get((level, twin_mask), [])
                    if x.obj == twin_obj and x.index == f.index
                ]
                if not twin:
                    _fail("path chains are not aligned sibling-wise")
            elif kind == "D'":
                if f.type_in != f.obj or f.type_out != f.obj:
                    _fail("doubling chain member mistyped")
                if length % 2 != 0:
                    _fail("doubling chain of odd length")
                nxt = visible(f.succ[0], level, f.succ[1], f.obj, want_index=(f.index + 1) % length)
                prv = visible(f.pred[0], level, f.pred[1], f.obj, want_index=(f.index - 1) % length)
                if nxt is None or prv is None:
                    _fail(f"doubling chain link broken at {f.index}")
                anti_mask = sh.sibling(level, mask)
                if anti_mask is None:
                    _fail("doubling chain member is not a split copy")
                anti_idx = (f.index + length // 2) % length
                anti = [
                    x
                    for x in own_fps.get((level, anti_mask), [])
                    if x.obj == f.obj and x.index == anti_idx
                ]
                if not anti:
                    _fail("doubling chain is not antipodally paired")
            else:
                _fail("unknown chain kind")
    for obj, (length, root, _) in objects.items():
        if node == root and obj not in holds_zero:
            _fail(f"root does not hold index 0 of {obj}")
        if node != root and obj in holds_zero:
            _fail(f"non-root holds index 0 of {obj}")


def _check_tree_frags(node, own, nbrs):
    objects = own.object_table
    if len(own.tree_frags) != len(objects):
        _fail("tree fragment count mismatch")
    for i, (kind, idx, length, root) in enumerate(objects):
        parent, dist = own.tree_frags[i]
        if node == root:
            if dist != 0 or parent != 0:
                _fail("bad root tree fragment")
            continue
        if dist == 0 or parent == 0:
            _fail("non-root claims distance zero")
        if parent not in nbrs:
            _fail("tree parent is not a neighbor")
        pfrag = nbrs[parent].tree_frags[i] if i < len(nbrs[parent].tree_frags) else None
        if pfrag is None or pfrag[1] != dist - 1:
            _fail("tree distance does not decrease")


def _check_edge_types(node, shapes, payloads, edge_recs, own_fps, nbr_fps, params, depth, nbrs):
    # typed records must persist downward and be covered at creation level
    for w in nbrs:
        ep = payloads[frozenset((node, w))]
        by_level = edge_recs[w]
        for level, rs in by_level.items():
            for r in rs:
                if r.etype is None:
                    continue
                created = type_creation_level(params, r.etype)
                if created > level:
                    _fail("edge typed before its creation level")
                if created < level:
                    pu = shapes[ep.u].project(level, r.mask_u)
                    pv = shapes[ep.v].project(level, r.mask_v)
                    par = [
                        r2
                        for r2 in by_level.get(level - 1, [])
                        if (r2.mask_u, r2.mask_v) == (pu, pv)
                    ]
                    if not par or par[0].etype != r.etype:
                        _fail("edge type does not persist from the previous level")
                else:
                    own_mask, other_mask = (
                        (r.mask_u, r.mask_v) if ep.u == node else (r.mask_v, r.mask_u)
                    )
                    covered = any(
                        (f.type_in == r.etype and f.pred == (w, other_mask))
                        or (f.type_out == r.etype and f.succ == (w, other_mask))
                        for f in own_fps.get((level, own_mask), [])
                    ) or any(
                        f.level == level
                        and f.y_mask == other_mask
                        and (
                            (f.type_in == r.etype and (f.pred_owner, f.pred_mask) == (node, own_mask))
                            or (f.type_out == r.etype and (f.succ_owner, f.succ_mask) == (node, own_mask))
                        )
                        for f in nbr_fps.get(w, [])
                    )
                    if not covered:
                        _fail("typed edge record without a covering footprint")
                # conversely a typed record's children: exactly one child with the type
                if level < depth:
                    childs = [
                        r2
                        for r2 in by_level.get(level + 1, [])
                        if shapes[ep.u].project(level + 1, r2.mask_u) == r.mask_u
                        and shapes[ep.v].project(level + 1, r2.mask_v) == r.mask_v
                    ]
                    typed = [r2 for r2 in childs if r2.etype == r.etype]
                    if len(typed) != 1:
                        _fail("typed edge does not persist to exactly one child")
        # footprint types must agree with the records
        for (level, mask), fps in own_fps.items():
            for f in fps:
                for ident, t in ((f.pred, f.type_in), (f.succ, f.type_out)):
                    if ident[0] != w:
                        continue
                    rt = None
                    for r in by_level.get(level, []):
                        mu, mv = (r.mask_u, r.mask_v) if ep.u == node else (r.mask_v, r.mask_u)
                        if mu == mask and mv == ident[1]:
                            rt = r.etype
                    if t is not None and rt != t:
                        _fail("footprint type disagrees with the edge record")


def _check_planarity_local(node, own, nbrs, shapes, payloads, own_fps, depth):
    from .planarity import ChordRec, MoveRec, PlanarityData, VisitRec, check_planarity_at

    def label_of(owner, mask):
        if bin(mask).count("1") != 1:
            _fail("planarity record at a non-leaf mask")
        return (owner, mask.bit_length())

    tree_moves = {}
    chords = {}
    star_adj = defaultdict(set)
    for w in list(nbrs) + []:
        ep = payloads[frozenset((node, w))]
        for r in ep.levels:
            if r.level == depth:
                a = label_of(ep.u, r.mask_u)
                b = label_of(ep.v, r.mask_v)
                star_adj[a].add(b)
                star_adj[b].add(a)
        for pr in ep.planar:
            a = label_of(ep.u, pr.mask_u)
            b = label_of(ep.v, pr.mask_v)
            ekey = frozenset((a, b))
            if pr.is_tree:
                ms = []
                for m in pr.moves:
                    v_from = a if m.forward else b
                    v_to = b if m.forward else a
                    ms.append(
                        MoveRec(
                            pos_from=m.pos_from,
                            pos_to=(m.pos_from + 1) % (2 * (own.hstar_n - 1)),
                            v_from=v_from,
                            v_to=v_to,
                            visit_from=VisitRec(
                                pos=m.pos_from,
                                vertex=v_from,
                                low=m.low_from,
                                handoff=m.handoff_from,
                                bpos=m.bpos_from,
                            ),
                            visit_to=VisitRec(
                                pos=(m.pos_from + 1) % (2 * (own.hstar_n - 1)),
                                vertex=v_to,
                                low=m.low_to,
                                handoff=m.handoff_to,
                                bpos=m.bpos_to,
                            ),
                        )
                    )
                tree_moves[ekey] = tuple(ms)
            else:
                x, y = (a, b) if pr.x_is_u else (b, a)
                chords[ekey] = ChordRec(
                    x=x, y=y, pa=pr.pa, pb=pr.pb, parent=pr.parent, jump_bpos=pr.jump_bpos
                )
    data = PlanarityData(
        n_vertices=own.hstar_n,
        tour_len=2 * (own.hstar_n - 1),
        root=own.planar_root,
        walk_len=own.walk_len,
        tree_moves=tree_moves,
        chords=chords,
    )
    my_avatars = [(node, i + 1) for i in range(own.nu)]
    walk_occ = defaultdict(list)
    for (level, mask), fps in own_fps.items():
        if level != depth:
            continue
        for f in fps:
            if f.walk_index is not None:
                walk_occ[label_of(node, mask)].append(f.walk_index)
    g_star = Graph(
        {
            v: set(star_adj.get(v, set()))
            for v in set(my_avatars) | set(star_adj)
        }
    )
    problems = check_planarity_at(g_star, my_avatars, data, walk_occ)
    if problems:
        _fail(f"planarity: {problems[0]}")


def run_verifier(g: Graph, assignment):
    """Simulate the synchronous single round; accept iff unanimous."""
    verdicts = []
    for v in sorted(g.vertices):
        own = assignment.get(v)
        if own is None:
            verdicts.append(Verdict.reject(v, "no certificate"))
            continue
        nb = {w: assignment.get(w, ()) for w in g.neighbors(v)}
        verdicts.append(verify_node(v, own, nb))
    return verdicts


def unanimous(verdicts):
    return all(v.accept for v in verdicts)
