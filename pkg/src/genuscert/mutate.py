"""Adversarial mutation of certificate assignments.

Every operator rewrites an honest assignment into a syntactically
well-formed but semantically corrupted one (bit flips may also break
the syntax); the soundness campaign demands every mutant be rejected by
at least one node.
"""

from __future__ import annotations

import random

from .certificates import decode_certificate, encode_certificate

OPERATORS = (
    "bit_flip",
    "footprint_swap",
    "chain_reversal",
    "distance_corruption",
    "root_fork",
    "avatar_relabel",
    "payload_drop",
    "walk_splice",
)


def mutate(assignment: dict, rng: random.Random, operator: str):
    """One corrupted assignment; returns (assignment, note)."""
    if operator not in OPERATORS:
        raise ValueError(operator)
    out = dict(assignment)
    fn = globals()["_op_" + operator]
    note = fn(out, rng)
    if all(out[v] == assignment[v] for v in assignment):
        # the draw was a no-op (e.g., nothing to corrupt); fall back
        note = _op_bit_flip(out, rng) if operator != "bit_flip" else note
    return out, note


def _pick_node(assignment, rng):
    return rng.choice(sorted(assignment))


def _decode_all(assignment):
    return {v: decode_certificate(bits) for v, bits in assignment.items()}


def _op_bit_flip(out, rng):
    v = _pick_node(out, rng)
    bits = list(out[v])
    i = rng.randrange(len(bits))
    bits[i] ^= 1
    out[v] = tuple(bits)
    return f"bit {i} of node {v}"


def _op_footprint_swap(out, rng):
    certs = _decode_all(out)
    spots = []
    for v, c in certs.items():
        for ei, ep in enumerate(c.hosted):
            for fi, f in enumerate(ep.footprints):
                spots.append((v, ei, fi))
    if len(spots) < 2:
        return "no footprints"
    a, b = rng.sample(spots, 2)
    fa = certs[a[0]].hosted[a[1]].footprints[a[2]]
    fb = certs[b[0]].hosted[b[1]].footprints[b[2]]
    fa.pred_owner, fb.pred_owner = fb.pred_owner, fa.pred_owner
    fa.pred_mask, fb.pred_mask = fb.pred_mask, fa.pred_mask
    for v in {a[0], b[0]}:
        out[v] = encode_certificate(certs[v])
    return f"swapped footprint preds across {a[0]} and {b[0]}"


def _op_chain_reversal(out, rng):
    certs = _decode_all(out)
    table = next(iter(certs.values())).object_table
    rev_objs = [
        (kind, idx, length) for (kind, idx, length, _) in table if kind in ("C''", "D'")
    ]
    if not rev_objs:
        return "no reversible chain"
    kind, idx, length = rng.choice(rev_objs)
    touched = set()
    for v, c in certs.items():
        for ep in c.hosted:
            for f in ep.footprints:
                if f.obj == (kind, idx) and f.index is not None:
                    f.index = (length - f.index) % length
                    touched.add(v)
    for v in touched:
        out[v] = encode_certificate(certs[v])
    return f"reversed chain {(kind, idx)}"


def _op_distance_corruption(out, rng):
    certs = _decode_all(out)
    v = _pick_node(out, rng)
    c = certs[v]
    if not c.tree_frags:
        return "no tree fragments"
    i = rng.randrange(len(c.tree_frags))
    parent, dist = c.tree_frags[i]
    c.tree_frags[i] = (parent, dist + rng.randrange(1, 5))
    out[v] = encode_certificate(c)
    return f"distance of object {i} at node {v}"


def _op_root_fork(out, rng):
    certs = _decode_all(out)
    v = _pick_node(out, rng)
    c = certs[v]
    if not c.object_table:
        return "no objects"
    i = rng.randrange(len(c.object_table))
    kind, idx, length, root = c.object_table[i]
    c.object_table[i] = (kind, idx, length, v if v != root else (root % c.n) + 1)
    out[v] = encode_certificate(c)
    return f"root of object {i} forked at node {v}"


def _op_avatar_relabel(out, rng):
    certs = _decode_all(out)
    candidates = [v for v, c in certs.items() if c.nu >= 2]
    if not candidates:
        return "no multi-avatar node"
    v = rng.choice(candidates)
    c = certs[v]
    perm = list(range(c.nu))
    while perm == list(range(c.nu)):
        rng.shuffle(perm)

    def remap(mask):
        new = 0
        for i in range(c.nu):
            if mask & (1 << i):
                new |= 1 << perm[i]
        return new

    c.shape = [[(remap(p), remap(q)) for p, q in lvl] for lvl in c.shape]
    for ep in c.hosted:
        side = "u" if ep.u == v else ("v" if ep.v == v else None)
        for r in ep.levels:
            if side == "u":
                r.mask_u = remap(r.mask_u)
            elif side == "v":
                r.mask_v = remap(r.mask_v)
        for f in ep.footprints:
            if f.y_owner == v:
                f.y_mask = remap(f.y_mask)
            if f.pred_owner == v:
                f.pred_mask = remap(f.pred_mask)
            if f.succ_owner == v:
                f.succ_mask = remap(f.succ_mask)
        for pr in ep.planar:
            if side == "u":
                pr.mask_u = remap(pr.mask_u)
            elif side == "v":
                pr.mask_v = remap(pr.mask_v)
    out[v] = encode_certificate(c)
    return f"avatars of node {v} relabeled"


def _op_payload_drop(out, rng):
    certs = _decode_all(out)
    candidates = [v for v, c in certs.items() if c.hosted]
    if not candidates:
        return "nothing hosted"
    v = rng.choice(candidates)
    c = certs[v]
    i = rng.randrange(len(c.hosted))
    dropped = c.hosted.pop(i)
    out[v] = encode_certificate(c)
    return f"payload {dropped.u}-{dropped.v} dropped at node {v}"


def _op_walk_splice(out, rng):
    certs = _decode_all(out)
    walk_len = next(iter(certs.values())).walk_len
    if walk_len < 2:
        return "no walk"
    t1, t2 = rng.sample(range(walk_len), 2)
    touched = set()
    for v, c in certs.items():
        for ep in c.hosted:
            for f in ep.footprints:
                if f.walk_index == t1:
                    f.walk_index = t2
                    touched.add(v)
                elif f.walk_index == t2:
                    f.walk_index = t1
                    touched.add(v)
    for v in touched:
        out[v] = encode_certificate(certs[v])
    return f"walk indices {t1} and {t2} swapped"
