"""Certificate structure, bit-exact encoding, and degeneracy packing.

A node certificate is the node's own payload (parameters, history tree
shape, per-object spanning-tree fragments) plus the payloads of the
incident edges it hosts.  Each edge is hosted by the endpoint removed
earlier in the degeneracy elimination order, so no node hosts more than
d edges.  Everything is serialized with fixed-width fields derived from
the ID range; decoding never needs context beyond the owner's ID.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .bits import BitReader, BitWriter, id_width
from .graph import Graph, degeneracy_order

TYPE_KINDS = ("C'", "C''", "P'", "P''", "D'")
OBJ_KINDS = ("B",) + TYPE_KINDS


@dataclass
class FootprintRec:
    level: int
    seq: int  # per-node disambiguator
    y_owner: int
    y_mask: int
    pred_owner: int
    pred_mask: int
    succ_owner: int
    succ_mask: int
    type_in: tuple | None
    type_out: tuple | None
    obj: tuple | None
    index: int | None
    walk_index: int | None

    def key(self):
        return (
            self.level,
            self.seq,
            self.y_owner,
            self.y_mask,
            self.pred_owner,
            self.pred_mask,
            self.succ_owner,
            self.succ_mask,
            self.type_in,
            self.type_out,
            self.obj,
            self.index,
            self.walk_index,
        )


@dataclass
class LevelEdgeRec:
    level: int
    mask_u: int
    mask_v: int
    etype: tuple | None


@dataclass
class MoveRecBits:
    pos_from: int
    forward: bool  # True: u-avatar -> w-avatar
    low_from: tuple | None
    handoff_from: tuple | None
    bpos_from: int | None
    low_to: tuple | None
    handoff_to: tuple | None
    bpos_to: int | None


@dataclass
class PlanarEdgeRec:
    mask_u: int
    mask_v: int
    is_tree: bool
    moves: tuple = ()  # two MoveRecBits for tree edges
    # chord fields
    pa: tuple | None = None  # (pos, rank), on the x side
    pb: tuple | None = None
    x_is_u: bool = True
    parent: tuple | None = None  # ((pos, rank), (pos, rank))
    jump_bpos: int | None = None


@dataclass
class EdgePayload:
    u: int
    v: int
    levels: list = field(default_factory=list)  # LevelEdgeRec
    footprints: list = field(default_factory=list)  # FootprintRec (y under u or v)
    planar: list = field(default_factory=list)  # PlanarEdgeRec


@dataclass
class Certificate:
    node: int
    n: int
    params: dict
    nu: int
    # tree shape: per level 0..L-1, list of (parent_mask, prime_child_mask)
    shape: list
    object_table: list  # (kind, idx, length, root_id)
    tree_frags: list  # per object: (parent_id or 0, dist)
    hstar_n: int
    planar_root: tuple  # (owner, idx)
    walk_len: int
    hosted: list  # EdgePayload for edges this node hosts

    def avatar_labels(self):
        return [(self.node, i + 1) for i in range(self.nu)]


# -- encoding ---------------------------------------------------------------
#
# Varint-free fixed layout: every field occupies whole W-bit words, with
# W = ceil(log2(n^2 + 1)) the ID width.  Word-uniform layout makes the
# certificate bit-length a pure multiple of W, so the per-node size is
# proportional to log n with an instance-dependent constant.

_KIND_CODE = {k: i + 1 for i, k in enumerate(OBJ_KINDS)}
_CODE_KIND = {i + 1: k for i, k in enumerate(OBJ_KINDS)}


class _Words:
    def __init__(self, width):
        self.w = width
        self.bw = BitWriter()

    def put(self, value):
        if value < 0 or value >= (1 << self.w):
            raise ValueError(f"word overflow: {value}")
        self.bw.write(value, self.w)

    def put_opt(self, value):
        if value is None:
            self.put(0)
        else:
            self.put(1)
            self.put(value)

    def put_type(self, t):
        if t is None:
            self.put(0)
        else:
            self.put(_KIND_CODE[t[0]])
            self.put(t[1])

    def put_mask(self, mask):
        words = []
        m = mask
        while True:
            words.append(m & ((1 << self.w) - 1))
            m >>= self.w
            if not m:
                break
        self.put(len(words))
        for x in words:
            self.put(x)

    def put_ref(self, ref):
        if ref is None:
            self.put(0)
            return
        self.put(1)
        (pa, ra), (pb, rb) = ref
        self.put(pa)
        self.put(ra)
        self.put(pb)
        self.put(rb)

    def getvalue(self):
        return self.bw.getvalue()


class _WordReader:
    def __init__(self, bits, width):
        self.br = BitReader(bits)
        self.w = width

    def get(self):
        return self.br.read(self.w)

    def get_opt(self):
        if self.get():
            return self.get()
        return None

    def get_type(self):
        code = self.get()
        if code == 0:
            return None
        if code not in _CODE_KIND:
            raise DecodeError("bad type code")
        return (_CODE_KIND[code], self.get())

    def get_mask(self):
        k = self.get()
        if k > 8:
            raise DecodeError("mask too wide")
        mask = 0
        for i in range(k):
            mask |= self.get() << (i * self.w)
        return mask

    def get_ref(self):
        if not self.get():
            return None
        return ((self.get(), self.get()), (self.get(), self.get()))

    def exhausted(self):
        return self.br.remaining() < self.w


def encode_certificate(cert: Certificate):
    n = cert.n
    W = id_width(n)
    ws = _Words(W)
    ws.bw.write(W, 6)
    ws.put(n)
    ws.put(cert.node)
    p = cert.params
    ws.put(1 if p["orientable"] else 0)
    ws.put(p["k"])
    ws.put(p["m"])
    ws.put(p["k_prime"])
    ws.put(cert.nu)
    ws.put(cert.hstar_n)
    ws.put(cert.walk_len)
    ws.put(cert.planar_root[0])
    ws.put(cert.planar_root[1])
    ws.put(len(cert.shape))
    for level_shape in cert.shape:
        ws.put(len(level_shape))
        for parent_mask, prime_mask in level_shape:
            ws.put_mask(parent_mask)
            ws.put_mask(prime_mask)
    ws.put(len(cert.object_table))
    for (kind, idx, length, root) in cert.object_table:
        ws.put(_KIND_CODE[kind])
        ws.put(idx)
        ws.put(length)
        ws.put(root)
    for parent, dist in cert.tree_frags:
        ws.put(parent)
        ws.put(dist)
    ws.put(len(cert.hosted))
    for ep in cert.hosted:
        ws.put(ep.u)
        ws.put(ep.v)
        ws.put(len(ep.levels))
        for r in ep.levels:
            ws.put(r.level)
            ws.put_mask(r.mask_u)
            ws.put_mask(r.mask_v)
            ws.put_type(r.etype)
        ws.put(len(ep.footprints))
        for f in ep.footprints:
            ws.put(f.level)
            ws.put(f.seq)
            ws.put(f.y_owner)
            ws.put_mask(f.y_mask)
            ws.put(f.pred_owner)
            ws.put_mask(f.pred_mask)
            ws.put(f.succ_owner)
            ws.put_mask(f.succ_mask)
            ws.put_type(f.type_in)
            ws.put_type(f.type_out)
            if f.obj is None:
                ws.put(0)
            else:
                ws.put(_KIND_CODE[f.obj[0]])
                ws.put(f.obj[1])
            ws.put_opt(f.index)
            ws.put_opt(f.walk_index)
        ws.put(len(ep.planar))
        for pr in ep.planar:
            ws.put_mask(pr.mask_u)
            ws.put_mask(pr.mask_v)
            ws.put(1 if pr.is_tree else 0)
            if pr.is_tree:
                for m in pr.moves:
                    ws.put(m.pos_from)
                    ws.put(1 if m.forward else 0)
                    ws.put_ref(m.low_from)
                    ws.put_ref(m.handoff_from)
                    ws.put_opt(m.bpos_from)
                    ws.put_ref(m.low_to)
                    ws.put_ref(m.handoff_to)
                    ws.put_opt(m.bpos_to)
            else:
                ws.put(pr.pa[0])
                ws.put(pr.pa[1])
                ws.put(pr.pb[0])
                ws.put(pr.pb[1])
                ws.put(1 if pr.x_is_u else 0)
                ws.put_ref(pr.parent)
                ws.put_opt(pr.jump_bpos)
    return ws.getvalue()


class DecodeError(Exception):
    pass


def decode_certificate(bits):
    try:
        return _decode(bits)
    except DecodeError:
        raise
    except Exception as exc:
        raise DecodeError(str(exc)) from None


def _decode(bits):
    if len(bits) < 6:
        raise DecodeError("truncated header")
    pre = BitReader(bits)
    W = pre.read(6)
    if W < 1 or W > 64:
        raise DecodeError("bad width")
    wr = _WordReader(bits, W)
    wr.br.read(6)
    n = wr.get()
    if n <= 0 or id_width(n) != W:
        raise DecodeError("bad n")
    node = wr.get()
    params = {
        "orientable": wr.get() == 1,
        "k": wr.get(),
        "m": wr.get(),
        "k_prime": wr.get(),
    }
    nu = wr.get()
    if nu < 1 or nu > 4096:
        raise DecodeError("bad avatar count")
    hstar_n = wr.get()
    walk_len = wr.get()
    planar_root = (wr.get(), wr.get())
    L = wr.get()
    if L > 40:
        raise DecodeError("depth out of range")
    shape = []
    for _ in range(L):
        cnt = wr.get()
        if cnt > 4096:
            raise DecodeError("shape too large")
        level_shape = []
        for _ in range(cnt):
            level_shape.append((wr.get_mask(), wr.get_mask()))
        shape.append(level_shape)
    n_obj = wr.get()
    if n_obj > 256:
        raise DecodeError("object table too large")
    table = []
    for _ in range(n_obj):
        code = wr.get()
        if code not in _CODE_KIND:
            raise DecodeError("bad object kind")
        table.append((_CODE_KIND[code], wr.get(), wr.get(), wr.get()))
    frags = []
    for _ in range(n_obj):
        frags.append((wr.get(), wr.get()))
    n_hosted = wr.get()
    if n_hosted > n:
        raise DecodeError("hosted count out of range")
    hosted = []
    for _ in range(n_hosted):
        u = wr.get()
        v = wr.get()
        ep = EdgePayload(u=u, v=v)
        cnt = wr.get()
        if cnt > 100000:
            raise DecodeError("record count out of range")
        for _ in range(cnt):
            ep.levels.append(
                LevelEdgeRec(
                    level=wr.get(),
                    mask_u=wr.get_mask(),
                    mask_v=wr.get_mask(),
                    etype=wr.get_type(),
                )
            )
        cnt = wr.get()
        if cnt > 100000:
            raise DecodeError("record count out of range")
        for _ in range(cnt):
            level = wr.get()
            seq = wr.get()
            y_owner = wr.get()
            y_mask = wr.get_mask()
            pred_owner = wr.get()
            pred_mask = wr.get_mask()
            succ_owner = wr.get()
            succ_mask = wr.get_mask()
            t_in = wr.get_type()
            t_out = wr.get_type()
            code = wr.get()
            obj = None
            if code:
                if code not in _CODE_KIND:
                    raise DecodeError("bad chain kind")
                obj = (_CODE_KIND[code], wr.get())
            index = wr.get_opt()
            walk_index = wr.get_opt()
            ep.footprints.append(
                FootprintRec(
                    level=level,
                    seq=seq,
                    y_owner=y_owner,
                    y_mask=y_mask,
                    pred_owner=pred_owner,
                    pred_mask=pred_mask,
                    succ_owner=succ_owner,
                    succ_mask=succ_mask,
                    type_in=t_in,
                    type_out=t_out,
                    obj=obj,
                    index=index,
                    walk_index=walk_index,
                )
            )
        cnt = wr.get()
        if cnt > 100000:
            raise DecodeError("record count out of range")
        for _ in range(cnt):
            mask_u = wr.get_mask()
            mask_v = wr.get_mask()
            if wr.get():
                moves = []
                for _ in range(2):
                    moves.append(
                        MoveRecBits(
                            pos_from=wr.get(),
                            forward=wr.get() == 1,
                            low_from=wr.get_ref(),
                            handoff_from=wr.get_ref(),
                            bpos_from=wr.get_opt(),
                            low_to=wr.get_ref(),
                            handoff_to=wr.get_ref(),
                            bpos_to=wr.get_opt(),
                        )
                    )
                ep.planar.append(
                    PlanarEdgeRec(
                        mask_u=mask_u, mask_v=mask_v, is_tree=True, moves=tuple(moves)
                    )
                )
            else:
                pa = (wr.get(), wr.get())
                pb = (wr.get(), wr.get())
                x_is_u = wr.get() == 1
                parent = wr.get_ref()
                jump_bpos = wr.get_opt()
                ep.planar.append(
                    PlanarEdgeRec(
                        mask_u=mask_u,
                        mask_v=mask_v,
                        is_tree=False,
                        pa=pa,
                        pb=pb,
                        x_is_u=x_is_u,
                        parent=parent,
                        jump_bpos=jump_bpos,
                    )
                )
        hosted.append(ep)
    if not wr.exhausted():
        raise DecodeError("trailing words")
    return Certificate(
        node=node,
        n=n,
        params=params,
        nu=nu,
        shape=shape,
        object_table=table,
        tree_frags=frags,
        hstar_n=hstar_n,
        walk_len=walk_len,
        planar_root=planar_root,
        hosted=hosted,
    )


def host_assignment(g: Graph):
    """Edge -> hosting endpoint, per the degeneracy elimination order."""
    order, _ = degeneracy_order(g)
    rank = {v: i for i, v in enumerate(order)}
    out = {}
    for e in g.edges():
        u, v = tuple(e)
        out[e] = u if rank[u] < rank[v] else v
    return out
