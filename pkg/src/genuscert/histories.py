"""Per-vertex history trees: the certifiable record of an unfolding.

Each vertex of the input graph gets a rooted tree replaying its splits,
one level per pipeline stage.  Leaves carry the positions of the
vertex's final avatars on the special boundary walk (footprints);
footprints propagate upward through four rules (Elementary, Extremity
in single and double form, Vacancy, plus Cross-cap on doubling levels)
and edge types propagate back downward.  The centralized consistency
checker here is the reference semantics the distributed verifier must
agree with.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import NoRuleApplies, WalkMismatch
from .graph import Graph
from .surgery import UnfoldingTrace

# Stage-vertex identity: (owner id, frozenset of avatar labels), where an
# avatar label is (owner id, index) with indices assigned prime-first.


@dataclass
class Footprint:
    pred: tuple  # identity of X
    succ: tuple  # identity of Z
    type_in: tuple | None = None  # type of the directed edge (X, Y)
    type_out: tuple | None = None  # type of (Y, Z)
    obj: tuple | None = None  # type-chain object, e.g. ("C'", 1)
    index: int | None = None  # position on that chain
    walk_index: int | None = None  # position on the special walk (leaves)

    def key(self):
        return (self.pred, self.succ, self.type_in, self.type_out)


@dataclass
class HistoryNode:
    owner: object
    level: int
    avatars: frozenset
    neighbors: frozenset = frozenset()
    children: tuple = ()
    footprints: list = field(default_factory=list)

    @property
    def ident(self):
        return (self.owner, self.avatars)

    def is_leaf(self):
        return not self.children


@dataclass
class HistoryCollection:
    trees: dict  # owner -> root HistoryNode
    depth: int
    params: dict
    bwalk: tuple | None = None  # directed special walk as avatar labels

    def nodes_at(self, level):
        for root in self.trees.values():
            stack = [root]
            while stack:
                n = stack.pop()
                if n.level == level:
                    yield n
                elif n.level < level:
                    stack.extend(n.children)

    def node_index(self):
        idx = {}
        for root in self.trees.values():
            stack = [root]
            while stack:
                n = stack.pop()
                idx[(n.level, n.ident)] = n
                stack.extend(n.children)
        return idx

    def all_nodes(self):
        for root in self.trees.values():
            stack = [root]
            while stack:
                n = stack.pop()
                yield n
                stack.extend(n.children)


def level_kind(params: dict, level: int):
    """Step kind and in-kind index for the step entering ``level``.

    Level ell (>= 1) is created by step ell - 1.
    """
    if params["orientable"]:
        k = params["k"]
        if level <= k:
            return "cycle_dup", level
        return "path_dup", level - k
    m, kp, k = params["m"], params["k_prime"], params["k"]
    if level <= m:
        return "cycle_double", level
    if level <= m + kp:
        return "cycle_dup", level - m
    return "path_dup", level - m - kp


def fresh_types(params, level):
    kind, i = level_kind(params, level)
    if kind == "cycle_dup":
        return ("C'", i), ("C''", i)
    if kind == "path_dup":
        return ("P'", i), ("P''", i)
    return ("D'", i), ("D'", i)


def type_creation_level(params, t):
    kind, i = t
    if params["orientable"]:
        return i if kind in ("C'", "C''") else params["k"] + i
    m, kp = params["m"], params["k_prime"]
    if kind == "D'":
        return i
    if kind in ("C'", "C''"):
        return m + i
    return m + kp + i


def build_histories(trace: UnfoldingTrace) -> HistoryCollection:
    """Replay each vertex's splits into its history tree.

    Child order at binary nodes follows the step's prime/double-prime
    alignment (first-round/second-round for doublings); avatar labels
    are assigned prime-first along each tree.
    """
    L = len(trace.steps)
    # order of the two children per split parent token, per step
    split_order = []
    for step in trace.steps:
        order = {}
        if step.kind == "cycle_double":
            p = len(step.prime) // 2
            for t in range(p):
                a, b = step.prime[t], step.prime[t + p]
                parent = _parent_of_children(step.splitting, a)
                order[parent] = (a, b)
        else:
            for a, b in zip(step.prime, step.double_prime):
                parent = _parent_of_children(step.splitting, a)
                order[parent] = (a, b)
        split_order.append(order)

    # expand token trees
    token_children = []
    for li, step in enumerate(trace.steps):
        token_children.append({})
        for parent, childs in step.splitting.alpha.items():
            if len(childs) == 1:
                token_children[li][parent] = childs
            else:
                token_children[li][parent] = split_order[li][parent]

    # avatar labels: DFS each tree prime-first
    labels = {}  # H* token -> (owner, idx)

    def assign_labels(owner, token):
        counter = [0]

        def walk(tok, level):
            if level == L:
                counter[0] += 1
                labels[tok] = (owner, counter[0])
                return
            for child in token_children[level][tok]:
                walk(child, level + 1)

        walk(token, 0)

    for v in sorted(trace.graphs[0].vertices, key=repr):
        assign_labels(v, v)

    # avatar sets per stage token
    avset = [dict() for _ in range(L + 1)]
    for tok in trace.graphs[L].vertices:
        avset[L][tok] = frozenset({labels[tok]})
    for li in range(L - 1, -1, -1):
        for tok in trace.graphs[li].vertices:
            s = frozenset()
            for child in token_children[li][tok]:
                s |= avset[li + 1][child]
            avset[li][tok] = s

    owner_of = {}
    for v in trace.graphs[0].vertices:
        stack = [(v, 0)]
        while stack:
            tok, level = stack.pop()
            owner_of[(level, tok)] = v
            if level < L:
                for child in token_children[level][tok]:
                    stack.append((child, level + 1))

    def ident(level, tok):
        return (owner_of[(level, tok)], avset[level][tok])

    def make_node(owner, tok, level):
        nbrs = frozenset(
            ident(level, w) for w in trace.graphs[level].neighbors(tok)
        )
        if level == L:
            return HistoryNode(owner, level, avset[level][tok], nbrs, ())
        childs = tuple(
            make_node(owner, c, level + 1) for c in token_children[level][tok]
        )
        return HistoryNode(owner, level, avset[level][tok], nbrs, childs)

    trees = {v: make_node(v, v, 0) for v in trace.graphs[0].vertices}
    bwalk = None
    if trace.special_walk is not None:
        bwalk = tuple(labels[tok] for tok in trace.special_walk.walk)
    return HistoryCollection(trees=trees, depth=L, params=dict(trace.params), bwalk=bwalk)


def _parent_of_children(splitting, child):
    for parent, childs in splitting.alpha.items():
        if child in childs:
            return parent
    raise KeyError(child)


def seed_leaf_footprints(hc: HistoryCollection) -> HistoryCollection:
    """One footprint per occurrence of an avatar on the special walk."""
    if hc.bwalk is None:
        return hc
    leaf_of = {}
    for n in hc.all_nodes():
        if n.is_leaf():
            (label,) = n.avatars
            leaf_of[label] = n
    n_pos = len(hc.bwalk)
    for t, label in enumerate(hc.bwalk):
        if label not in leaf_of:
            raise WalkMismatch(f"walk visits unknown avatar {label}")
        prev_label = hc.bwalk[(t - 1) % n_pos]
        next_label = hc.bwalk[(t + 1) % n_pos]
        leaf = leaf_of[label]
        leaf.footprints.append(
            Footprint(
                pred=(prev_label[0], frozenset({prev_label})),
                succ=(next_label[0], frozenset({next_label})),
                walk_index=t,
            )
        )
    return hc


class _StageView:
    """Split structure between two consecutive levels, from the trees."""

    def __init__(self, hc, level):
        self.level = level
        self.parent = {}  # child ident -> parent ident
        self.children = {}  # parent ident -> tuple of child idents
        for n in hc.nodes_at(level - 1):
            cids = tuple(c.ident for c in n.children)
            self.children[n.ident] = cids
            for c in cids:
                self.parent[c] = n.ident

    def is_split(self, ident):
        return len(self.children.get(self.parent[ident], ())) > 1

    def sibling_pair(self, a, b):
        """True when a and b are the two children of one split parent."""
        return (
            a != b
            and self.parent.get(a) is not None
            and self.parent.get(a) == self.parent.get(b)
            and len(self.children[self.parent[a]]) == 2
        )

    def project(self, ident):
        return self.parent[ident]


def _classify_pair(view: _StageView, f1: Footprint, f2: Footprint, kind: str):
    """Which rule (if any) consumes footprints f1 (prime) and f2 (double)."""

    def status(a, b):
        if view.sibling_pair(a, b):
            return "sib"
        if a == b and not view.is_split(a):
            return "eq"
        if not view.is_split(a) and not view.is_split(b):
            return "unsplit"
        return "no"

    cross1 = status(f1.pred, f2.succ)
    cross2 = status(f1.succ, f2.pred)
    if kind == "cycle_double":
        if view.sibling_pair(f1.pred, f2.pred) and view.sibling_pair(f1.succ, f2.succ):
            return "crosscap"
        return None
    if cross1 == "sib" and cross2 == "sib":
        return "elementary"
    if kind != "path_dup":
        return None
    ok1 = cross1 in ("eq", "unsplit")
    ok2 = cross2 in ("eq", "unsplit")
    if cross1 == "sib" and ok2:
        return "single_b"  # produced footprint is (f2.pred, Y, f1.succ)
    if cross2 == "sib" and ok1:
        return "single_a"  # produced footprint is (f1.pred, Y, f2.succ)
    if ok1 and ok2:
        return "double"
    return None


def _produced(rule, view, node_ident, f1, f2):
    u = node_ident
    if rule in ("elementary", "crosscap"):
        return []
    if rule == "single_a":
        return [Footprint(pred=f1.pred, succ=f2.succ)]
    if rule == "single_b":
        return [Footprint(pred=f2.pred, succ=f1.succ)]
    if rule == "double":
        return [
            Footprint(pred=f1.pred, succ=f2.succ),
            Footprint(pred=f2.pred, succ=f1.succ),
        ]
    raise AssertionError(rule)


@dataclass
class RuleEvent:
    """One consumed footprint pair at a binary node."""

    node: HistoryNode
    rule: str
    f1: Footprint
    f2: Footprint
    produced: list


def fill_footprints_upward(hc: HistoryCollection, strict=True):
    """Propagate footprints from the leaves to the roots.

    At every binary node exactly one footprint pair must be consumed by
    the Elementary, Extremity, or Cross-cap rule; all other footprints
    forward by Vacancy.  Returns (rule events, violations); in strict
    mode a node with no consumable pair, or more than one, raises
    NoRuleApplies.  Provenance: every vacancy-forwarded child footprint
    records its parent copy, for the downward type pass.
    """
    events = []
    violations = []
    vacancy_link = {}  # id(child footprint) -> parent footprint
    for level in range(hc.depth, 0, -1):
        view = _StageView(hc, level)
        kind, _ = level_kind(hc.params, level)
        for node in hc.nodes_at(level - 1):
            if len(node.children) == 1:
                (child,) = node.children
                for f in child.footprints:
                    up = Footprint(
                        pred=view.project(f.pred), succ=view.project(f.succ)
                    )
                    node.footprints.append(up)
                    vacancy_link[id(f)] = up
                continue
            c1, c2 = node.children
            candidates = []
            for i, f1 in enumerate(c1.footprints):
                for j, f2 in enumerate(c2.footprints):
                    rule = _classify_pair(view, f1, f2, kind)
                    if rule:
                        candidates.append((i, j, rule))
            if len(candidates) == 1:
                chosen = candidates[0]
            else:
                msg = (
                    f"no footprint rule applies at {node.ident}"
                    if not candidates
                    else f"ambiguous footprint rules at {node.ident}"
                )
                if strict:
                    raise NoRuleApplies(msg)
                violations.append(("rule-application", node.ident, msg))
                chosen = candidates[0] if candidates else None
            if chosen is None:
                continue
            i, j, rule = chosen
            f1, f2 = c1.footprints[i], c2.footprints[j]
            produced = _produced(rule, view, node.ident, f1, f2)
            node.footprints.extend(produced)
            events.append(RuleEvent(node, rule, f1, f2, produced))
            for child, skip in ((c1, i), (c2, j)):
                for t, f in enumerate(child.footprints):
                    if t == skip:
                        continue
                    up = Footprint(
                        pred=view.project(f.pred), succ=view.project(f.succ)
                    )
                    node.footprints.append(up)
                    vacancy_link[id(f)] = up
    for root in hc.trees.values():
        if root.footprints:
            msg = f"root of {root.owner} retains footprints"
            if strict:
                raise NoRuleApplies(msg)
            violations.append(("rule-application", root.ident, msg))
    return events, violations, vacancy_link


def assign_types_downward(hc: HistoryCollection, events, vacancy_link):
    """Stamp edge types onto every footprint, top-down.

    Consumed pairs at a level receive that level's fresh types (both
    sides for Cross-cap); Extremity children inherit the endpoint types
    of the footprint they produced; Vacancy copies types through.
    """
    by_node = {id(ev.node): ev for ev in events}
    for level in range(0, hc.depth):
        tp, td = fresh_types(hc.params, level + 1)
        for node in hc.nodes_at(level):
            if not node.children:
                continue
            ev = by_node.get(id(node))
            consumed_ids = set()
            if ev is not None:
                consumed_ids = {id(ev.f1), id(ev.f2)}
                f1, f2 = ev.f1, ev.f2
                if ev.rule == "elementary":
                    f1.type_in = f1.type_out = tp
                    f2.type_in = f2.type_out = td
                elif ev.rule == "crosscap":
                    f1.type_in = f1.type_out = tp
                    f2.type_in = f2.type_out = tp
                elif ev.rule == "single_a":
                    (g,) = ev.produced
                    f1.type_in = g.type_in
                    f1.type_out = tp
                    f2.type_in = td
                    f2.type_out = g.type_out
                elif ev.rule == "single_b":
                    (g,) = ev.produced
                    f1.type_in = tp
                    f1.type_out = g.type_out
                    f2.type_in = g.type_in
                    f2.type_out = td
                elif ev.rule == "double":
                    g1, g2 = ev.produced
                    f1.type_in = g1.type_in
                    f1.type_out = g2.type_out
                    f2.type_in = g2.type_in
                    f2.type_out = g1.type_out
            for child in node.children:
                for f in child.footprints:
                    if id(f) in consumed_ids:
                        continue
                    parent_fp = vacancy_link.get(id(f))
                    if parent_fp is not None:
                        f.type_in = parent_fp.type_in
                        f.type_out = parent_fp.type_out
    return hc


def decorate_histories(trace: UnfoldingTrace) -> HistoryCollection:
    """Full honest construction: build, seed, fill, and type."""
    hc = build_histories(trace)
    seed_leaf_footprints(hc)
    events, _, vacancy = fill_footprints_upward(hc, strict=True)
    assign_types_downward(hc, events, vacancy)
    _tag_chains(hc, trace, events)
    return hc


def _tag_chains(hc: HistoryCollection, trace: UnfoldingTrace, events):
    """Attach chain object IDs and positions to the consumed footprints.

    Cycle step i: the consumed pair at copy j of the prime/double lists
    gets index j on the C'_i / C''_i chains (D'_i with ring positions on
    doubling levels).  Path step i: every footprint at level m+k'+i with
    an edge typed P'_i / P''_i gets its position along the duplicated
    path.
    """
    idx = hc.node_index()
    by_child = {}
    for ev in events:
        for f, child in ((ev.f1, ev.node.children[0]), (ev.f2, ev.node.children[1])):
            by_child[id(f)] = (ev, child)
    # identities for the step token lists
    L = hc.depth
    for li, step in enumerate(trace.steps):
        level = li + 1
        kind, i = level_kind(hc.params, level)
        tokens_prime = list(step.prime)
        tokens_double = list(step.double_prime)
        tok_ident = _token_idents(hc, trace, level)
        if kind == "cycle_double":
            ring = tokens_prime
            for t, tok in enumerate(ring):
                node = idx[(level, tok_ident[tok])]
                for f in node.footprints:
                    info = by_child.get(id(f))
                    if info and info[0].rule == "crosscap" and id(f) in (
                        id(info[0].f1),
                        id(info[0].f2),
                    ):
                        f.obj = ("D'", i)
                        f.index = t
        elif kind == "cycle_dup":
            for t, tok in enumerate(tokens_prime):
                node = idx[(level, tok_ident[tok])]
                for f in node.footprints:
                    info = by_child.get(id(f))
                    if info and info[0].rule == "elementary" and id(f) == id(info[0].f1):
                        f.obj = ("C'", i)
                        f.index = t
            for t, tok in enumerate(tokens_double):
                node = idx[(level, tok_ident[tok])]
                for f in node.footprints:
                    info = by_child.get(id(f))
                    if info and info[0].rule == "elementary" and id(f) == id(info[0].f2):
                        f.obj = ("C''", i)
                        f.index = t
        else:
            pt, dt = ("P'", i), ("P''", i)
            for t, tok in enumerate(tokens_prime):
                node = idx[(level, tok_ident[tok])]
                for f in node.footprints:
                    info = by_child.get(id(f))
                    if info and id(f) == id(info[0].f1) and info[0].node.level == level - 1:
                        f.obj = pt
                        f.index = t
            for t, tok in enumerate(tokens_double):
                node = idx[(level, tok_ident[tok])]
                for f in node.footprints:
                    info = by_child.get(id(f))
                    if info and id(f) == id(info[0].f2) and info[0].node.level == level - 1:
                        f.obj = dt
                        f.index = t


def _token_idents(hc: HistoryCollection, trace: UnfoldingTrace, level):
    """Map stage tokens at a level to (owner, avatar set) identities."""
    out = {}
    idx = {}
    for n in hc.nodes_at(level):
        idx.setdefault(n.owner, []).append(n)
    # reconstruct by walking tokens alongside the trees
    L = hc.depth

    def walk(owner, tok, lev, node):
        if lev == level:
            out[tok] = node.ident
            return
        step = trace.steps[lev]
        childs = step.splitting.alpha[tok]
        if len(childs) == 1:
            walk(owner, childs[0], lev + 1, node.children[0])
        else:
            ordered = _split_pair_order(step, tok)
            for ct, cn in zip(ordered, node.children):
                walk(owner, ct, lev + 1, cn)

    for v, root in hc.trees.items():
        walk(v, v, 0, root)
    return out


def _split_pair_order(step, parent_token):
    childs = step.splitting.alpha[parent_token]
    if step.kind == "cycle_double":
        p = len(step.prime) // 2
        for t in range(p):
            if step.prime[t] in childs:
                return (step.prime[t], step.prime[t + p])
    else:
        for a, b in zip(step.prime, step.double_prime):
            if a in childs:
                return (a, b)
    raise KeyError(parent_token)


# -- centralized consistency checking ---------------------------------------


@dataclass
class ConsistencyReport:
    violations: list

    @property
    def accept(self):
        return not self.violations

    def add(self, condition, detail):
        self.violations.append((condition, detail))


def check_local_consistency(g: Graph, hstar: Graph, bwalk, hc: HistoryCollection):
    """The centralized reference checker for a history collection.

    Verifies (1) the stage-graph reconstruction and the rule/typing
    discipline, (2) that the leaf footprints chain into exactly the
    directed special walk, (3) path-type chains, (4) cycle-type chains
    with opposite orientations, (5) doubling chains with antipodal
    pairing, plus type persistence across levels.  Violations are data,
    not exceptions.
    """
    report = ConsistencyReport([])
    try:
        _check_structure(g, hstar, hc, report)
    except Exception as exc:  # malformed beyond local repair
        report.add("structure", f"unusable collection: {exc}")
        return report
    if report.violations:
        return report
    _check_bwalk(hc, bwalk, report)
    derived, events = _check_fill(hc, report)
    _check_chains(hc, report)
    _check_persistence(hc, report)
    return report


def _idents_at(hc, level):
    out = {}
    for n in hc.nodes_at(level):
        if n.ident in out:
            raise ValueError(f"duplicate stage vertex {n.ident} at level {level}")
        out[n.ident] = n
    return out


def _check_structure(g, hstar, hc, report):
    L = hc.depth
    if set(hc.trees) != set(g.vertices):
        report.add("structure", "trees do not cover the vertex set")
        return
    for v, root in hc.trees.items():
        if root.level != 0 or root.owner != v:
            report.add("structure", f"bad root for {v}")
            return
        seen_leaves = []
        stack = [root]
        while stack:
            n = stack.pop()
            if n.is_leaf():
                if n.level != L or len(n.avatars) != 1:
                    report.add("structure", f"bad leaf in tree of {v}")
                    return
                seen_leaves.append(next(iter(n.avatars)))
            else:
                if len(n.children) not in (1, 2):
                    report.add("structure", f"node arity at {n.ident}")
                    return
                union = frozenset()
                for c in n.children:
                    if c.level != n.level + 1 or c.owner != v:
                        report.add("structure", f"level skew under {n.ident}")
                        return
                    if union & c.avatars:
                        report.add("structure", f"sibling overlap under {n.ident}")
                        return
                    union |= c.avatars
                if union != n.avatars:
                    report.add("structure", f"avatar set mismatch at {n.ident}")
                    return
                stack.extend(n.children)
        labels = sorted(seen_leaves)
        if labels != [(v, i + 1) for i in range(len(labels))]:
            report.add("structure", f"avatar labels of {v} are not 1..nu")
            return
    # stage graphs
    prev = None
    for level in range(L + 1):
        idents = _idents_at(hc, level)
        for ident, n in idents.items():
            for nb in n.neighbors:
                if nb not in idents:
                    report.add("stage-graph", f"{ident} lists unknown neighbor {nb} at level {level}")
                    return
                if ident not in idents[nb].neighbors:
                    report.add("stage-graph", f"asymmetric edge {ident} - {nb}")
                    return
            if ident in n.neighbors:
                report.add("stage-graph", f"self-loop at {ident}")
                return
        if level == 0:
            for ident, n in idents.items():
                owner = ident[0]
                want = {(w,) for w in g.neighbors(owner)}
                got = {(nb[0],) for nb in n.neighbors}
                if want != got:
                    report.add("stage-graph", f"level-0 neighborhood of {owner} differs from the network")
                    return
        if level == L:
            hv = set(hstar.vertices)
            got = {next(iter(ident[1])) for ident in idents}
            if hv != got:
                report.add("stage-graph", "final stage vertices differ from the planar graph")
                return
            for ident, n in idents.items():
                a = next(iter(ident[1]))
                want = set(hstar.neighbors(a))
                got_n = {next(iter(nb[1])) for nb in n.neighbors}
                if want != got_n:
                    report.add("stage-graph", f"final-stage neighborhood of {a} differs")
                    return
        if prev is not None:
            view = _StageView(hc, level)
            # each previous-level edge must split into a non-empty matching
            for ident, n in prev.items():
                for nb in n.neighbors:
                    ca = view.children[ident]
                    cb = view.children[nb]
                    child_edges = [
                        (x, y)
                        for x in ca
                        for y in cb
                        if y in idents[x].neighbors
                    ]
                    if not child_edges:
                        report.add("splitting", f"edge {ident}-{nb} vanishes at level {level}")
                        return
                    xs = [x for x, _ in child_edges]
                    ys = [y for _, y in child_edges]
                    if len(set(xs)) != len(xs) or len(set(ys)) != len(ys):
                        report.add("splitting", f"edge {ident}-{nb} splits into a non-matching")
                        return
            # and each child edge must project to a parent edge
            parent_of = view.parent
            for ident, n in idents.items():
                for nb in n.neighbors:
                    pa, pb = parent_of[ident], parent_of[nb]
                    if pa == pb:
                        report.add("splitting", f"edge inside one split class at level {level}")
                        return
                    if pb not in prev[pa].neighbors:
                        report.add("splitting", f"edge {ident}-{nb} has no parent edge")
                        return
        prev = idents
    # footprint endpoints must be stage neighbors
    for level in range(L + 1):
        idents = _idents_at(hc, level)
        for ident, n in idents.items():
            for f in n.footprints:
                if f.pred not in n.neighbors or f.succ not in n.neighbors:
                    report.add("footprint-edge", f"footprint at {ident} uses a non-edge")
                    return
    # expected depth for the declared parameters
    p = hc.params
    if p["orientable"]:
        want = 3 * p["k"] - 1 if p["k"] else 0
    else:
        want = p["m"] + p["k_prime"] + p["k"] - 1
    if L != want:
        report.add("structure", f"depth {L} does not match the declared parameters")


def _check_bwalk(hc, bwalk, report):
    leaf_fps = []
    for n in hc.all_nodes():
        if n.is_leaf():
            for f in n.footprints:
                leaf_fps.append((n, f))
    if bwalk is None:
        if leaf_fps:
            report.add("walk", "leaf footprints present without a special walk")
        return
    N = len(bwalk)
    by_index = {}
    for n, f in leaf_fps:
        if f.walk_index is None:
            report.add("walk", f"untagged leaf footprint at {n.ident}")
            return
        if f.walk_index in by_index:
            report.add("walk", f"duplicate walk index {f.walk_index}")
            return
        by_index[f.walk_index] = (n, f)
    if set(by_index) != set(range(N)):
        report.add("walk", "leaf footprints do not cover the walk positions")
        return
    for t in range(N):
        n, f = by_index[t]
        label = next(iter(n.avatars))
        if label != bwalk[t]:
            report.add("walk", f"position {t} sits at the wrong avatar")
            return
        want_pred = bwalk[(t - 1) % N]
        want_succ = bwalk[(t + 1) % N]
        if f.pred != (want_pred[0], frozenset({want_pred})) or f.succ != (
            want_succ[0],
            frozenset({want_succ}),
        ):
            report.add("walk", f"footprint links broken at position {t}")
            return


def _bare_clone(hc):
    def clone(n):
        fresh = HistoryNode(
            owner=n.owner,
            level=n.level,
            avatars=n.avatars,
            neighbors=n.neighbors,
            children=tuple(clone(c) for c in n.children),
        )
        if n.is_leaf():
            fresh.footprints = [
                Footprint(
                    pred=f.pred,
                    succ=f.succ,
                    obj=f.obj,
                    index=f.index,
                    walk_index=f.walk_index,
                )
                for f in n.footprints
            ]
        return fresh

    return HistoryCollection(
        trees={v: clone(r) for v, r in hc.trees.items()},
        depth=hc.depth,
        params=dict(hc.params),
        bwalk=hc.bwalk,
    )


def _check_fill(hc, report):
    """Re-derive the fill and typing from the leaves and compare."""
    derived = _bare_clone(hc)
    events, violations, vacancy = fill_footprints_upward(derived, strict=False)
    for cond, ident, msg in violations:
        report.add(cond, msg)
    assign_types_downward(derived, events, vacancy)
    stored_idx = hc.node_index()
    for n in derived.all_nodes():
        stored = stored_idx.get((n.level, n.ident))
        if stored is None:
            report.add("structure", f"derived node {n.ident} missing")
            return derived, events
        a = sorted((f.key() for f in stored.footprints), key=repr)
        b = sorted((f.key() for f in n.footprints), key=repr)
        if a != b:
            report.add(
                "rule-application",
                f"footprints at {n.ident} level {n.level} differ from the derived fill",
            )
    return derived, events


def _chain_members(hc, obj):
    level = type_creation_level(hc.params, obj)
    out = {}
    for n in hc.nodes_at(level):
        for f in n.footprints:
            if f.obj == obj:
                if f.index in out:
                    return None, f"duplicate index {f.index} on {obj}"
                out[f.index] = (n, f)
    return out, None


def _check_chains(hc, report):
    p = hc.params
    if p["orientable"]:
        cycles = [("C'", i) for i in range(1, p["k"] + 1)]
        paths = list(range(1, max(0, 3 * p["k"] - 1 - p["k"]) + 1))
        n_paths = 2 * p["k"] - 1 if p["k"] else 0
        doubles = []
    else:
        cycles = [("C'", i) for i in range(1, p["k_prime"] + 1)]
        n_paths = p["k"] - 1
        doubles = [("D'", i) for i in range(1, p["m"] + 1)]
    for obj in doubles:
        members, err = _chain_members(hc, obj)
        if err:
            report.add("doubling-chain", err)
            continue
        if not members:
            report.add("doubling-chain", f"{obj} chain missing")
            continue
        n = len(members)
        if set(members) != set(range(n)) or n % 2 != 0:
            report.add("doubling-chain", f"{obj} indices broken")
            continue
        r = n // 2
        level = type_creation_level(hc.params, obj)
        view = _StageView(hc, level)
        ok = True
        for t in range(n):
            node, f = members[t]
            nxt_node, _ = members[(t + 1) % n]
            prv_node, _ = members[(t - 1) % n]
            if f.succ != nxt_node.ident or f.pred != prv_node.ident:
                report.add("doubling-chain", f"{obj} linkage broken at {t}")
                ok = False
                break
            if f.type_in != obj or f.type_out != obj:
                report.add("doubling-chain", f"{obj} member {t} mistyped")
                ok = False
                break
        if not ok:
            continue
        for t in range(r):
            a = members[t][0].ident
            b = members[t + r][0].ident
            if not view.sibling_pair(a, b):
                report.add(
                    "doubling-chain", f"{obj} pairing at {t} is not antipodal"
                )
                break
        split_parents = {i for i, cs in view.children.items() if len(cs) > 1}
        if len(split_parents) != r:
            report.add("doubling-chain", f"{obj} does not cover the split set")
    for obj in cycles:
        i = obj[1]
        prime, err1 = _chain_members(hc, ("C'", i))
        double, err2 = _chain_members(hc, ("C''", i))
        if err1 or err2:
            report.add("cycle-chain", err1 or err2)
            continue
        if not prime or not double:
            report.add("cycle-chain", f"cycle chain {i} missing")
            continue
        n = len(prime)
        if len(double) != n or set(prime) != set(range(n)) or set(double) != set(range(n)):
            report.add("cycle-chain", f"cycle chain {i} indices broken")
            continue
        if n < 3:
            report.add("cycle-chain", f"cycle chain {i} too short")
            continue
        level = type_creation_level(hc.params, ("C'", i))
        view = _StageView(hc, level)
        ok = True
        for t in range(n):
            pn, pf = prime[t]
            if pf.succ != prime[(t + 1) % n][0].ident or pf.pred != prime[(t - 1) % n][0].ident:
                report.add("cycle-chain", f"C'_{i} linkage broken at {t}")
                ok = False
                break
            dn, df = double[t]
            # the double-prime cycle runs the other way
            if df.pred != double[(t + 1) % n][0].ident or df.succ != double[(t - 1) % n][0].ident:
                report.add("cycle-chain", f"C''_{i} linkage broken at {t}")
                ok = False
                break
            if pf.type_in != ("C'", i) or pf.type_out != ("C'", i):
                report.add("cycle-chain", f"C'_{i} member {t} mistyped")
                ok = False
                break
            if df.type_in != ("C''", i) or df.type_out != ("C''", i):
                report.add("cycle-chain", f"C''_{i} member {t} mistyped")
                ok = False
                break
            if not view.sibling_pair(pn.ident, dn.ident):
                report.add("cycle-chain", f"cycle chain {i} pairing broken at {t}")
                ok = False
                break
        if not ok:
            continue
        split_parents = {x for x, cs in view.children.items() if len(cs) > 1}
        if len(split_parents) != n:
            report.add("cycle-chain", f"cycle chain {i} does not cover the split set")
    for i in range(1, n_paths + 1):
        prime, err1 = _chain_members(hc, ("P'", i))
        double, err2 = _chain_members(hc, ("P''", i))
        if err1 or err2:
            report.add("path-chain", err1 or err2)
            continue
        level = type_creation_level(hc.params, ("P'", i))
        view = _StageView(hc, level)
        split_parents = {x for x, cs in view.children.items() if len(cs) > 1}
        n = len(prime)
        if len(double) != n:
            report.add("path-chain", f"path chain {i} sides differ in length")
            continue
        if n == 0:
            if len(split_parents) != 1:
                report.add("path-chain", f"path chain {i} empty but several splits")
            continue
        if set(prime) != set(range(n)) or set(double) != set(range(n)):
            report.add("path-chain", f"path chain {i} indices broken")
            continue
        if len(split_parents) != n:
            report.add("path-chain", f"path chain {i} does not cover the split set")
            continue
        ok = True
        for t in range(n):
            pn, pf = prime[t]
            dn, df = double[t]
            if t + 1 < n and pf.succ != prime[t + 1][0].ident:
                ok = False
            if t > 0 and pf.pred != prime[t - 1][0].ident:
                ok = False
            if t + 1 < n and df.pred != double[t + 1][0].ident:
                ok = False
            if t > 0 and df.succ != double[t - 1][0].ident:
                ok = False
            if not view.sibling_pair(pn.ident, dn.ident):
                ok = False
            want_p, want_d = ("P'", i), ("P''", i)
            if t > 0 and pf.type_in != want_p:
                ok = False
            if t + 1 < n and pf.type_out != want_p:
                ok = False
            if t > 0 and df.type_out != want_d:
                ok = False
            if t + 1 < n and df.type_in != want_d:
                ok = False
            if not ok:
                report.add("path-chain", f"path chain {i} broken at {t}")
                break


def _typed_edge_sets(hc, level):
    out = {}
    for n in hc.nodes_at(level):
        for f in n.footprints:
            if f.type_in is not None:
                out.setdefault(f.type_in, set()).add((f.pred, n.ident))
            if f.type_out is not None:
                out.setdefault(f.type_out, set()).add((n.ident, f.succ))
    return out


def _check_persistence(hc, report):
    for level in range(1, hc.depth):
        lower = _typed_edge_sets(hc, level)
        upper = _typed_edge_sets(hc, level + 1)
        view = _StageView(hc, level + 1)
        for t, edges in upper.items():
            if type_creation_level(hc.params, t) > level:
                continue
            projected = {(view.project(a), view.project(b)) for a, b in edges}
            if projected != lower.get(t, set()):
                report.add(
                    "persistence",
                    f"type {t} edges at level {level + 1} do not project to level {level}",
                )


def format_histories(hc: HistoryCollection) -> str:
    """Nested text form of a history collection, one block per vertex."""
    lines = [
        "histories "
        + " ".join(f"{k}={hc.params[k]}" for k in sorted(hc.params)),
        f"depth {hc.depth}",
    ]
    if hc.bwalk:
        lines.append("walk " + " ".join(f"{o}.{i}" for o, i in hc.bwalk))

    def fmt_ident(ident):
        owner, avs = ident
        return f"{owner}:{'+'.join(str(i) for _, i in sorted(avs))}"

    def emit(node, indent):
        pad = "  " * indent
        lines.append(f"{pad}node level={node.level} S={fmt_ident(node.ident)}")
        for f in sorted(node.footprints, key=lambda f: repr(f.key())):
            extra = ""
            if f.obj:
                extra += f" obj={f.obj[0]}{f.obj[1]}@{f.index}"
            if f.walk_index is not None:
                extra += f" walk@{f.walk_index}"
            lines.append(
                f"{pad}  fp pred={fmt_ident(f.pred)} succ={fmt_ident(f.succ)}"
                f" tin={f.type_in} tout={f.type_out}{extra}"
            )
        for c in node.children:
            emit(c, indent + 1)

    for v in sorted(hc.trees, key=repr):
        lines.append(f"vertex {v}")
        emit(hc.trees[v], 1)
    return "\n".join(lines) + "\n"
