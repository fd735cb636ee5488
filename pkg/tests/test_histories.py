"""History trees, footprint rules, types, and the centralized checker."""

import random

import pytest

from genuscert.errors import NoRuleApplies
from genuscert.fixtures import corpus, k5_torus, two_k5_wedge
from genuscert.graph import Graph
from genuscert.histories import (
    check_local_consistency,
    decorate_histories,
    build_histories,
    seed_leaf_footprints,
    fill_footprints_upward,
    assign_types_downward,
    format_histories,
    level_kind,
)
from genuscert.surgery import duplicate_cycle, duplicate_path, unfold, UnfoldingTrace, SurgeryStep, _locate_path_pattern, find_face


def hstar_graph(hc):
    return Graph(
        {
            next(iter(n.avatars)): {next(iter(nb[1])) for nb in n.neighbors}
            for n in hc.all_nodes()
            if n.is_leaf()
        }
    )


def checked(scheme):
    t = unfold(scheme.graph, scheme)
    hc = decorate_histories(t)
    report = check_local_consistency(scheme.graph, hstar_graph(hc), hc.bwalk, hc)
    return t, hc, report


def test_unsplit_vertex_has_a_path_tree():
    s = k5_torus()
    t = unfold(s.graph, s)
    hc = decorate_histories(t)
    # vertex 5 is split by neither step
    tree = hc.trees[5]
    node = tree
    while not node.is_leaf():
        assert len(node.children) == 1
        node = node.children[0]
    assert tree.avatars == node.avatars == frozenset({(5, 1)})
    assert not tree.footprints and not node.footprints


def test_k5_split_structure():
    s = k5_torus()
    t = unfold(s.graph, s)
    hc = decorate_histories(t)
    # cycle vertices split once; path endpoints (cycle copies) split again
    leaf_counts = {v: len(hc.trees[v].avatars) for v in s.graph.vertices}
    assert sorted(leaf_counts.values()) == [1, 2, 2, 3, 3]
    # a vertex with 3 leaves has one binary level under one of its copies
    v3 = next(v for v, c in leaf_counts.items() if c == 3)
    root = hc.trees[v3]
    assert len(root.children) == 2
    kinds = sorted(len(c.children) for c in root.children)
    assert kinds == [1, 2]


def test_i_equals_j_yields_four_leaves():
    # force the path to start and end on the two copies of one cycle
    # vertex: its history then has four leaves under one root
    s = k5_torus()
    res = duplicate_cycle(s.graph, s, [1, 2, 3])
    chi, psi = res.created["prime"], res.created["double_prime"]
    sib = {}
    for parent, cs in res.splitting.alpha.items():
        if len(cs) == 2:
            sib[cs[0]] = cs[1]
            sib[cs[1]] = cs[0]
    # pick copies of vertex 2 on both faces and a path joining them
    start = next(v for v in chi.walk if v in sib and sib[v] in psi.walk)
    goal = sib[start]
    # a path through the interior: start - x - goal avoiding both faces
    interior = [
        w
        for w in res.graph.neighbors(start)
        if w in res.graph.neighbors(goal)
        and w not in chi.vertex_set() | psi.vertex_set()
    ]
    assert interior
    path = [start, interior[0], goal]
    res2 = duplicate_path(res.graph, res.scheme, path, chi, psi)
    merged, prime, double, _, _ = _locate_path_pattern(
        res2.created["merged"], res2.created["side_a"], res2.created["side_b"]
    )
    trace = UnfoldingTrace(
        graphs=[s.graph, res.graph, res2.graph],
        schemes=[s, res.scheme, res2.scheme],
        steps=[
            SurgeryStep(
                kind="cycle_dup", index=1, obj=(1, 2, 3),
                splitting=res.splitting,
                prime=res.created["prime"].walk,
                double_prime=tuple(sib[v] for v in res.created["prime"].walk),
                created_walks=(chi, psi),
            ),
            SurgeryStep(
                kind="path_dup", index=1, obj=tuple(path),
                splitting=res2.splitting, prime=prime, double_prime=double,
                created_walks=(merged,),
            ),
        ],
        special=[[], [chi, psi], [merged]],
        special_walk=merged,
        params={"orientable": True, "k": 1, "m": 0, "k_prime": 1},
    )
    hc = decorate_histories(trace)
    owner = next(v for v in s.graph.vertices if len(hc.trees[v].avatars) == 4)
    root = hc.trees[owner]
    assert len(root.children) == 2
    assert all(len(c.children) == 2 for c in root.children)
    report = check_local_consistency(s.graph, hstar_graph(hc), hc.bwalk, hc)
    assert report.accept, report.violations[:3]


def test_seed_gives_one_footprint_per_occurrence():
    s = k5_torus()
    t = unfold(s.graph, s)
    hc = build_histories(t)
    seed_leaf_footprints(hc)
    leaves = [n for n in hc.all_nodes() if n.is_leaf()]
    total = sum(len(n.footprints) for n in leaves)
    assert total == len(hc.bwalk) == 10
    on_walk = {lab for lab in hc.bwalk}
    for n in leaves:
        lab = next(iter(n.avatars))
        assert len(n.footprints) == (1 if lab in on_walk else 0)


def test_doubly_visited_avatar_gets_two_footprints():
    # the wedge of two tori shares a vertex between handles; its unfolding
    # traverses some avatar twice on the special walk
    s = two_k5_wedge()
    t = unfold(s.graph, s)
    hc = build_histories(t)
    seed_leaf_footprints(hc)
    from collections import Counter

    counts = Counter(hc.bwalk)
    assert max(counts.values()) >= 2
    heavy = next(lab for lab, c in counts.items() if c >= 2)
    leaf = next(
        n for n in hc.all_nodes() if n.is_leaf() and next(iter(n.avatars)) == heavy
    )
    assert len(leaf.footprints) == counts[heavy]


def test_fill_conservation_rule_counts():
    # at each binary node exactly (2, 0), (2, 1) or (2, 2) footprints are
    # consumed/produced by Elementary / Single / Double, cross-cap (2, 0)
    for name, scheme in corpus().items():
        t = unfold(scheme.graph, scheme)
        hc = build_histories(t)
        seed_leaf_footprints(hc)
        events, violations, _ = fill_footprints_upward(hc, strict=True)
        assert not violations
        produced_counts = {
            "elementary": 0,
            "crosscap": 0,
            "single_a": 1,
            "single_b": 1,
            "double": 2,
        }
        binary_nodes = {
            id(n) for n in hc.all_nodes() if len(n.children) == 2
        }
        assert {id(e.node) for e in events} == binary_nodes, name
        for e in events:
            assert len(e.produced) == produced_counts[e.rule]


def test_types_are_total_and_ordered():
    for name, scheme in corpus().items():
        t = unfold(scheme.graph, scheme)
        hc = decorate_histories(t)
        for n in hc.all_nodes():
            for f in n.footprints:
                assert f.type_in is not None and f.type_out is not None, name
                # types never predate their creation level
                from genuscert.histories import type_creation_level

                for tt in (f.type_in, f.type_out):
                    assert type_creation_level(hc.params, tt) <= n.level


def test_k5_type_assignment_matches_construction():
    s = k5_torus()
    t = unfold(s.graph, s)
    hc = decorate_histories(t)
    # level-1 consumed pair: cycle types on both edges of both footprints
    cyc_fp = [
        f
        for n in hc.all_nodes()
        if n.level == 1
        for f in n.footprints
        if f.obj in (("C'", 1), ("C''", 1))
    ]
    assert len(cyc_fp) == 6  # three per side
    for f in cyc_fp:
        assert f.type_in == f.obj and f.type_out == f.obj
    # leaf level: endpoint footprints inherit the cycle type on one side
    leaf_fp = [
        f
        for n in hc.all_nodes()
        if n.is_leaf()
        for f in n.footprints
    ]
    mixed = [
        f
        for f in leaf_fp
        if {f.type_in[0], f.type_out[0]} == {"C'", "P'"}
        or {f.type_in[0], f.type_out[0]} == {"C''", "P''"}
    ]
    assert mixed  # inherited endpoint edges adopt the cycle type


def test_centralized_checker_accepts_corpus():
    for name, scheme in corpus().items():
        t, hc, report = checked(scheme)
        assert report.accept, (name, report.violations[:3])


def test_checker_rejects_footprint_swap():
    s = k5_torus()
    t = unfold(s.graph, s)
    hc = decorate_histories(t)
    leaves = [n for n in hc.all_nodes() if n.is_leaf() and n.footprints]
    leaves[0].footprints, leaves[3].footprints = (
        leaves[3].footprints,
        leaves[0].footprints,
    )
    report = check_local_consistency(s.graph, hstar_graph(hc), hc.bwalk, hc)
    assert not report.accept


def test_checker_rejects_chain_reversal():
    s = k5_torus()
    t = unfold(s.graph, s)
    hc = decorate_histories(t)
    members = [
        f for n in hc.all_nodes() for f in n.footprints if f.obj == ("C''", 1)
    ]
    m = len(members)
    for f in members:
        f.index = (m - f.index) % m
    report = check_local_consistency(s.graph, hstar_graph(hc), hc.bwalk, hc)
    assert not report.accept
    assert any(cond == "cycle-chain" for cond, _ in report.violations)


def test_checker_rejects_walk_splice():
    s = k5_torus()
    t = unfold(s.graph, s)
    hc = decorate_histories(t)
    bw = list(hc.bwalk)
    bw[2], bw[5] = bw[5], bw[2]
    report = check_local_consistency(s.graph, hstar_graph(hc), tuple(bw), hc)
    assert not report.accept
    assert any(cond == "walk" for cond, _ in report.violations)


def test_genus_zero_collection_is_empty_and_accepted():
    from genuscert.fixtures import k4_planar

    s = k4_planar()
    t = unfold(s.graph, s)
    hc = decorate_histories(t)
    assert hc.depth == 0 and hc.bwalk is None
    report = check_local_consistency(s.graph, hstar_graph(hc), None, hc)
    assert report.accept


def test_refold_equivalence_on_mutations():
    # centralized acceptance must match reconstructed refolding
    from genuscert.composition import refold_from_collection
    from genuscert.prover import hstar_label_scheme

    rng = random.Random(5)
    for name, scheme in corpus().items():
        t = unfold(scheme.graph, scheme)
        hc = decorate_histories(t)
        hsch = hstar_label_scheme(t, hc)
        report = check_local_consistency(scheme.graph, hstar_graph(hc), hc.bwalk, hc)
        assert report.accept
        assert refold_from_collection(scheme.graph, hc, hsch), name
        # mutate chain indices / types and require both sides to reject
        for trial in range(6):
            hc2 = decorate_histories(t)
            fps = [f for n in hc2.all_nodes() for f in n.footprints if f.obj]
            if not fps:
                continue
            f = rng.choice(fps)
            kind = rng.choice(("index", "type"))
            if kind == "index":
                f.index = (f.index + 1 + rng.randrange(3)) % 10 + 1
            else:
                f.type_in = ("P'", 9)
            rep2 = check_local_consistency(
                scheme.graph, hstar_graph(hc2), hc2.bwalk, hc2
            )
            ok2 = refold_from_collection(scheme.graph, hc2, hsch)
            assert not rep2.accept
            assert not ok2, (name, kind)


def test_history_serialization():
    s = k5_torus()
    hc = decorate_histories(unfold(s.graph, s))
    out = format_histories(hc)
    assert out == format_histories(decorate_histories(unfold(s.graph, s)))
    assert "vertex 1" in out and "walk " in out
