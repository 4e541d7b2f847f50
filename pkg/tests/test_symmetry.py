"""Colored factor graph, refinement, automorphism search, and orbits."""

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import refines, sorted_cells
from liftedmap import fixtures
from liftedmap.model import Feature, Model
from liftedmap.oracle import exhaustive_automorphisms, generated_group
from liftedmap.symmetry import (
    GeneratorSymmetries,
    PermutationPair,
    TrivialSymmetries,
    _permuted_table,
    act_element,
    build_colored_factor_graph,
    canonicalize_feature,
    compute_orbit_bundle,
    orbits_of,
    refine_colors,
    search_automorphisms,
    stabilizer_generators,
    verify_generator,
)


# --- feature canonicalization -------------------------------------------------


def test_permuted_table_reads_mapped_positions():
    # g(y0, y1) = f(y1, y0)
    swapped = _permuted_table(fixtures.FIRST_ONLY, (1, 0), 2)
    assert swapped == fixtures.SECOND_ONLY


def test_canonical_table_shared_by_argument_reorderings():
    c1, p1, _ = canonicalize_feature(Feature(scope=(0, 1), table=fixtures.FIRST_ONLY))
    c2, p2, _ = canonicalize_feature(Feature(scope=(0, 1), table=fixtures.SECOND_ONLY))
    assert c1 == c2 == fixtures.FIRST_ONLY
    assert p1 == (0, 1) and p2 == (1, 0)


def test_slot_colors_fully_symmetric_table():
    for table in (fixtures.EQUALITY, fixtures.XOR, fixtures.AND, fixtures.OR):
        _, _, colors = canonicalize_feature(Feature(scope=(0, 1), table=table))
        assert colors == (0, 0)
    _, _, colors = canonicalize_feature(Feature(scope=(0, 1, 2), table=fixtures.XOR3))
    assert colors == (0, 0, 0)


def test_slot_colors_asymmetric_table():
    _, _, colors = canonicalize_feature(Feature(scope=(0, 1), table=fixtures.IMPLIES))
    assert len(set(colors)) == 2


def test_slot_colors_mark_interchangeable_positions():
    # f(a, s, t) = 1 unless a = 1 and s != t: symmetric in (s, t) only
    table = tuple(
        0.0 if (y[0] == 1 and y[1] != y[2]) else 1.0
        for y in itertools.product((0, 1), repeat=3)
    )
    _, _, colors = canonicalize_feature(Feature(scope=(0, 1, 2), table=table))
    assert colors[1] == colors[2] and colors[0] != colors[1]


@st.composite
def tables_and_perms(draw):
    arity = draw(st.integers(min_value=2, max_value=3))
    vals = st.sampled_from((0.0, 1.0, 2.0))
    while True:
        table = tuple(draw(vals) for _ in range(2 ** arity))
        try:
            f = Feature(scope=tuple(range(arity)), table=table)
        except Exception:
            continue
        break
    perm = draw(st.permutations(tuple(range(arity))))
    return f, tuple(perm)


@given(tables_and_perms())
@settings(max_examples=80, deadline=None)
def test_slot_colors_invariant_under_reordering(case):
    # relabeling the arguments permutes the slot colors the same way
    f, sigma = case
    g = Feature(scope=f.scope, table=_permuted_table(f.table, sigma, f.arity))
    cf, _, colors_f = canonicalize_feature(f)
    cg, _, colors_g = canonicalize_feature(g)
    assert cf == cg
    # g reads its argument sigma[k] where f reads argument k, so position k
    # of f corresponds to position sigma[k] of g
    assert colors_f == tuple(colors_g[sigma[k]] for k in range(f.arity))


# --- graph construction and refinement ----------------------------------------


def test_graph_structure_ex1():
    m = fixtures.ex1()
    g = build_colored_factor_graph(m)
    assert g.num_vars == 4 and g.num_factors == 5
    assert g.num_nodes == 9
    # variables share one color; factors are colored by (canonical table, tie)
    assert len({g.init_colors[v] for v in g.var_nodes}) == 1
    factor_colors = {g.init_colors[u] for u in g.factor_nodes}
    assert len(factor_colors) == 2  # FIRST/SECOND_ONLY merge, AND differs
    # adjacency is mirrored
    for u in range(g.num_nodes):
        for (w, c) in g.adj[u]:
            assert (u, c) in g.adj[w]


def test_tie_classes_split_factor_colors():
    feats = (Feature(scope=(0, 1), table=fixtures.AND),
             Feature(scope=(1, 2), table=fixtures.AND))
    tied = Model(num_vars=3, features=feats, tie_class_of=(0, 0), theta=(1.0,))
    untied = Model(num_vars=3, features=feats, tie_class_of=(0, 1), theta=(1.0, 1.0))
    g1 = build_colored_factor_graph(tied)
    g2 = build_colored_factor_graph(untied)
    assert len({g1.init_colors[u] for u in g1.factor_nodes}) == 1
    assert len({g2.init_colors[u] for u in g2.factor_nodes}) == 2


def test_refinement_reaches_fixpoint_and_is_canonical():
    m = fixtures.ex1()
    g = build_colored_factor_graph(m)
    ref = refine_colors(g)
    assert refine_colors(g, ref) == ref
    # EX1 refinement: outer pair {0,3}, inner pair {1,2}
    assert ref[0] == ref[3] and ref[1] == ref[2] and ref[0] != ref[1]


def test_refinement_on_frucht_leaves_one_variable_class():
    g = build_colored_factor_graph(fixtures.frucht())
    ref = refine_colors(g)
    assert len({ref[v] for v in g.var_nodes}) == 1


# --- automorphism search --------------------------------------------------------


def freeze(gens):
    return {(p.var_perm, p.feature_perm) for p in gens.generators}


def test_search_ex1_group():
    m = fixtures.ex1()
    gens = search_automorphisms(build_colored_factor_graph(m))
    assert gens.group_order == 4
    assert set(generated_group(gens, m)) == set(exhaustive_automorphisms(m))


def test_search_triangle_and_cycles():
    assert GeneratorSymmetries(fixtures.triangle()).gens.group_order == 6
    assert GeneratorSymmetries(fixtures.cycle_model(5)).gens.group_order == 10
    assert GeneratorSymmetries(fixtures.cycle_model(6)).gens.group_order == 12


def test_search_frucht_trivial_group():
    gens = GeneratorSymmetries(fixtures.frucht()).gens
    assert gens.group_order == 1 and gens.generators == ()


def test_search_triple_parity_full_symmetric_group():
    m = fixtures.triple_parity(4)
    gens = GeneratorSymmetries(m).gens
    assert gens.group_order == 24
    assert set(generated_group(gens, m)) == set(exhaustive_automorphisms(m))


def test_search_rejects_graph_only_candidates():
    # f(a,b,c,d) = [a==b][c==d]: all four slots share one orbit label, so the
    # graph alone cannot tell the positions apart, yet only 8 of the 24
    # variable permutations preserve the table.
    table = tuple(
        float(y[0] == y[1] and y[2] == y[3])
        for y in itertools.product((0, 1), repeat=4)
    )
    m = Model(num_vars=4,
              features=(Feature(scope=(0, 1, 2, 3), table=table),),
              tie_class_of=(0,), theta=(1.0,))
    _, _, colors = canonicalize_feature(m.features[0])
    assert len(set(colors)) == 1
    gens = GeneratorSymmetries(m).gens
    assert gens.group_order == 8
    assert set(generated_group(gens, m)) == set(exhaustive_automorphisms(m))


def test_search_generators_verify_on_samples():
    for m in (fixtures.ex1(), fixtures.triangle(), fixtures.frucht(),
              fixtures.triple_parity(4)):
        for pair in GeneratorSymmetries(m).gens.generators:
            check = verify_generator(m, pair, num_samples=100, seed=0)
            assert check.ok, check.reason


@pytest.mark.parametrize("seed", range(10))
def test_search_random_models_match_exhaustive(seed):
    m = fixtures.random_tied_pairwise(seed)
    gens = GeneratorSymmetries(m).gens
    for pair in gens.generators:
        assert verify_generator(m, pair, num_samples=100, seed=seed).ok
    if m.num_vars <= 6:
        assert set(generated_group(gens, m)) == set(exhaustive_automorphisms(m))


def test_verify_generator_rejects_bad_pairs():
    m = fixtures.ex1()
    bad = PermutationPair(var_perm=(1, 0, 2, 3), feature_perm=(0, 1, 2, 3, 4))
    res = verify_generator(m, bad)
    assert not res.ok and res.reason


def test_stabilizer_generators_fix_the_variable():
    m = fixtures.triangle()
    g = build_colored_factor_graph(m)
    stab = stabilizer_generators(g, 0)
    assert stab.group_order == 2
    for pair in stab.generators:
        assert pair.var_perm[0] == 0
    cells = sorted_cells(orbits_of(stab, "vars", m).cells)
    assert cells == ((0,), (1, 2))


# --- orbit partitions ----------------------------------------------------------


def test_orbit_bundle_ex1_frozen_cells():
    m = fixtures.ex1()
    b = GeneratorSymmetries(m).bundle()
    assert sorted_cells(b.vars.cells) == ((0, 3), (1, 2))
    assert sorted(len(c) for c in b.edges.cells) == [1, 4]
    assert sorted(len(c) for c in b.arcs.cells) == [2, 4, 4]
    assert sorted(len(c) for c in b.features.cells) == [1, 4]
    assert b.factor_assignments.cells == ()  # pairwise model: no factor blocks


def test_orbit_cells_closed_under_generators():
    for m in (fixtures.ex1(), fixtures.triple_parity(4),
              fixtures.random_tied_pairwise(3)):
        s = GeneratorSymmetries(m)
        b = s.bundle()
        for domain, part in (("vars", b.vars), ("features", b.features),
                             ("edges", b.edges), ("arcs", b.arcs),
                             ("factor-assignments", b.factor_assignments)):
            cell_of = {}
            for i, cell in enumerate(part.cells):
                for e in cell:
                    cell_of[e] = i
            for pair in s.gens.generators:
                for e, i in cell_of.items():
                    assert cell_of[act_element(domain, e, pair, m)] == i


def test_trivial_symmetries_are_singletons():
    m = fixtures.triangle()
    b = TrivialSymmetries(m).bundle()
    assert all(len(c) == 1 for c in b.vars.cells)
    assert len(b.arcs.cells) == 6
    trivial = compute_orbit_bundle(TrivialSymmetries(m).gens, m)
    assert sorted_cells(trivial.vars.cells) == ((0,), (1,), (2,))


def test_search_orbits_coarser_than_trivial_finer_than_everything():
    m = fixtures.cycle_model(5)
    s = GeneratorSymmetries(m).bundle()
    t = TrivialSymmetries(m).bundle()
    assert refines(t.vars.cells, s.vars.cells)
    assert refines(t.arcs.cells, s.arcs.cells)
