"""Symmetry detection for factored models via a colored factor graph.

The model's symmetries are permutation pairs (variable permutation, feature
permutation) that leave the weighted statistics unchanged while respecting
the tie classes. They are found as color-preserving automorphisms of a
bipartite graph: one node per variable (all sharing one color), one node per
feature (colored by canonical table and tie class), and edges from a feature
to its scope variables colored by the argument position in the feature's
canonical argument order (a single uniform color when the table is invariant
under every argument permutation).

The search is individualization-refinement backtracking with orbit pruning:
discovered automorphisms prune sibling branches at every tree node, and
subtrees off the first (base) leaf's path are abandoned as soon as they
produce one automorphism. Every returned generator is re-verified against
the model directly, so orbits computed from the result are sound even if the
graph encoding were too coarse.
"""

from __future__ import annotations

import itertools
import random
from collections import Counter
from dataclasses import dataclass, replace

from .model import Model, ModelError, assignments, skeleton, table_index


class _UnionFind:
    def __init__(self, size):
        self.parent = list(range(size))

    def find(self, a):
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        # root at the smaller index so representatives are minima
        if ra < rb:
            self.parent[rb] = ra
        else:
            self.parent[ra] = rb


@dataclass(frozen=True)
class PermutationPair:
    """A variable permutation and a feature permutation acting together."""

    var_perm: tuple
    feature_perm: tuple

    def __post_init__(self):
        object.__setattr__(self, "var_perm", tuple(int(v) for v in self.var_perm))
        object.__setattr__(self, "feature_perm", tuple(int(j) for j in self.feature_perm))


@dataclass(frozen=True)
class GeneratorSet:
    """Verified generators of a symmetry group, with its order when known."""

    generators: tuple
    group_order: int = None

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))


@dataclass(frozen=True)
class VerifyResult:
    ok: bool
    reason: str = ""
    witness_config: tuple = None
    witness_feature: int = None


@dataclass(frozen=True)
class OrbitPartition:
    """Partition of one coordinate domain into orbit cells.

    Cells are sorted by their minimum element; each cell lists its members in
    increasing order, so cells[i][0] is the representative of cell i.
    """

    domain: str
    elements: tuple
    cells: tuple
    cell_of: dict
    reps: tuple

    @property
    def num_cells(self) -> int:
        return len(self.cells)


@dataclass(frozen=True)
class OrbitBundle:
    """Orbit partitions of all five coordinate domains of one model."""

    vars: OrbitPartition
    features: OrbitPartition
    edges: OrbitPartition
    arcs: OrbitPartition
    factor_assignments: OrbitPartition


# ---------------------------------------------------------------------------
# feature canonicalization


def _permuted_table(table, perm, arity):
    # argument i of the reordered function reads argument position perm[i]
    out = []
    for y in itertools.product((0, 1), repeat=arity):
        a = tuple(y[perm[j]] for j in range(arity))
        out.append(table[table_index(a)])
    return tuple(out)


_CANON_CACHE = {}


def canonicalize_feature(f):
    """Lexicographically smallest table over argument reorderings.

    Returns (canonical table, reordering, slot colors). The reordering maps
    original argument position k to canonical slot reorder[k]. slot_colors[k]
    labels that slot's orbit under the canonical table's own argument
    symmetries, so two positions get equal colors exactly when the table
    treats them interchangeably. Any scope position map induced by a model
    symmetry preserves these labels.
    """
    key = (f.table, f.arity)
    hit = _CANON_CACHE.get(key)
    if hit is not None:
        return hit
    best = None
    best_p = None
    for p in itertools.permutations(range(f.arity)):
        t = _permuted_table(f.table, p, f.arity)
        if best is None or t < best:
            best = t
            best_p = p
    aut = [
        q
        for q in itertools.permutations(range(f.arity))
        if _permuted_table(best, q, f.arity) == best
    ]
    orbit_label = [min(q[s] for q in aut) for s in range(f.arity)]
    slot_colors = tuple(orbit_label[best_p[k]] for k in range(f.arity))
    result = (best, best_p, slot_colors)
    _CANON_CACHE[key] = result
    return result


# ---------------------------------------------------------------------------
# colored factor graph


@dataclass(frozen=True)
class ColoredFactorGraph:
    """Bipartite node-colored, edge-colored encoding of a model.

    Nodes 0..n-1 are variables, nodes n..n+m-1 are features. adj[u] holds
    sorted (neighbor, edge color) pairs.
    """

    model: Model
    num_vars: int
    num_factors: int
    init_colors: tuple
    adj: tuple
    factor_canon: tuple

    @property
    def num_nodes(self) -> int:
        return self.num_vars + self.num_factors

    @property
    def var_nodes(self):
        return range(self.num_vars)

    @property
    def factor_nodes(self):
        return range(self.num_vars, self.num_nodes)


def build_colored_factor_graph(model: Model) -> ColoredFactorGraph:
    """Encode the model so every model symmetry is a graph automorphism.

    The converse can fail: edge colors identify argument positions only up
    to the table's own slot symmetries, so a candidate found on the graph
    still needs an exact table check before it counts.
    """
    n, m = model.num_vars, model.num_features
    canon = tuple(canonicalize_feature(f) for f in model.features)
    keys = sorted({(canon[j][0], model.tie_class_of[j]) for j in range(m)})
    color_of = {key: 1 + i for i, key in enumerate(keys)}
    colors = [0] * n
    colors += [color_of[(canon[j][0], model.tie_class_of[j])] for j in range(m)]
    adj = [[] for _ in range(n + m)]
    for j, f in enumerate(model.features):
        _, _, slot_colors = canon[j]
        for k, v in enumerate(f.scope):
            ecol = slot_colors[k]
            adj[v].append((n + j, ecol))
            adj[n + j].append((v, ecol))
    return ColoredFactorGraph(
        model=model,
        num_vars=n,
        num_factors=m,
        init_colors=tuple(colors),
        adj=tuple(tuple(sorted(nbrs)) for nbrs in adj),
        factor_canon=canon,
    )


def refine_colors(graph: ColoredFactorGraph, colors=None):
    """Coarsest equitable refinement of the node coloring.

    Two nodes end up with the same color iff they start with the same color
    and have the same multiset of (neighbor color, edge color) pairs, iterated
    to a fixpoint. Color ids are canonical: assigned by sorted signature, so
    they are comparable across runs on relabeled graphs.
    """
    colors = tuple(graph.init_colors if colors is None else colors)
    while True:
        sigs = []
        for u in range(graph.num_nodes):
            nb = tuple(sorted((colors[w], ec) for (w, ec) in graph.adj[u]))
            sigs.append((colors[u], nb))
        order = sorted(set(sigs))
        ids = {s: i for i, s in enumerate(order)}
        new = tuple(ids[s] for s in sigs)
        if len(order) == len(set(colors)):
            return new
        colors = new


def _color_classes(colors):
    classes = {}
    for u, c in enumerate(colors):
        classes.setdefault(c, []).append(u)
    return classes


def _target_cell(colors):
    # largest non-singleton class; ties broken by smallest color id
    classes = _color_classes(colors)
    best = None
    for c in sorted(classes):
        members = classes[c]
        if len(members) < 2:
            continue
        if best is None or len(members) > len(best):
            best = members
    return best


# ---------------------------------------------------------------------------
# automorphism search


def search_automorphisms(graph: ColoredFactorGraph) -> GeneratorSet:
    """Individualization-refinement search for graph automorphisms.

    Returns verified generators of the full color-preserving automorphism
    group of the graph, split into (variable, feature) permutation pairs, and
    the exact group order from the search tree's base path.
    """
    n_nodes = graph.num_nodes
    root = refine_colors(graph)

    gens = []  # node permutations over the whole graph
    base_path = []
    base_invariants = []
    base_leaf = [None]

    def histogram(colors):
        return tuple(sorted(Counter(colors).items()))

    def leaf_map(colors):
        return {c: u for u, c in enumerate(colors)}

    def is_graph_automorphism(perm):
        ic = graph.init_colors
        for u in range(n_nodes):
            if ic[u] != ic[perm[u]]:
                return False
            image = tuple(sorted((perm[w], c) for (w, c) in graph.adj[u]))
            if image != graph.adj[perm[u]]:
                return False
        return True

    def is_model_automorphism(perm):
        # Edge colors are coarse where a table has interchangeable
        # positions, so recheck each feature's table exactly.
        feats = graph.model.features
        nv = graph.num_vars
        for j, f in enumerate(feats):
            f2 = feats[perm[nv + j] - nv]
            pos = {v: k for k, v in enumerate(f2.scope)}
            sigma = tuple(pos[perm[v]] for v in f.scope)
            if _permuted_table(f.table, sigma, f.arity) != f2.table:
                return False
        return True

    def stab_gens(path):
        return [g for g in gens if all(g[v] == v for v in path)]

    def node_orbits(sub):
        uf = _UnionFind(n_nodes)
        for g in sub:
            for u in range(n_nodes):
                uf.union(u, g[u])
        return uf

    def search(colors, path, on_base):
        depth = len(path)
        if base_leaf[0] is None:
            base_invariants.append(histogram(colors))
        elif depth >= len(base_invariants) or histogram(colors) != base_invariants[depth]:
            return False
        cell = _target_cell(colors)
        if cell is None:
            if base_leaf[0] is None:
                base_leaf[0] = leaf_map(colors)
                base_path.extend(path)
                return False
            here = leaf_map(colors)
            perm = [0] * n_nodes
            for c, u in base_leaf[0].items():
                perm[u] = here[c]
            perm = tuple(perm)
            if (
                perm != tuple(range(n_nodes))
                and is_graph_automorphism(perm)
                and is_model_automorphism(perm)
            ):
                gens.append(perm)
                return True
            return False
        found_any = False
        explored = []
        uf = None
        for v in sorted(cell):
            if explored:
                if uf is None:
                    uf = node_orbits(stab_gens(path))
                if any(uf.find(v) == uf.find(w) for w in explored):
                    continue
            explored.append(v)
            child = list(colors)
            child[v] = max(colors) + 1
            refined = refine_colors(graph, tuple(child))
            found = search(refined, path + (v,), on_base and base_leaf[0] is None)
            if found:
                found_any = True
                if not on_base:
                    return True  # backjump off the base path
                uf = None  # new generator: recompute sibling orbits
        return found_any

    search(root, (), True)

    pairs = []
    for g in gens:
        pi = tuple(g[v] for v in range(graph.num_vars))
        ga = tuple(g[graph.num_vars + j] - graph.num_vars for j in range(graph.num_factors))
        pair = PermutationPair(var_perm=pi, feature_perm=ga)
        check = verify_generator(graph.model, pair)
        if not check.ok:
            raise RuntimeError("internal: search produced an invalid generator: %s" % check.reason)
        pairs.append(pair)

    order = 1
    for i, v in enumerate(base_path):
        sub = stab_gens(base_path[:i])
        orbit = {v}
        frontier = [v]
        while frontier:
            u = frontier.pop()
            for g in sub:
                w = g[u]
                if w not in orbit:
                    orbit.add(w)
                    frontier.append(w)
        order *= len(orbit)
    return GeneratorSet(generators=tuple(pairs), group_order=order)


def stabilizer_generators(graph: ColoredFactorGraph, fixed_var: int) -> GeneratorSet:
    """Generators of the subgroup fixing one variable, via recoloring."""
    if not 0 <= fixed_var < graph.num_vars:
        raise ModelError("fixed variable %d out of range" % fixed_var)
    colors = list(graph.init_colors)
    colors[fixed_var] = max(colors) + 1
    return search_automorphisms(replace(graph, init_colors=tuple(colors)))


# ---------------------------------------------------------------------------
# verification against the model


def verify_generator(model: Model, pair: PermutationPair, num_samples: int = 100, seed: int = 0) -> VerifyResult:
    """Check that the pair preserves weighted statistics and tie classes.

    Evaluates every feature on the permuted configuration against its image
    feature on the original, for the all-zeros and all-ones configurations
    plus num_samples seeded-random ones. Fails fast with a witness.
    """
    n, m = model.num_vars, model.num_features
    pi, ga = pair.var_perm, pair.feature_perm
    if len(pi) != n or sorted(pi) != list(range(n)):
        return VerifyResult(False, reason="variable map is not a permutation of the variables")
    if len(ga) != m or sorted(ga) != list(range(m)):
        return VerifyResult(False, reason="feature map is not a permutation of the features")
    for j in range(m):
        if model.tie_class_of[j] != model.tie_class_of[ga[j]]:
            return VerifyResult(
                False, reason="feature map does not respect tie classes", witness_feature=j
            )
    rng = random.Random(seed)
    configs = [(0,) * n, (1,) * n]
    configs += [tuple(rng.randrange(2) for _ in range(n)) for _ in range(num_samples)]
    for x in configs:
        xp = tuple(x[pi[i]] for i in range(n))
        for j, f in enumerate(model.features):
            if f.value(xp) != model.features[ga[j]].value(x):
                return VerifyResult(
                    False, reason="statistics differ", witness_config=x, witness_feature=j
                )
    return VerifyResult(True)


# ---------------------------------------------------------------------------
# orbit partitions


ORBIT_DOMAINS = ("vars", "features", "edges", "arcs", "factor-assignments")


def _domain_elements(domain, model):
    if domain == "vars":
        return list(range(model.num_vars))
    if domain == "features":
        return list(range(model.num_features))
    if domain == "edges":
        return list(skeleton(model).edges)
    if domain == "arcs":
        return [a for (u, v) in skeleton(model).edges for a in ((u, v), (v, u))]
    if domain == "factor-assignments":
        out = []
        for j, f in enumerate(model.features):
            if f.arity >= 3:
                out.extend((j, a) for a in assignments(f.arity))
        return out
    raise ModelError("unknown orbit domain %r" % (domain,))


def act_element(domain, element, pair: PermutationPair, model: Model):
    """Image of one domain element under a permutation pair."""
    pi = pair.var_perm
    if domain == "vars":
        return pi[element]
    if domain == "features":
        return pair.feature_perm[element]
    if domain == "edges":
        u, v = element
        a, b = pi[u], pi[v]
        return (a, b) if a < b else (b, a)
    if domain == "arcs":
        u, v = element
        return (pi[u], pi[v])
    if domain == "factor-assignments":
        j, a = element
        j2 = pair.feature_perm[j]
        pos = {u: i for i, u in enumerate(model.features[j2].scope)}
        out = [0] * len(a)
        for k, u in enumerate(model.features[j].scope):
            out[pos[pi[u]]] = a[k]
        return (j2, tuple(out))
    raise ModelError("unknown orbit domain %r" % (domain,))


def orbits_of(gens, domain: str, model: Model) -> OrbitPartition:
    """Orbit partition of one coordinate domain under the generated group."""
    domain = domain.replace("_", "-")
    elements = sorted(_domain_elements(domain, model))
    index = {e: i for i, e in enumerate(elements)}
    uf = _UnionFind(len(elements))
    pairs = gens.generators if isinstance(gens, GeneratorSet) else tuple(gens)
    for pair in pairs:
        for e in elements:
            img = act_element(domain, e, pair, model)
            if img not in index:
                raise ModelError("generator maps %r outside the %s domain" % (e, domain))
            uf.union(index[e], index[img])
    groups = {}
    for i, e in enumerate(elements):
        groups.setdefault(uf.find(i), []).append(e)
    cells = tuple(tuple(members) for _, members in sorted(groups.items()))
    cell_of = {}
    for ci, members in enumerate(cells):
        for e in members:
            cell_of[e] = ci
    return OrbitPartition(
        domain=domain,
        elements=tuple(elements),
        cells=cells,
        cell_of=cell_of,
        reps=tuple(members[0] for members in cells),
    )


def compute_orbit_bundle(gens, model: Model) -> OrbitBundle:
    """Orbit partitions of all five domains under one generator set."""
    return OrbitBundle(
        vars=orbits_of(gens, "vars", model),
        features=orbits_of(gens, "features", model),
        edges=orbits_of(gens, "edges", model),
        arcs=orbits_of(gens, "arcs", model),
        factor_assignments=orbits_of(gens, "factor-assignments", model),
    )


# ---------------------------------------------------------------------------
# symmetry sources: a uniform handle for lifting and separation


class GeneratorSymmetries:
    """Symmetries obtained by automorphism search on the colored graph."""

    def __init__(self, model: Model, graph=None, gens=None):
        self.model = model
        self.graph = build_colored_factor_graph(model) if graph is None else graph
        self.gens = search_automorphisms(self.graph) if gens is None else gens

    def bundle(self) -> OrbitBundle:
        return compute_orbit_bundle(self.gens, self.model)

    def stabilized_light(self, fixed_var: int):
        """Variable and edge orbits under the stabilizer of one variable."""
        sub = stabilizer_generators(self.graph, fixed_var)
        return (
            orbits_of(sub, "vars", self.model),
            orbits_of(sub, "edges", self.model),
        )


class TrivialSymmetries:
    """The identity group: every coordinate is its own orbit."""

    def __init__(self, model: Model):
        self.model = model
        self.gens = GeneratorSet(generators=(), group_order=1)

    def bundle(self) -> OrbitBundle:
        return compute_orbit_bundle(self.gens, self.model)

    def stabilized_light(self, fixed_var: int):
        return (
            orbits_of(self.gens, "vars", self.model),
            orbits_of(self.gens, "edges", self.model),
        )
