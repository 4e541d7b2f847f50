"""Binary factored exponential-family models with tied parameters.

A model is a set of table-valued features over binary variables. Each feature
has an ordered scope (strictly increasing variable indices) and a table of
2^K reals indexed by assignments to the scope, enumerated with the FIRST
scope variable most significant: (0,..,0), (0,..,0,1), ..., (1,..,1).
Features are grouped into tie classes that share one natural parameter.

The score of a configuration x is sum_j theta[tie(j)] * table_j[x | scope_j],
i.e. the log-density up to the normalizing constant.

File format (FGM, UTF-8, line oriented, '#' starts a comment):

    fgm 1
    vars <n>
    tieclasses <K>
    theta <k> <real>            # one line per tie class k in 0..K-1
    factor <tieclass> <arity> <v1> ... <vK> <2^K reals>

Serialization via :func:`format_model` is canonical: parsing a canonical
file and re-serializing reproduces it byte for byte.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field


class ModelError(ValueError):
    """A structurally invalid model (bad scope, table, tie class, ...)."""


class ModelFormatError(ModelError):
    """Malformed FGM text; message carries the 1-based line number."""


def table_index(assignment) -> int:
    """Index of a scope assignment in table order (first variable most significant)."""
    idx = 0
    for bit in assignment:
        idx = idx * 2 + bit
    return idx


def assignments(arity: int):
    """All assignments of an arity-K scope in table order."""
    return itertools.product((0, 1), repeat=arity)


@dataclass(frozen=True)
class Feature:
    """One table-valued feature: an ordered scope and 2^K table entries."""

    scope: tuple
    table: tuple

    def __post_init__(self):
        object.__setattr__(self, "scope", tuple(int(v) for v in self.scope))
        object.__setattr__(self, "table", tuple(float(t) for t in self.table))
        if len(self.scope) < 1:
            raise ModelError("feature scope is empty")
        for a, b in zip(self.scope, self.scope[1:]):
            if a >= b:
                raise ModelError("scope must be strictly increasing: %r" % (self.scope,))
        if self.scope[0] < 0:
            raise ModelError("variable index out of range: %d" % self.scope[0])
        expected = 2 ** len(self.scope)
        if len(self.table) != expected:
            raise ModelError(
                "table length mismatch: expected %d entries, got %d"
                % (expected, len(self.table))
            )
        for t in self.table:
            if not math.isfinite(t):
                raise ModelError("table entry is not finite: %r" % t)

    @property
    def arity(self) -> int:
        return len(self.scope)

    def value(self, x) -> float:
        """Table value at the configuration x (full configuration, n bits)."""
        return self.table[table_index(x[v] for v in self.scope)]


@dataclass(frozen=True)
class Model:
    """A validated factored model over binary variables.

    Fields:
        num_vars: number n of binary variables, indexed 0..n-1.
        features: tuple of Feature, indexed 0..m-1.
        tie_class_of: tuple mapping feature index -> tie class index.
        theta: tuple mapping tie class index -> shared weight.
    """

    num_vars: int
    features: tuple
    tie_class_of: tuple
    theta: tuple

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        object.__setattr__(self, "tie_class_of", tuple(int(k) for k in self.tie_class_of))
        object.__setattr__(self, "theta", tuple(float(w) for w in self.theta))
        if self.num_vars < 1:
            raise ModelError("num_vars must be at least 1")
        m = len(self.features)
        if m < 1:
            raise ModelError("model has no features")
        if len(self.tie_class_of) != m:
            raise ModelError(
                "tie_class_of has %d entries for %d features" % (len(self.tie_class_of), m)
            )
        num_classes = len(self.theta)
        for w in self.theta:
            if not math.isfinite(w):
                raise ModelError("theta is not finite: %r" % w)
        seen = set()
        for j, f in enumerate(self.features):
            if not isinstance(f, Feature):
                raise ModelError("features[%d] is not a Feature" % j)
            if f.scope[-1] >= self.num_vars:
                raise ModelError(
                    "feature %d: variable index out of range: %d" % (j, f.scope[-1])
                )
            k = self.tie_class_of[j]
            if not 0 <= k < num_classes:
                raise ModelError("feature %d: unknown tie class %d" % (j, k))
            seen.add(k)
            _check_dependence(j, f)
        for k in range(num_classes):
            if k not in seen:
                raise ModelError("tie class %d is empty" % k)

    @property
    def num_features(self) -> int:
        return len(self.features)

    def weight_of(self, j: int) -> float:
        """Weight of feature j (its tie class's theta)."""
        return self.theta[self.tie_class_of[j]]


def _check_dependence(j: int, f: Feature):
    # a feature must depend on every argument: for each position some pair of
    # table entries differing only there must differ in value
    k = f.arity
    for pos in range(k):
        bit = 1 << (k - 1 - pos)
        if all(f.table[i] == f.table[i ^ bit] for i in range(2 ** k) if not i & bit):
            raise ModelError("feature %d does not depend on argument %d" % (j, pos))


def score(model: Model, x) -> float:
    """Log-density of configuration x up to the normalizing constant."""
    x = tuple(x)
    if len(x) != model.num_vars:
        raise ModelError(
            "configuration length mismatch: got %d bits for %d variables"
            % (len(x), model.num_vars)
        )
    for b in x:
        if b not in (0, 1):
            raise ModelError("configuration entries must be 0 or 1, got %r" % (b,))
    total = 0.0
    for j, f in enumerate(model.features):
        total += model.weight_of(j) * f.value(x)
    return total


# ---------------------------------------------------------------------------
# overcomplete reparameterization


@dataclass
class OvercompleteParams:
    """Equivalent parameters over indicator coordinates.

    node_theta[(v, t)] sums theta_j * f_j(t) over unary features with scope (v,).
    pair_theta[((u, v), (t, t'))] sums over binary features with scope (u, v).
    factor_theta[(j, a)] keeps each arity >= 3 feature separate: theta_j * f_j(a).
    """

    node_theta: dict = field(default_factory=dict)
    pair_theta: dict = field(default_factory=dict)
    factor_theta: dict = field(default_factory=dict)


def to_overcomplete(model: Model) -> OvercompleteParams:
    """Re-express the model over indicator coordinates; scoring is preserved."""
    out = OvercompleteParams()
    for v in range(model.num_vars):
        out.node_theta[(v, 0)] = 0.0
        out.node_theta[(v, 1)] = 0.0
    for u, v in skeleton(model).edges:
        for a in assignments(2):
            out.pair_theta[((u, v), a)] = 0.0
    for j, f in enumerate(model.features):
        w = model.weight_of(j)
        if f.arity == 1:
            v = f.scope[0]
            out.node_theta[(v, 0)] += w * f.table[0]
            out.node_theta[(v, 1)] += w * f.table[1]
        elif f.arity == 2:
            uv = f.scope
            for i, a in enumerate(assignments(2)):
                out.pair_theta[(uv, a)] += w * f.table[i]
        else:
            for i, a in enumerate(assignments(f.arity)):
                out.factor_theta[(j, a)] = w * f.table[i]
    return out


@dataclass(frozen=True)
class Skeleton:
    """Interaction structure: pairwise edges and arity >= 3 clusters."""

    edges: tuple
    hyperedges: tuple


def skeleton(model: Model) -> Skeleton:
    """Edges are all pairs co-occurring in a scope; hyperedges are arity >= 3 scopes."""
    edges = set()
    hyper = set()
    for f in model.features:
        for u, v in itertools.combinations(f.scope, 2):
            edges.add((u, v))
        if f.arity >= 3:
            hyper.add(f.scope)
    return Skeleton(edges=tuple(sorted(edges)), hyperedges=tuple(sorted(hyper)))


class OvercompleteLayout:
    """Fixed ordering of the overcomplete coordinates of one model.

    Coordinates come in three blocks:
      nodes:   (v, t) at index 2*v + t
      edges:   ((u, v), (a, b)) in sorted edge order, 4 coordinates per edge
      factors: (j, a) for each arity >= 3 feature j, 2^K coordinates in table order

    The same ordering is used for LP variables over these coordinates.
    """

    def __init__(self, model: Model):
        self.model = model
        sk = skeleton(model)
        self.edges = sk.edges
        self.factor_features = tuple(
            j for j, f in enumerate(model.features) if f.arity >= 3
        )
        self.node_count = 2 * model.num_vars
        self._edge_base = {}
        pos = self.node_count
        for e in self.edges:
            self._edge_base[e] = pos
            pos += 4
        self._factor_base = {}
        for j in self.factor_features:
            self._factor_base[j] = pos
            pos += 2 ** model.features[j].arity
        self.size = pos
        self.keys = []
        for v in range(model.num_vars):
            self.keys.append(("node", v, 0))
            self.keys.append(("node", v, 1))
        for (u, v) in self.edges:
            for a, b in assignments(2):
                self.keys.append(("edge", u, v, a, b))
        for j in self.factor_features:
            for a in assignments(model.features[j].arity):
                self.keys.append(("factor", j, a))
        self.keys = tuple(self.keys)

    def node_index(self, v: int, t: int) -> int:
        return 2 * v + t

    def edge_index(self, u: int, v: int, a: int, b: int) -> int:
        return self._edge_base[(u, v)] + 2 * a + b

    def factor_index(self, j: int, a) -> int:
        return self._factor_base[j] + table_index(a)

    def theta_vector(self):
        """Overcomplete parameters laid out as a dense vector."""
        import numpy as np

        theta = np.zeros(self.size)
        oc = to_overcomplete(self.model)
        for (v, t), w in oc.node_theta.items():
            theta[self.node_index(v, t)] = w
        for ((u, v), (a, b)), w in oc.pair_theta.items():
            theta[self.edge_index(u, v, a, b)] = w
        for (j, a), w in oc.factor_theta.items():
            theta[self.factor_index(j, a)] = w
        return theta

    def phi_vector(self, x):
        """Indicator statistics of configuration x in this layout."""
        import numpy as np

        x = tuple(x)
        phi = np.zeros(self.size)
        for v in range(self.model.num_vars):
            phi[self.node_index(v, x[v])] = 1.0
        for (u, v) in self.edges:
            phi[self.edge_index(u, v, x[u], x[v])] = 1.0
        for j in self.factor_features:
            a = tuple(x[v] for v in self.model.features[j].scope)
            phi[self.factor_index(j, a)] = 1.0
        return phi


# ---------------------------------------------------------------------------
# FGM text format


def parse_model(text: str) -> Model:
    """Parse FGM text into a validated Model.

    Raises ModelFormatError with a 1-based line number for malformed input,
    or ModelError naming the violated invariant for semantic problems.
    """
    lines = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if body:
            lines.append((ln, body.split()))
    cursor = 0

    def take(expect_word=None):
        nonlocal cursor
        if cursor >= len(lines):
            raise ModelFormatError("unexpected end of file")
        ln, toks = lines[cursor]
        cursor += 1
        if expect_word is not None and toks[0] != expect_word:
            raise ModelFormatError("line %d: expected '%s', got '%s'" % (ln, expect_word, toks[0]))
        return ln, toks

    def as_int(ln, tok, what):
        try:
            return int(tok)
        except ValueError:
            raise ModelFormatError("line %d: %s must be an integer, got '%s'" % (ln, what, tok))

    def as_float(ln, tok, what):
        try:
            return float(tok)
        except ValueError:
            raise ModelFormatError("line %d: %s must be a real, got '%s'" % (ln, what, tok))

    ln, toks = take("fgm")
    if toks[1:] != ["1"]:
        raise ModelFormatError("line %d: unsupported format version %r" % (ln, " ".join(toks[1:])))
    ln, toks = take("vars")
    if len(toks) != 2:
        raise ModelFormatError("line %d: expected 'vars <n>'" % ln)
    num_vars = as_int(ln, toks[1], "variable count")
    ln, toks = take("tieclasses")
    if len(toks) != 2:
        raise ModelFormatError("line %d: expected 'tieclasses <K>'" % ln)
    num_classes = as_int(ln, toks[1], "tie class count")
    theta = {}
    for _ in range(num_classes):
        ln, toks = take("theta")
        if len(toks) != 3:
            raise ModelFormatError("line %d: expected 'theta <k> <real>'" % ln)
        k = as_int(ln, toks[1], "tie class index")
        if not 0 <= k < num_classes:
            raise ModelFormatError("line %d: tie class index %d out of range" % (ln, k))
        if k in theta:
            raise ModelFormatError("line %d: duplicate theta for tie class %d" % (ln, k))
        theta[k] = as_float(ln, toks[2], "theta")

    features = []
    tie_class_of = []
    while cursor < len(lines):
        ln, toks = take("factor")
        if len(toks) < 3:
            raise ModelFormatError("line %d: expected 'factor <tieclass> <arity> ...'" % ln)
        tie = as_int(ln, toks[1], "tie class")
        arity = as_int(ln, toks[2], "arity")
        if arity < 1:
            raise ModelFormatError("line %d: arity must be at least 1" % ln)
        need = 3 + arity + 2 ** arity
        if len(toks) != need:
            raise ModelFormatError(
                "line %d: table length mismatch (expected %d reals after the scope, got %d)"
                % (ln, 2 ** arity, len(toks) - 3 - arity)
            )
        scope = [as_int(ln, t, "variable index") for t in toks[3 : 3 + arity]]
        table = [as_float(ln, t, "table entry") for t in toks[3 + arity :]]
        try:
            features.append(Feature(scope=scope, table=table))
        except ModelError as e:
            raise ModelFormatError("line %d: %s" % (ln, e)) from None
        tie_class_of.append(tie)

    return Model(
        num_vars=num_vars,
        features=tuple(features),
        tie_class_of=tuple(tie_class_of),
        theta=tuple(theta.get(k, 0.0) for k in range(num_classes)),
    )


def format_model(model: Model) -> str:
    """Canonical FGM serialization; parse(format(m)) == m and round-trips bytes."""
    out = ["fgm 1", "vars %d" % model.num_vars, "tieclasses %d" % len(model.theta)]
    for k, w in enumerate(model.theta):
        out.append("theta %d %s" % (k, repr(w)))
    for j, f in enumerate(model.features):
        parts = ["factor", str(model.tie_class_of[j]), str(f.arity)]
        parts.extend(str(v) for v in f.scope)
        parts.extend(repr(t) for t in f.table)
        out.append(" ".join(parts))
    return "\n".join(out) + "\n"
