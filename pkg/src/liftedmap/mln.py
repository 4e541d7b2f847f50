"""Markov logic front end: parsing, grounding, and renaming orbits.

An MLN is a list of weighted first-order formulas over predicates with named
or generated constants. Grounding produces one binary variable per ground
atom (hard-evidence atoms are conditioned away) and one indicator feature
per formula grounding, with all groundings of a formula tied to one weight.

Renaming orbits exploit that permuting interchangeable constants leaves the
grounded model invariant: ground atoms, formula groundings, variable pairs,
and factor assignments are grouped by signatures built from the
distinguished constants (those named in formulas or evidence) and the
equality pattern of the remaining ones. No automorphism search is involved.

File formats:
  MLN: optional `predicate Name/arity` headers, then `<weight> <formula>`
  lines; '#' starts a comment. Operators: ! ^ v => <=> and term
  (in)equalities `x = y`, `x != y`; parentheses group. Predicate and
  constant names are capitalized, logical variables are lowercase.
  Equality atoms act as substitution constraints: groundings violating one
  are skipped, satisfied ones are replaced by True.

  Evidence: one entry per line: `Atom`, `!Atom`, or `soft Atom <weight>`
  with ground (all-constant) atoms.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass

from .model import Feature, Model, skeleton, table_index
from .symmetry import OrbitBundle, OrbitPartition


class MLNError(ValueError):
    """Invalid MLN input: arity clash, bad evidence, domain too small, ..."""


class MLNFormatError(MLNError):
    """Malformed MLN or evidence text; message carries line (and column)."""


# ---------------------------------------------------------------------------
# formula AST


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple  # terms: ("var", name) or ("const", name)


@dataclass(frozen=True)
class Not:
    sub: object


@dataclass(frozen=True)
class BinOp:
    op: str  # "^", "v", "=>", "<=>"
    left: object
    right: object


@dataclass(frozen=True)
class Compare:
    op: str  # "=", "!="
    left: tuple
    right: tuple


@dataclass(frozen=True)
class MLN:
    predicates: tuple  # (name, arity) in declaration / first-use order
    formulas: tuple  # (weight, ast)
    constants: frozenset  # constants named inside formulas

    @property
    def predicate_arity(self) -> dict:
        return dict(self.predicates)


@dataclass(frozen=True)
class Evidence:
    hard: tuple  # ((atom, truth), ...)
    soft: tuple  # ((atom, weight), ...)


EMPTY_EVIDENCE = Evidence(hard=(), soft=())


# ---------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(r"(<=>|=>|!=|=|\(|\)|,|\^|!|[A-Za-z_][A-Za-z0-9_]*)")


def _tokenize(text, line_no):
    out = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise MLNFormatError(
                "line %d, col %d: unexpected character %r" % (line_no, pos + 1, text[pos])
            )
        out.append((m.group(0), pos + 1))
        pos = m.end()
    return out


def _is_name(tok):
    return bool(re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", tok))


def _term_of(tok, line_no, col):
    if not tok[0].isalpha():
        raise MLNFormatError("line %d, col %d: bad term %r" % (line_no, col, tok))
    return ("const", tok) if tok[0].isupper() else ("var", tok)


class _FormulaParser:
    """Recursive descent: <=> then => (right) then v then ^ then ! then atoms.

    The token `v` is the OR connective in operator position and an ordinary
    lowercase term elsewhere, which keeps formulas like `Loves(v, y)` or
    `v != y` unambiguous.
    """

    def __init__(self, tokens, line_no, arities):
        self.toks = tokens
        self.line = line_no
        self.pos = 0
        self.arities = arities  # shared registry: name -> arity
        self.constants = set()

    def peek(self):
        return self.toks[self.pos][0] if self.pos < len(self.toks) else None

    def next(self):
        if self.pos >= len(self.toks):
            raise MLNFormatError("line %d: unexpected end of formula" % self.line)
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def expect(self, want):
        tok, col = self.next()
        if tok != want:
            raise MLNFormatError(
                "line %d, col %d: expected %r, got %r" % (self.line, col, want, tok)
            )

    def parse(self):
        node = self.parse_iff()
        if self.pos != len(self.toks):
            tok, col = self.toks[self.pos]
            raise MLNFormatError(
                "line %d, col %d: unexpected token %r" % (self.line, col, tok)
            )
        return node

    def parse_iff(self):
        node = self.parse_implies()
        while self.peek() == "<=>":
            self.next()
            node = BinOp("<=>", node, self.parse_implies())
        return node

    def parse_implies(self):
        node = self.parse_or()
        if self.peek() == "=>":
            self.next()
            return BinOp("=>", node, self.parse_implies())
        return node

    def parse_or(self):
        node = self.parse_and()
        while self.peek() == "v":
            self.next()
            node = BinOp("v", node, self.parse_and())
        return node

    def parse_and(self):
        node = self.parse_unary()
        while self.peek() == "^":
            self.next()
            node = BinOp("^", node, self.parse_unary())
        return node

    def parse_unary(self):
        if self.peek() == "!":
            self.next()
            return Not(self.parse_unary())
        return self.parse_primary()

    def parse_primary(self):
        tok, col = self.next()
        if tok == "(":
            node = self.parse_iff()
            self.expect(")")
            return node
        if not _is_name(tok):
            raise MLNFormatError(
                "line %d, col %d: expected an atom, got %r" % (self.line, col, tok)
            )
        if self.peek() in ("=", "!="):
            op, _ = self.next()
            rhs, rcol = self.next()
            return Compare(op, _term_of(tok, self.line, col), _term_of(rhs, self.line, rcol))
        if tok[0].islower() or tok[0] == "_":
            raise MLNFormatError(
                "line %d, col %d: predicate names must be capitalized, got %r"
                % (self.line, col, tok)
            )
        self.expect("(")
        args = []
        while True:
            t, tcol = self.next()
            args.append(_term_of(t, self.line, tcol))
            nxt, _ = self.next()
            if nxt == ")":
                break
            if nxt != ",":
                raise MLNFormatError(
                    "line %d: expected ',' or ')' in argument list of %s" % (self.line, tok)
                )
        arity = len(args)
        if tok in self.arities and self.arities[tok] != arity:
            raise MLNFormatError(
                "line %d: arity mismatch for predicate %s: declared %d, used with %d"
                % (self.line, tok, self.arities[tok], arity)
            )
        self.arities.setdefault(tok, arity)
        for kind, name in args:
            if kind == "const":
                self.constants.add(name)
        return Atom(tok, tuple(args))


def parse_mln(text: str) -> MLN:
    """Parse MLN text; checks arities and capitalization conventions."""
    arities = {}
    order = []
    formulas = []
    constants = set()
    for line_no, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if body.split()[0] == "predicate":
            m = re.fullmatch(r"predicate\s+([A-Za-z_][A-Za-z0-9_]*)\s*/\s*(\d+)", body)
            if not m:
                raise MLNFormatError("line %d: expected 'predicate Name/arity'" % line_no)
            name, arity = m.group(1), int(m.group(2))
            if not name[0].isupper():
                raise MLNFormatError(
                    "line %d: predicate names must be capitalized, got %r" % (line_no, name)
                )
            if name in arities and arities[name] != arity:
                raise MLNFormatError(
                    "line %d: arity mismatch for predicate %s: declared %d, redeclared %d"
                    % (line_no, name, arities[name], arity)
                )
            if name not in arities:
                arities[name] = arity
                order.append(name)
            continue
        parts = body.split(None, 1)
        if len(parts) < 2:
            raise MLNFormatError("line %d: expected '<weight> <formula>'" % line_no)
        try:
            weight = float(parts[0])
        except ValueError:
            raise MLNFormatError(
                "line %d: weight must be a real, got %r" % (line_no, parts[0])
            ) from None
        before = set(arities)
        parser = _FormulaParser(_tokenize(parts[1], line_no), line_no, arities)
        ast = parser.parse()
        for name in arities:
            if name not in before and name not in order:
                order.append(name)
        constants |= parser.constants
        formulas.append((weight, ast))
    # keep first-use order even for predicates introduced mid-formula
    predicates = tuple((name, arities[name]) for name in order)
    return MLN(predicates=predicates, formulas=tuple(formulas), constants=frozenset(constants))


def _parse_ground_atom(text, line_no):
    m = re.fullmatch(r"([A-Za-z_][A-Za-z0-9_]*)\s*\(([^)]*)\)", text.strip())
    if not m:
        raise MLNFormatError("line %d: expected a ground atom, got %r" % (line_no, text.strip()))
    name = m.group(1)
    args = [a.strip() for a in m.group(2).split(",")]
    if not name[0].isupper():
        raise MLNFormatError("line %d: predicate names must be capitalized" % line_no)
    for a in args:
        if not a or not a[0].isupper():
            raise MLNFormatError(
                "line %d: evidence atoms must be ground (constant arguments), got %r"
                % (line_no, a)
            )
    return (name, tuple(args))


def parse_evidence(text: str) -> Evidence:
    """Parse evidence lines: `Atom`, `!Atom`, or `soft Atom <weight>`."""
    hard = {}
    soft = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if body.split()[0] == "soft":
            m = re.fullmatch(r"soft\s+(.*\))\s+(\S+)", body)
            if not m:
                raise MLNFormatError("line %d: expected 'soft Atom <weight>'" % line_no)
            atom = _parse_ground_atom(m.group(1), line_no)
            try:
                weight = float(m.group(2))
            except ValueError:
                raise MLNFormatError(
                    "line %d: weight must be a real, got %r" % (line_no, m.group(2))
                ) from None
            if atom in soft:
                raise MLNFormatError("line %d: duplicate soft evidence for %r" % (line_no, atom))
            soft[atom] = weight
            continue
        truth = True
        if body.startswith("!"):
            truth = False
            body = body[1:]
        atom = _parse_ground_atom(body, line_no)
        if atom in hard and hard[atom] != truth:
            raise MLNFormatError("line %d: contradictory evidence for %r" % (line_no, atom))
        hard[atom] = truth
    return Evidence(hard=tuple(sorted(hard.items())), soft=tuple(sorted(soft.items())))


# ---------------------------------------------------------------------------
# grounding


@dataclass(frozen=True)
class FeatureOrigin:
    """Where one ground feature came from.

    For formula groundings, template_atoms lists the formula's atom
    occurrences under the substitution (in syntax order, duplicates kept) and
    template_active marks the ones that survived into the feature's scope.
    """

    kind: str  # "formula" | "soft"
    formula: int = None
    subst: tuple = None
    template_atoms: tuple = ()
    template_active: tuple = ()
    atom: tuple = None
    weight: float = None


@dataclass(eq=False)
class GroundingMap:
    domain: tuple
    distinguished: frozenset
    atoms: tuple  # ground atom per variable index
    atom_index: dict
    observed: dict  # ground atom -> bool (hard evidence)
    soft: dict  # ground atom -> weight
    feature_of_grounding: dict  # (formula index, substitution) -> feature index
    origins: tuple  # FeatureOrigin per feature
    formula_tie: dict  # formula index -> tie class (surviving formulas only)


def _free_vars(node):
    if isinstance(node, Atom):
        return {n for (kind, n) in node.args if kind == "var"}
    if isinstance(node, Not):
        return _free_vars(node.sub)
    if isinstance(node, BinOp):
        return _free_vars(node.left) | _free_vars(node.right)
    if isinstance(node, Compare):
        return {n for (kind, n) in (node.left, node.right) if kind == "var"}
    return set()


def _term_value(term, subst):
    kind, name = term
    return subst[name] if kind == "var" else name


def _compares_hold(node, subst):
    if isinstance(node, Compare):
        a = _term_value(node.left, subst)
        b = _term_value(node.right, subst)
        return (a == b) if node.op == "=" else (a != b)
    if isinstance(node, Not):
        return _compares_hold(node.sub, subst)
    if isinstance(node, BinOp):
        return _compares_hold(node.left, subst) and _compares_hold(node.right, subst)
    return True


def _template_atoms(node, subst, out):
    if isinstance(node, Atom):
        out.append((node.pred, tuple(_term_value(t, subst) for t in node.args)))
    elif isinstance(node, Not):
        _template_atoms(node.sub, subst, out)
    elif isinstance(node, BinOp):
        _template_atoms(node.left, subst, out)
        _template_atoms(node.right, subst, out)


def _eval(node, subst, valuation):
    if isinstance(node, Atom):
        return valuation[(node.pred, tuple(_term_value(t, subst) for t in node.args))]
    if isinstance(node, Not):
        return not _eval(node.sub, subst, valuation)
    if isinstance(node, Compare):
        return True  # violated compares were skipped at grounding
    a = _eval(node.left, subst, valuation)
    b = _eval(node.right, subst, valuation)
    if node.op == "^":
        return a and b
    if node.op == "v":
        return a or b
    if node.op == "=>":
        return (not a) or b
    return a == b


def _depended_positions(table, k):
    keep = []
    for pos in range(k):
        bit = 1 << (k - 1 - pos)
        if any(table[i] != table[i ^ bit] for i in range(2 ** k) if not i & bit):
            keep.append(pos)
    return keep


def build_domain(mln: MLN, evidence: Evidence, domain_size: int):
    """Named constants (sorted) plus generated fillers up to domain_size total."""
    named = set(mln.constants)
    for atom, _ in list(evidence.hard) + list(evidence.soft):
        named |= set(atom[1])
    if domain_size < len(named):
        raise MLNError(
            "domain too small: %d named constants but domain_size %d"
            % (len(named), domain_size)
        )
    domain = sorted(named)
    i = 1
    while len(domain) < domain_size:
        filler = "C%d" % i
        if filler not in named:
            domain.append(filler)
        i += 1
    return tuple(domain), frozenset(named)


def ground_mln(mln: MLN, domain_size: int, evidence: Evidence = None):
    """Ground the MLN into a Model plus the book-keeping GroundingMap.

    One variable per non-hard-evidence ground atom; one feature per formula
    grounding that is not made constant by evidence or degenerate
    substitution; all groundings of a formula share a tie class. Soft
    evidence adds a unary feature per atom, tied by weight value.
    """
    evidence = EMPTY_EVIDENCE if evidence is None else evidence
    arity_of = mln.predicate_arity
    for atom, _ in list(evidence.hard) + list(evidence.soft):
        if atom[0] not in arity_of:
            raise MLNError("evidence atom with unknown predicate %r" % (atom[0],))
        if len(atom[1]) != arity_of[atom[0]]:
            raise MLNError(
                "arity mismatch for predicate %s in evidence: declared %d, used with %d"
                % (atom[0], arity_of[atom[0]], len(atom[1]))
            )
    domain, named = build_domain(mln, evidence, domain_size)
    observed = dict(evidence.hard)
    soft = dict(evidence.soft)
    for atom in soft:
        if atom in observed:
            raise MLNError("soft evidence on an observed atom %r" % (atom,))

    atoms = []
    for pname, arity in mln.predicates:
        for args in itertools.product(domain, repeat=arity):
            atom = (pname, args)
            if atom not in observed:
                atoms.append(atom)
    atom_index = {a: i for i, a in enumerate(atoms)}

    features = []
    tie_of = []
    origins = []
    feature_of_grounding = {}
    formula_tie = {}

    for fi, (weight, ast) in enumerate(mln.formulas):
        fvars = sorted(_free_vars(ast))
        for subst_tuple in itertools.product(domain, repeat=len(fvars)):
            subst = dict(zip(fvars, subst_tuple))
            if not _compares_hold(ast, subst):
                continue
            templates = []
            _template_atoms(ast, subst, templates)
            distinct = []
            for a in templates:
                if a not in observed and a not in distinct:
                    distinct.append(a)
            if not distinct:
                continue  # fully determined by evidence
            scope = sorted(atom_index[a] for a in distinct)
            scope_atoms = [atoms[v] for v in scope]
            k = len(scope)
            table = []
            for assign in itertools.product((0, 1), repeat=k):
                valuation = dict(observed)
                for a, b in zip(scope_atoms, assign):
                    valuation[a] = bool(b)
                table.append(1.0 if _eval(ast, subst, valuation) else 0.0)
            keep = _depended_positions(table, k)
            if not keep:
                continue  # constant indicator
            if len(keep) < k:
                reduced = []
                for assign in itertools.product((0, 1), repeat=len(keep)):
                    full = [0] * k
                    for p, b in zip(keep, assign):
                        full[p] = b
                    reduced.append(table[table_index(full)])
                scope = [scope[p] for p in keep]
                table = reduced
            in_scope = {atoms[v] for v in scope}
            if fi not in formula_tie:
                formula_tie[fi] = len(formula_tie)
            feature_of_grounding[(fi, subst_tuple)] = len(features)
            features.append(Feature(scope=tuple(scope), table=tuple(table)))
            tie_of.append(formula_tie[fi])
            origins.append(
                FeatureOrigin(
                    kind="formula",
                    formula=fi,
                    subst=subst_tuple,
                    template_atoms=tuple(templates),
                    template_active=tuple(a in in_scope for a in templates),
                )
            )

    weight_tie = {
        w: len(formula_tie) + i for i, w in enumerate(sorted(set(soft.values())))
    }
    for atom in atoms:
        if atom in soft:
            features.append(Feature(scope=(atom_index[atom],), table=(0.0, 1.0)))
            tie_of.append(weight_tie[soft[atom]])
            origins.append(FeatureOrigin(kind="soft", atom=atom, weight=soft[atom]))

    theta = [0.0] * (len(formula_tie) + len(weight_tie))
    for fi, t in formula_tie.items():
        theta[t] = mln.formulas[fi][0]
    for w, t in weight_tie.items():
        theta[t] = w

    if not features:
        raise MLNError(
            "no ground features survive: every formula grounding is constant"
        )
    model = Model(
        num_vars=len(atoms),
        features=tuple(features),
        tie_class_of=tuple(tie_of),
        theta=tuple(theta),
    )
    gmap = GroundingMap(
        domain=domain,
        distinguished=named,
        atoms=tuple(atoms),
        atom_index=atom_index,
        observed=observed,
        soft=soft,
        feature_of_grounding=feature_of_grounding,
        origins=tuple(origins),
        formula_tie=formula_tie,
    )
    return model, gmap


# ---------------------------------------------------------------------------
# renaming orbits


@dataclass(frozen=True)
class AtomSignature:
    """What a ground atom looks like up to renaming of interchangeable constants."""

    pred: str
    tags: tuple  # ("const", name) for distinguished constants, else ("anon", class id)


def _tags_of(args, distinguished, anon):
    tags = []
    for c in args:
        if c in distinguished:
            tags.append(("const", c))
        else:
            if c not in anon:
                anon[c] = len(anon)
            tags.append(("anon", anon[c]))
    return tuple(tags)


def atom_signature(atom, distinguished) -> AtomSignature:
    pred, args = atom
    return AtomSignature(pred=pred, tags=_tags_of(args, distinguished, {}))


def orbit_sizes_analytic(signature, domain_size: int, num_distinguished: int) -> int:
    """Count groundings matching a signature: a falling factorial per anon class."""
    tags = signature.tags if isinstance(signature, AtomSignature) else tuple(signature)
    classes = {t[1] for t in tags if t[0] == "anon"}
    size = 1
    for i in range(len(classes)):
        size *= max(0, domain_size - num_distinguished - i)
    return size


def _joint_signature(atom_a, atom_b, distinguished):
    # shared anon numbering across the two atoms, order-sensitive
    anon = {}
    return (
        (atom_a[0], _tags_of(atom_a[1], distinguished, anon)),
        (atom_b[0], _tags_of(atom_b[1], distinguished, anon)),
    )


def _signature_partition(domain_tag, elements, key_fn) -> OrbitPartition:
    elements = sorted(elements)
    groups = {}
    for e in elements:
        groups.setdefault(key_fn(e), []).append(e)
    cells = tuple(tuple(g) for g in sorted(groups.values(), key=lambda g: g[0]))
    cell_of = {}
    for ci, members in enumerate(cells):
        for e in members:
            cell_of[e] = ci
    return OrbitPartition(
        domain=domain_tag,
        elements=tuple(elements),
        cells=cells,
        cell_of=cell_of,
        reps=tuple(members[0] for members in cells),
    )


def _feature_key(origin: FeatureOrigin, distinguished):
    if origin.kind == "soft":
        return ("soft", origin.weight, atom_signature(origin.atom, distinguished))
    return ("formula", origin.formula, _tags_of(origin.subst, distinguished, {}))


def renaming_orbits(mln: MLN, domain_size: int, evidence: Evidence, gmap: GroundingMap):
    """Variable and feature orbits under constant renaming, by signature only."""
    model_vars = range(len(gmap.atoms))
    dist = gmap.distinguished
    vars_p = _signature_partition(
        "vars", model_vars, lambda v: atom_signature(gmap.atoms[v], dist)
    )
    feats_p = _signature_partition(
        "features",
        range(len(gmap.origins)),
        lambda j: _feature_key(gmap.origins[j], dist),
    )
    return vars_p, feats_p


def _renaming_bundle(model: Model, gmap: GroundingMap, distinguished) -> OrbitBundle:
    atoms = gmap.atoms
    dist = distinguished

    def edge_key(e):
        u, v = e
        a = _joint_signature(atoms[u], atoms[v], dist)
        b = _joint_signature(atoms[v], atoms[u], dist)
        return min(a, b)

    def arc_key(arc):
        u, v = arc
        return _joint_signature(atoms[u], atoms[v], dist)

    def fa_key(element):
        j, assign = element
        origin = gmap.origins[j]
        base = _feature_key(origin, dist)
        pos_of = {v: i for i, v in enumerate(model.features[j].scope)}
        values = []
        for t, atom in enumerate(origin.template_atoms):
            if origin.template_active[t]:
                values.append(assign[pos_of[gmap.atom_index[atom]]])
        return (base, tuple(values))

    sk = skeleton(model)
    fa_elements = []
    for j, f in enumerate(model.features):
        if f.arity >= 3:
            fa_elements.extend((j, a) for a in itertools.product((0, 1), repeat=f.arity))

    return OrbitBundle(
        vars=_signature_partition(
            "vars", range(model.num_vars), lambda v: atom_signature(atoms[v], dist)
        ),
        features=_signature_partition(
            "features",
            range(model.num_features),
            lambda j: _feature_key(gmap.origins[j], dist),
        ),
        edges=_signature_partition("edges", sk.edges, edge_key),
        arcs=_signature_partition(
            "arcs", [a for (u, v) in sk.edges for a in ((u, v), (v, u))], arc_key
        ),
        factor_assignments=_signature_partition("factor-assignments", fa_elements, fa_key),
    )


class RenamingSymmetries:
    """Renaming-group orbits for a grounded MLN, computed from signatures."""

    def __init__(self, model: Model, gmap: GroundingMap):
        self.model = model
        self.gmap = gmap
        self.distinguished = gmap.distinguished

    def bundle(self) -> OrbitBundle:
        return _renaming_bundle(self.model, self.gmap, self.distinguished)

    def stabilized_light(self, fixed_var: int):
        """Variable/edge orbits once the fixed atom's constants are pinned."""
        dist = frozenset(self.distinguished | set(self.gmap.atoms[fixed_var][1]))
        atoms = self.gmap.atoms
        vars_p = _signature_partition(
            "vars", range(self.model.num_vars), lambda v: atom_signature(atoms[v], dist)
        )

        def edge_key(e):
            u, v = e
            a = _joint_signature(atoms[u], atoms[v], dist)
            b = _joint_signature(atoms[v], atoms[u], dist)
            return min(a, b)

        edges_p = _signature_partition("edges", skeleton(self.model).edges, edge_key)
        return vars_p, edges_p
