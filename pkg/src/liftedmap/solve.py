"""MAP inference by LP relaxation, for ground and lifted models.

The local polytope LP has one variable per overcomplete coordinate (ground)
or per orbit cell (lifted): node normalization rows, four marginalization
rows per edge, and normalization plus node/edge consistency rows per
arity >= 3 factor. The lifted system is the ground system written once per
orbit representative with coordinates substituted by their cells, then
deduplicated.

Cycle tightening adds odd-crossing inequalities: around any closed walk, a
configuration flips value an even number of times, so for an odd edge subset
F the agreement mass on F plus the disagreement mass off F is at least 1.
Violated inequalities are found by shortest paths in a two-copy mirror
graph: staying in a copy costs the disagreement (cut) weight, switching
copies costs the agreement (nocut) weight, and any walk from a node to its
mirror image switches an odd number of times. Lifted separation runs the
same search per node orbit on a stabilized lifted graph whose source cell
pins the orbit's representative.

The cutting-plane driver uses an in-out step: separation happens at
sigma = alpha * tau_out + (1 - alpha) * tau_in, where tau_in is a point
known to satisfy all cycle inequalities (initially the uniform
pseudomarginal) and tau_out is the current LP optimum. If sigma admits no
cut it becomes the new tau_in and separation retries at tau_out; if that
also finds nothing the loop has converged.

The LP solver is a self-contained dense two-phase primal simplex on the
bounded-variable standard form; no external solver is involved.
"""

from __future__ import annotations

import heapq
import itertools
import time
from dataclasses import dataclass

import numpy as np

from .lift import LiftedModel, lift_vector
from .model import Model, OvercompleteLayout, assignments, score


class SolveError(Exception):
    """LP construction or solve failed."""


class NumericalInstabilityError(SolveError):
    """The simplex result failed its final feasibility residual check."""


# ---------------------------------------------------------------------------
# linear programs


@dataclass(eq=False)
class LinearProgram:
    """Sparse maximization LP: rows are (coeffs, sense, rhs) with coeffs a
    list of (variable, coefficient); senses are "<=", "==", ">="."""

    num_vars: int
    objective: np.ndarray
    rows: list
    bounds: list  # (lo, hi) per variable; hi may be None for unbounded

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        if self.objective.shape != (self.num_vars,):
            raise SolveError("objective length does not match num_vars")
        if not np.isfinite(self.objective).all():
            raise SolveError("objective has non-finite coefficients")
        if len(self.bounds) != self.num_vars:
            raise SolveError("bounds length does not match num_vars")
        for coeffs, sense, rhs in self.rows:
            if sense not in ("<=", "==", ">="):
                raise SolveError("unknown row sense %r" % sense)
            if not np.isfinite(rhs):
                raise SolveError("row rhs is not finite")
            for j, c in coeffs:
                if not 0 <= j < self.num_vars:
                    raise SolveError("row references unknown variable %d" % j)
                if not np.isfinite(c):
                    raise SolveError("row coefficient is not finite")


@dataclass(eq=False)
class SolveOutcome:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray
    value: float


_PIV_TOL = 1e-9
_FEAS_TOL = 1e-7
_RESIDUAL_TOL = 1e-6
_BLAND_AFTER = 1000


def simplex_solve(lp: LinearProgram) -> SolveOutcome:
    """Two-phase primal simplex with bounded variables, dense tableau.

    Deterministic: Dantzig entering rule (largest reduced cost, ties to the
    smallest index) switching to Bland's rule after 1000 degenerate pivots;
    leaving ties go to the smallest basis index. Raises
    NumericalInstabilityError if the claimed optimum violates the original
    rows or bounds by more than 1e-6.
    """
    m = len(lp.rows)
    n = lp.num_vars
    senses = [r[1] for r in lp.rows]
    slack_rows = [i for i, s in enumerate(senses) if s in ("<=", ">=")]
    n_slack = len(slack_rows)
    art0 = n + n_slack
    ncols = art0 + m

    A = np.zeros((m, ncols))
    b = np.zeros(m)
    for i, (coeffs, sense, rhs) in enumerate(lp.rows):
        for j, c in coeffs:
            A[i, j] += c
        b[i] = rhs
    for si, i in enumerate(slack_rows):
        A[i, n + si] = 1.0 if senses[i] == "<=" else -1.0

    lo = np.zeros(ncols)
    hi = np.full(ncols, np.inf)
    for j in range(n):
        l, u = lp.bounds[j]
        lo[j] = l
        hi[j] = np.inf if u is None else u

    # nonbasics start at their lower bound; artificials absorb the residual
    at_upper = np.zeros(ncols, dtype=bool)
    x_nb = lo[:art0].copy()
    resid = b - A[:, :art0] @ x_nb
    sign = np.where(resid >= 0.0, 1.0, -1.0)
    for i in range(m):
        A[i, art0 + i] = sign[i]
    basis = np.array([art0 + i for i in range(m)], dtype=np.int64)
    T = A * sign[:, None]  # inverse of the +-1 diagonal basis
    xB = np.abs(resid)

    def run_phase(cvec, forbid_from):
        # forbid_from: first column index barred from entering (pinned artificials)
        nonlocal T, xB, basis, at_upper
        in_basis = np.zeros(ncols, dtype=bool)
        in_basis[basis] = True
        d = cvec - cvec[basis] @ T
        degenerate = 0
        resync = 0
        for _ in range(200000):
            movable = ~in_basis
            if forbid_from < ncols:
                movable[forbid_from:] = False
            fixed = lo >= hi  # zero-range variables can never move
            improving = movable & ~fixed & (
                (~at_upper & (d > _FEAS_TOL)) | (at_upper & (d < -_FEAS_TOL))
            )
            cand = np.flatnonzero(improving)
            if cand.size == 0:
                return "optimal", d
            if degenerate > _BLAND_AFTER:
                j = int(cand[0])
            else:
                j = int(cand[np.argmax(np.abs(d[cand]))])
            from_lower = not at_upper[j]
            col = T[:, j] if from_lower else -T[:, j]
            # ratio test: basics move by -t*col, entering moves t off its bound
            if m:
                with np.errstate(divide="ignore", invalid="ignore"):
                    t_dec = np.where(col > _PIV_TOL, (xB - lo[basis]) / col, np.inf)
                    t_inc = np.where(col < -_PIV_TOL, (hi[basis] - xB) / (-col), np.inf)
                t_all = np.minimum(t_dec, t_inc)
                t_rows = float(t_all.min())
            else:
                t_rows = np.inf
            if np.isfinite(t_rows):
                ties = np.flatnonzero(t_all <= t_rows + 1e-12)
                leave = int(ties[np.argmin(basis[ties])])
            else:
                leave = -1
            t_own = hi[j] - lo[j]
            if leave < 0 and not np.isfinite(t_own):
                return "unbounded", d
            if t_own < t_rows - 1e-12:
                t = max(t_own, 0.0)
                xB -= t * col
                at_upper[j] = not at_upper[j]
                if t < 1e-12:
                    degenerate += 1
                continue
            t = max(t_rows, 0.0)
            if t < 1e-12:
                degenerate += 1
            xB -= t * col
            out = basis[leave]
            at_upper[out] = col[leave] < 0  # hit upper bound iff it was rising
            enter_val = (lo[j] + t) if from_lower else (hi[j] - t)
            piv = T[leave, j]
            if abs(piv) <= _PIV_TOL:
                raise NumericalInstabilityError("pivot element below tolerance")
            T[leave] /= piv
            colv = T[:, j].copy()
            colv[leave] = 0.0
            T -= np.outer(colv, T[leave])
            d = d - d[j] * T[leave]
            basis[leave] = j
            xB[leave] = enter_val
            in_basis[out] = False
            in_basis[j] = True
            resync += 1
            if resync >= 500:
                d = cvec - cvec[basis] @ T
                resync = 0
        raise NumericalInstabilityError("simplex did not converge within the pivot cap")

    # phase 1: drive the artificials to zero
    c1 = np.zeros(ncols)
    c1[art0:] = -1.0
    status, _ = run_phase(c1, forbid_from=ncols)
    if status == "unbounded":
        raise NumericalInstabilityError("phase 1 claimed an unbounded direction")
    art_mass = float(sum(xB[i] for i in range(m) if basis[i] >= art0))
    if art_mass > _FEAS_TOL:
        return SolveOutcome(status="infeasible", x=None, value=None)

    # phase 2: original objective, artificials pinned at zero
    hi[art0:] = 0.0
    c2 = np.zeros(ncols)
    c2[:n] = lp.objective
    status, _ = run_phase(c2, forbid_from=art0)
    if status == "unbounded":
        return SolveOutcome(status="unbounded", x=None, value=None)

    hi_val = np.where(np.isfinite(hi), hi, 0.0)
    x = np.where(at_upper, hi_val, lo)
    x[basis] = xB
    x_struct = x[:n].copy()

    for coeffs, sense, rhs in lp.rows:
        val = sum(c * x_struct[j] for j, c in coeffs)
        bad = (
            (sense == "==" and abs(val - rhs) > _RESIDUAL_TOL)
            or (sense == "<=" and val > rhs + _RESIDUAL_TOL)
            or (sense == ">=" and val < rhs - _RESIDUAL_TOL)
        )
        if bad:
            raise NumericalInstabilityError(
                "solution violates a row by %r" % (abs(val - rhs),)
            )
    for j in range(n):
        l, u = lp.bounds[j]
        if x_struct[j] < l - _RESIDUAL_TOL or (u is not None and x_struct[j] > u + _RESIDUAL_TOL):
            raise NumericalInstabilityError("solution violates a variable bound")

    value = float(lp.objective @ x_struct)
    return SolveOutcome(status="optimal", x=x_struct, value=value)


# ---------------------------------------------------------------------------
# local polytope rows


def _ground_row_blocks(model, layout, var_list, edge_list, factor_list):
    rows = []
    for v in var_list:
        rows.append(
            ([(layout.node_index(v, 0), 1.0), (layout.node_index(v, 1), 1.0)], "==", 1.0)
        )
    for (u, v) in edge_list:
        e = layout.edge_index
        rows.append(
            ([(e(u, v, 0, 0), 1.0), (e(u, v, 0, 1), 1.0), (layout.node_index(u, 0), -1.0)], "==", 0.0)
        )
        rows.append(
            ([(e(u, v, 0, 0), 1.0), (e(u, v, 1, 0), 1.0), (layout.node_index(v, 0), -1.0)], "==", 0.0)
        )
        rows.append(
            ([(e(u, v, 1, 1), 1.0), (e(u, v, 0, 1), 1.0), (layout.node_index(v, 1), -1.0)], "==", 0.0)
        )
        rows.append(
            ([(e(u, v, 1, 1), 1.0), (e(u, v, 1, 0), 1.0), (layout.node_index(u, 1), -1.0)], "==", 0.0)
        )
    for j in factor_list:
        f = model.features[j]
        rows.append(
            ([(layout.factor_index(j, a), 1.0) for a in assignments(f.arity)], "==", 1.0)
        )
        for k, v in enumerate(f.scope):
            coeffs = [
                (layout.factor_index(j, a), 1.0)
                for a in assignments(f.arity)
                if a[k] == 1
            ]
            coeffs.append((layout.node_index(v, 1), -1.0))
            rows.append((coeffs, "==", 0.0))
        for k, l in itertools.combinations(range(f.arity), 2):
            u2, v2 = f.scope[k], f.scope[l]
            for s, t in assignments(2):
                coeffs = [
                    (layout.factor_index(j, a), 1.0)
                    for a in assignments(f.arity)
                    if a[k] == s and a[l] == t
                ]
                coeffs.append((layout.edge_index(u2, v2, s, t), -1.0))
                rows.append((coeffs, "==", 0.0))
    return rows


def _substitute_rows(rows, rho):
    out = []
    seen = set()
    for coeffs, sense, rhs in rows:
        acc = {}
        for j, c in coeffs:
            cell = int(rho[j])
            acc[cell] = acc.get(cell, 0.0) + c
        items = tuple(sorted((k, v) for k, v in acc.items() if v != 0.0))
        key = (items, sense, float(rhs))
        if key in seen:
            continue
        seen.add(key)
        out.append(([(k, v) for k, v in items], sense, rhs))
    return out


def build_local_lp(target, space: str = None) -> LinearProgram:
    """Local consistency LP for a Model (ground) or a LiftedModel (lifted)."""
    if isinstance(target, LiftedModel):
        if space not in (None, "lifted"):
            raise SolveError("a LiftedModel builds the lifted LP, not %r" % space)
        lm = target
        model = lm.model
        layout = lm.index.layout
        var_list = lm.bundle.vars.reps
        edge_list = [info.rep for info in lm.edge_info]
        factor_list = [
            rep for rep in lm.bundle.features.reps if model.features[rep].arity >= 3
        ]
        rows = _ground_row_blocks(model, layout, var_list, edge_list, factor_list)
        rows = _substitute_rows(rows, lm.index.rho)
        return LinearProgram(
            num_vars=lm.num_cells,
            objective=lm.theta_bar.copy(),
            rows=rows,
            bounds=[(0.0, 1.0)] * lm.num_cells,
        )
    if not isinstance(target, Model):
        raise SolveError("expected a Model or a LiftedModel")
    if space not in (None, "ground"):
        raise SolveError("a Model builds the ground LP, not %r" % space)
    model = target
    layout = OvercompleteLayout(model)
    factor_list = [j for j, f in enumerate(model.features) if f.arity >= 3]
    rows = _ground_row_blocks(
        model, layout, range(model.num_vars), layout.edges, factor_list
    )
    return LinearProgram(
        num_vars=layout.size,
        objective=layout.theta_vector(),
        rows=rows,
        bounds=[(0.0, 1.0)] * layout.size,
    )


def uniform_interior(target):
    """The uniform pseudomarginal: nodes .5, edge cells .25, factor cells 2^-K."""
    if isinstance(target, LiftedModel):
        return lift_vector(uniform_interior(target.model), target.index)
    layout = OvercompleteLayout(target)
    out = np.zeros(layout.size)
    for i, key in enumerate(layout.keys):
        if key[0] == "node":
            out[i] = 0.5
        elif key[0] == "edge":
            out[i] = 0.25
        else:
            out[i] = 2.0 ** (-len(key[2]))
    return out


# ---------------------------------------------------------------------------
# cycle separation via mirror shortest paths


@dataclass(frozen=True)
class CycleConstraint:
    """One odd-crossing closed-walk inequality.

    steps hold (edge key, in_F) pairs; keys are ground edges (u, v) in ground
    space and edge-orbit indices in lifted space. lhs caches the value at the
    separating point.
    """

    space: str
    steps: tuple
    lhs: float
    source: object

    def canonical(self):
        # the row only depends on the multiset of steps
        return tuple(sorted(self.steps))


def mirror_shortest_path(edges, source):
    """Shortest walk from a node to its mirror image in the two-copy graph.

    edges: iterable of (key, a, b, cut_w, nocut_w); within-copy images carry
    cut_w, copy-switching images carry nocut_w (self-loops only switch).
    Returns (steps, total) with steps a tuple of (key, crossed); (None, inf)
    when the mirror image is unreachable. Weights are clamped at zero.
    """
    adj = {}

    def add(na, nb, w, key, crossed):
        adj.setdefault(na, []).append((nb, w, key, crossed))
        adj.setdefault(nb, []).append((na, w, key, crossed))

    for key, a, b, cut_w, nocut_w in edges:
        cut_w = max(0.0, float(cut_w))
        nocut_w = max(0.0, float(nocut_w))
        if a == b:
            add((a, 0), (a, 1), nocut_w, key, True)
            continue
        add((a, 0), (b, 0), cut_w, key, False)
        add((a, 1), (b, 1), cut_w, key, False)
        add((a, 0), (b, 1), nocut_w, key, True)
        add((a, 1), (b, 0), nocut_w, key, True)

    start, goal = (source, 0), (source, 1)
    dist = {start: 0.0}
    prev = {}
    heap = [(0.0, start)]
    while heap:
        d, node = heapq.heappop(heap)
        if d > dist.get(node, np.inf):
            continue
        if node == goal:
            break
        for nbr, w, key, crossed in adj.get(node, ()):
            nd = d + w
            if nd < dist.get(nbr, np.inf):
                dist[nbr] = nd
                prev[nbr] = (node, key, crossed)
                heapq.heappush(heap, (nd, nbr))
    if goal not in dist:
        return None, np.inf
    steps = []
    node = goal
    while node != start:
        node, key, crossed = prev[node]
        steps.append((key, crossed))
    steps.reverse()
    return tuple(steps), float(dist[goal])


def separate_cycles_ground(model: Model, tau, tol: float = 1e-6):
    """Most violated cycle inequality on the skeleton, or None."""
    layout = OvercompleteLayout(model)
    tau = np.asarray(tau, dtype=float)
    edges = []
    nodes = set()
    for (u, v) in layout.edges:
        cut_w = tau[layout.edge_index(u, v, 0, 1)] + tau[layout.edge_index(u, v, 1, 0)]
        nocut_w = tau[layout.edge_index(u, v, 0, 0)] + tau[layout.edge_index(u, v, 1, 1)]
        edges.append(((u, v), u, v, cut_w, nocut_w))
        nodes.add(u)
        nodes.add(v)
    best = None
    for i in sorted(nodes):
        steps, total = mirror_shortest_path(edges, i)
        if steps is None:
            continue
        if best is None or total < best[1]:
            best = (steps, total, i)
    if best is None or best[1] >= 1.0 - tol:
        return None
    steps, total, src = best
    return CycleConstraint(space="ground", steps=steps, lhs=total, source=src)


@dataclass(frozen=True)
class StabilizedGraph:
    """Mirror-search graph for one node orbit: stabilized variable cells as
    nodes, one edge per stabilized edge orbit, keyed by the FULL edge orbit
    that carries its weights."""

    orbit: int
    source: object
    edges: tuple  # (full edge orbit id, cell a, cell b)


def build_stabilized_graphs(lifted: LiftedModel):
    """One stabilized lifted graph per node orbit, built once per model."""
    if lifted.symmetries is None:
        raise SolveError(
            "lifted cycle separation needs the lifted model to carry its symmetry source"
        )
    full_edge_cell = lifted.bundle.edges.cell_of
    graphs = []
    for k, info in enumerate(lifted.node_info):
        rep = info.rep
        vars_p, edges_p = lifted.symmetries.stabilized_light(rep)
        dedup = {}
        for members in edges_p.cells:
            u, v = members[0]
            a, b = vars_p.cell_of[u], vars_p.cell_of[v]
            key = (tuple(sorted((a, b))), full_edge_cell[(u, v)])
            if key not in dedup:
                dedup[key] = (full_edge_cell[(u, v)], a, b)
        graphs.append(
            StabilizedGraph(orbit=k, source=vars_p.cell_of[rep], edges=tuple(dedup.values()))
        )
    return tuple(graphs)


def separate_cycles_lifted(lifted: LiftedModel, stabilized, tau_bar, tol: float = 1e-6):
    """Most violated lifted cycle inequality across node orbits, or None."""
    tau_bar = np.asarray(tau_bar, dtype=float)
    weights = {}
    for k, info in enumerate(lifted.edge_info):
        cut_w = tau_bar[info.cell_uv] + tau_bar[info.cell_vu]
        nocut_w = tau_bar[info.cell00] + tau_bar[info.cell11]
        weights[k] = (cut_w, nocut_w)
    best = None
    for g in stabilized:
        edges = [
            (ek, a, b, weights[ek][0], weights[ek][1]) for (ek, a, b) in g.edges
        ]
        steps, total = mirror_shortest_path(edges, g.source)
        if steps is None:
            continue
        if best is None or total < best[1]:
            best = (steps, total, g.orbit)
    if best is None or best[1] >= 1.0 - tol:
        return None
    steps, total, orbit = best
    return CycleConstraint(space="lifted", steps=steps, lhs=total, source=orbit)


def constraint_row(constraint: CycleConstraint, target):
    """LP row (coeffs, ">=", 1.0) for a cycle constraint."""
    acc = {}
    if constraint.space == "ground":
        layout = target if isinstance(target, OvercompleteLayout) else OvercompleteLayout(target)
        for (u, v), in_f in constraint.steps:
            if in_f:
                idxs = (layout.edge_index(u, v, 0, 0), layout.edge_index(u, v, 1, 1))
            else:
                idxs = (layout.edge_index(u, v, 0, 1), layout.edge_index(u, v, 1, 0))
            for i in idxs:
                acc[i] = acc.get(i, 0.0) + 1.0
    else:
        lm = target
        for k, in_f in constraint.steps:
            info = lm.edge_info[k]
            cells = (info.cell00, info.cell11) if in_f else (info.cell_uv, info.cell_vu)
            for c in cells:
                acc[c] = acc.get(c, 0.0) + 1.0
    return (sorted(acc.items()), ">=", 1.0)


# ---------------------------------------------------------------------------
# decoding and the cutting-plane driver


def decode(tau, target):
    """Round node coordinates at 1/2 (ties to 0) and report fractionality."""
    tau = np.asarray(tau, dtype=float)
    if isinstance(target, LiftedModel):
        lm = target
        values = []
        marginals = []
        fractional = False
        for info in lm.node_info:
            p1 = float(tau[info.cell1])
            marginals.append(p1)
            values.append(1 if p1 > 0.5 else 0)
            if 1e-6 < p1 < 1.0 - 1e-6:
                fractional = True
        config = [0] * lm.model.num_vars
        for k, members in enumerate(lm.bundle.vars.cells):
            for v in members:
                config[v] = values[k]
        return {
            "space": "lifted",
            "orbit_reps": [info.rep for info in lm.node_info],
            "orbit_values": values,
            "orbit_marginals": marginals,
            "fractional": fractional,
            "configuration": config,
            "score": score(lm.model, config),
        }
    model = target
    layout = OvercompleteLayout(model)
    config = []
    fractional = False
    for v in range(model.num_vars):
        p1 = float(tau[layout.node_index(v, 1)])
        config.append(1 if p1 > 0.5 else 0)
        if 1e-6 < p1 < 1.0 - 1e-6:
            fractional = True
    return {
        "space": "ground",
        "configuration": config,
        "fractional": fractional,
        "score": score(model, config),
    }


@dataclass
class MapOptions:
    polytope: str = "local"  # "local" | "cycle"
    alpha: float = 0.99
    tol: float = 1e-6
    max_cuts: int = 200
    max_rounds: int = 500


@dataclass(eq=False)
class MapResult:
    status: str  # "optimal" | "cap"
    space: str
    objective: float
    tau: np.ndarray
    bounds: tuple
    cuts_added: tuple
    cut_iterations: int
    decode: dict
    num_lp_vars: int
    num_lp_rows: int
    timings_ms: dict

    def as_dict(self) -> dict:
        return {
            "status": self.status,
            "space": self.space,
            "objective": self.objective,
            "bounds": [float(v) for v in self.bounds],
            "cuts": len(self.cuts_added),
            "iterations": self.cut_iterations,
            "lp": {"variables": self.num_lp_vars, "rows": self.num_lp_rows},
            "decode": self.decode,
            "timings_ms": self.timings_ms,
        }


def cutting_plane_map(target, opts: MapOptions = None) -> MapResult:
    """MAP LP on the local polytope, optionally tightened by cycle cuts.

    target is a Model (ground inference) or a LiftedModel (lifted). With
    polytope="cycle" the in-out loop separates at a point pulled toward a
    certified-feasible interior point, falling back to the LP optimum.
    """
    opts = MapOptions() if opts is None else opts
    if opts.polytope not in ("local", "cycle"):
        raise SolveError("unknown polytope %r" % opts.polytope)
    t_start = time.perf_counter()
    timings = {"build_ms": 0.0, "solve_ms": 0.0, "separate_ms": 0.0}
    space = "lifted" if isinstance(target, LiftedModel) else "ground"

    t0 = time.perf_counter()
    lp = build_local_lp(target)
    base_rows = list(lp.rows)
    timings["build_ms"] += (time.perf_counter() - t0) * 1000

    def solve_now(rows):
        t1 = time.perf_counter()
        prog = LinearProgram(
            num_vars=lp.num_vars,
            objective=lp.objective,
            rows=rows,
            bounds=lp.bounds,
        )
        out = simplex_solve(prog)
        timings["solve_ms"] += (time.perf_counter() - t1) * 1000
        if out.status != "optimal":
            raise SolveError("local polytope LP reported %s" % out.status)
        return out

    out = solve_now(base_rows)
    bounds = [out.value]
    tau_out = out.x
    cuts = []
    seen = set()
    status = "optimal"

    if opts.polytope == "cycle":
        if space == "lifted":
            t0 = time.perf_counter()
            stabilized = build_stabilized_graphs(target)
            timings["build_ms"] += (time.perf_counter() - t0) * 1000

            def separate(point):
                return separate_cycles_lifted(target, stabilized, point, tol=opts.tol)

        else:

            def separate(point):
                return separate_cycles_ground(target, point, tol=opts.tol)

        tau_in = uniform_interior(target)
        rows = list(base_rows)
        rounds = 0
        while True:
            if rounds >= opts.max_rounds or len(cuts) >= opts.max_cuts:
                status = "cap"
                break
            t1 = time.perf_counter()
            sigma = opts.alpha * tau_out + (1.0 - opts.alpha) * tau_in
            cut = separate(sigma)
            if cut is None:
                tau_in = sigma
                cut = separate(tau_out)
            timings["separate_ms"] += (time.perf_counter() - t1) * 1000
            if cut is None:
                status = "optimal"
                break
            key = cut.canonical()
            if key in seen:
                # no progress possible; treat like a budget stop
                status = "cap"
                break
            seen.add(key)
            cuts.append(cut)
            rows.append(constraint_row(cut, target))
            out = solve_now(rows)
            bounds.append(out.value)
            tau_out = out.x
            rounds += 1

    objective = float(lp.objective @ tau_out)
    decoded = decode(tau_out, target)
    timings["total_ms"] = (time.perf_counter() - t_start) * 1000
    timings = {k: round(v, 3) for k, v in timings.items()}
    return MapResult(
        status=status,
        space=space,
        objective=objective,
        tau=tau_out,
        bounds=tuple(bounds),
        cuts_added=tuple(cuts),
        cut_iterations=len(bounds) - 1,
        decode=decoded,
        num_lp_vars=lp.num_vars,
        num_lp_rows=len(base_rows) + len(cuts),
        timings_ms=timings,
    )
