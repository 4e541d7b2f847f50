"""Command-line front door.

Subcommands:
  orbits  detect symmetry and report orbit partitions as JSON
  map     LP-relaxation MAP inference, ground or lifted, LOCAL or CYCLE
  exact   brute-force enumeration oracle (small models only)
  ground  ground an MLN and dump the factored model as FGM text

Exit codes: 0 success (and, for map, converged); 2 input, format, or usage
error; 3 solver, lifting, or oracle failure; 4 run finished at an iteration
or cut cap without convergence. JSON output is deterministic for fixed
inputs apart from the timing fields.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

from .lift import LiftError, build_lifted_model
from .mln import (
    MLNError,
    RenamingSymmetries,
    ground_mln,
    parse_evidence,
    parse_mln,
)
from .model import ModelError, format_model, parse_model
from .oracle import OracleError, exact_enumerate
from .solve import MapOptions, SolveError, cutting_plane_map
from .symmetry import GeneratorSymmetries, TrivialSymmetries

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SOLVE = 3
EXIT_CAP = 4


class UsageError(Exception):
    """Bad flag combination or unusable input."""


@dataclass
class _Inputs:
    path: str
    kind: str  # "fgm" | "mln"
    model: object
    mln: object = None
    gmap: object = None
    evidence: object = None
    domain_size: int = None


def _load(args) -> _Inputs:
    path = args.input
    if path.endswith(".fgm"):
        kind = "fgm"
    elif path.endswith(".mln"):
        kind = "mln"
    else:
        raise UsageError("cannot tell the input type; use a .fgm or .mln file")
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if kind == "fgm":
        if getattr(args, "domain_size", None) is not None:
            raise UsageError("--domain-size applies to MLN inputs only")
        if getattr(args, "evidence", None):
            raise UsageError("--evidence applies to MLN inputs only")
        return _Inputs(path=path, kind="fgm", model=parse_model(text))
    if getattr(args, "domain_size", None) is None:
        raise UsageError("MLN inputs need --domain-size")
    mln = parse_mln(text)
    evidence = None
    if getattr(args, "evidence", None):
        with open(args.evidence, "r", encoding="utf-8") as fh:
            evidence = parse_evidence(fh.read())
    model, gmap = ground_mln(mln, args.domain_size, evidence)
    return _Inputs(
        path=path,
        kind="mln",
        model=model,
        mln=mln,
        gmap=gmap,
        evidence=evidence,
        domain_size=args.domain_size,
    )


def _make_symmetries(inputs: _Inputs, method: str):
    if method == "auto":
        method = "search" if inputs.kind == "fgm" else "renaming"
    if method == "renaming":
        if inputs.kind != "mln":
            raise UsageError("renaming symmetries need an MLN input")
        return method, RenamingSymmetries(inputs.model, inputs.gmap)
    if method == "search":
        return method, GeneratorSymmetries(inputs.model)
    if method == "none":
        return method, TrivialSymmetries(inputs.model)
    raise UsageError("unknown symmetry method %r" % method)


def _elem_json(elem):
    if isinstance(elem, int):
        return elem
    if isinstance(elem, tuple) and len(elem) == 2 and isinstance(elem[1], tuple):
        return [elem[0], list(elem[1])]  # factor assignment (feature, values)
    return list(elem)


def _partition_json(p):
    return {
        "count": p.num_cells,
        "cells": [[_elem_json(e) for e in cell] for cell in p.cells],
    }


def _bundle_json(bundle):
    return {
        "vars": _partition_json(bundle.vars),
        "features": _partition_json(bundle.features),
        "edges": _partition_json(bundle.edges),
        "arcs": _partition_json(bundle.arcs),
        "factor_assignments": _partition_json(bundle.factor_assignments),
    }


def _refines(fine, coarse) -> bool:
    # every cell of the fine partition must sit inside one coarse cell
    for cell in fine.cells:
        if len({coarse.cell_of[e] for e in cell}) != 1:
            return False
    return True


def _write_output(args, text: str):
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(args, payload: dict):
    _write_output(args, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _base_payload(inputs: _Inputs) -> dict:
    return {
        "input": inputs.path,
        "type": inputs.kind,
        "domain_size": inputs.domain_size,
        "model": {
            "variables": inputs.model.num_vars,
            "features": inputs.model.num_features,
        },
    }


def cmd_orbits(args) -> int:
    inputs = _load(args)
    if args.method == "both":
        if inputs.kind != "mln":
            raise UsageError("--method both compares renaming to search on MLN inputs")
        methods = ["search", "renaming"]
    elif args.method == "auto":
        methods = ["search" if inputs.kind == "fgm" else "renaming"]
    else:
        methods = [args.method]
    payload = _base_payload(inputs)
    payload["methods"] = {}
    bundles = {}
    for name in methods:
        _, sym = _make_symmetries(inputs, name)
        bundle = sym.bundle()
        bundles[name] = bundle
        gens = getattr(sym, "gens", None)
        payload["methods"][name] = {
            "group_order": None if gens is None else gens.group_order,
            "num_generators": None if gens is None else len(gens.generators),
            "orbits": _bundle_json(bundle),
        }
    if len(methods) == 2:
        fine, coarse = bundles["renaming"], bundles["search"]
        checks = {
            "vars": _refines(fine.vars, coarse.vars),
            "features": _refines(fine.features, coarse.features),
            "edges": _refines(fine.edges, coarse.edges),
            "arcs": _refines(fine.arcs, coarse.arcs),
            "factor_assignments": _refines(
                fine.factor_assignments, coarse.factor_assignments
            ),
        }
        checks["all"] = all(checks.values())
        payload["renaming_refines_search"] = checks
    _emit_json(args, payload)
    return EXIT_OK


def cmd_map(args) -> int:
    inputs = _load(args)
    opts = MapOptions(
        polytope=args.polytope,
        alpha=args.alpha,
        tol=args.tol,
        max_cuts=args.max_cuts,
    )
    payload = _base_payload(inputs)
    if args.space == "lifted":
        method, sym = _make_symmetries(inputs, args.method)
        lifted = build_lifted_model(inputs.model, sym.bundle(), symmetries=sym)
        payload["method"] = method
        payload["orbit_counts"] = {
            "vars": lifted.bundle.vars.num_cells,
            "features": lifted.bundle.features.num_cells,
            "edges": lifted.bundle.edges.num_cells,
            "arcs": lifted.bundle.arcs.num_cells,
            "factor_assignments": lifted.bundle.factor_assignments.num_cells,
        }
        result = cutting_plane_map(lifted, opts)
    else:
        payload["method"] = None
        result = cutting_plane_map(inputs.model, opts)
    payload["polytope"] = args.polytope
    payload["seed"] = args.seed
    payload.update(result.as_dict())
    if args.csv:
        lines = ["iteration,bound,cuts"]
        for i, bound in enumerate(result.bounds):
            lines.append("%d,%.12g,%d" % (i, bound, i))
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    _emit_json(args, payload)
    return EXIT_OK if result.status == "optimal" else EXIT_CAP


def _layout_key_str(key) -> str:
    if key[0] == "node":
        return "node:%d:%d" % (key[1], key[2])
    if key[0] == "edge":
        return "edge:%d:%d:%d:%d" % (key[1], key[2], key[3], key[4])
    return "factor:%d:%s" % (key[1], "".join(str(b) for b in key[2]))


def cmd_exact(args) -> int:
    inputs = _load(args)
    res = exact_enumerate(inputs.model, limit=args.limit)
    payload = _base_payload(inputs)
    payload.update(
        {
            "map_value": res.map_value,
            "argmax": list(res.argmax),
            "log_partition": res.log_partition,
            "coords": [_layout_key_str(k) for k in res.layout.keys],
            "mean_params": [float(v) for v in res.mean_params],
        }
    )
    _emit_json(args, payload)
    return EXIT_OK


def cmd_ground(args) -> int:
    inputs = _load(args)
    if inputs.kind != "mln":
        raise UsageError("ground expects an MLN input")
    _write_output(args, format_model(inputs.model))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="liftedmap",
        description="Symmetry detection and lifted MAP inference for discrete factored models.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def add_io(sp, evidence=True):
        sp.add_argument("input", help="model file (.fgm) or MLN file (.mln)")
        sp.add_argument("--domain-size", type=int, default=None, help="MLN domain size (total constants)")
        if evidence:
            sp.add_argument("--evidence", default=None, help="evidence file for MLN inputs")
        sp.add_argument("--out", default=None, help="write output here instead of stdout")

    sp = sub.add_parser("orbits", help="report orbit partitions")
    add_io(sp)
    sp.add_argument(
        "--method",
        choices=["auto", "search", "renaming", "none", "both"],
        default="auto",
        help="symmetry method; auto picks search for .fgm, renaming for .mln",
    )
    sp.add_argument("--seed", type=int, default=0, help="seed for sampling-based self-checks")
    sp.set_defaults(func=cmd_orbits)

    sp = sub.add_parser("map", help="MAP inference by LP relaxation")
    add_io(sp)
    sp.add_argument("--space", choices=["ground", "lifted"], default="ground")
    sp.add_argument("--polytope", choices=["local", "cycle"], default="local")
    sp.add_argument(
        "--method",
        choices=["auto", "search", "renaming", "none"],
        default="auto",
        help="symmetry method for the lifted space",
    )
    sp.add_argument("--alpha", type=float, default=0.99, help="in-out separation weight")
    sp.add_argument("--tol", type=float, default=1e-6, help="cycle violation tolerance")
    sp.add_argument("--max-cuts", type=int, default=200)
    sp.add_argument("--csv", default=None, help="write the bound-per-iteration curve here")
    sp.add_argument("--seed", type=int, default=0, help="seed for sampling-based self-checks")
    sp.set_defaults(func=cmd_map)

    sp = sub.add_parser("exact", help="brute-force enumeration (small models)")
    add_io(sp)
    sp.add_argument("--limit", type=int, default=20, help="refuse models with more variables")
    sp.add_argument("--seed", type=int, default=0, help="seed for sampling-based self-checks")
    sp.set_defaults(func=cmd_exact)

    sp = sub.add_parser("ground", help="ground an MLN and print FGM text")
    add_io(sp)
    sp.set_defaults(func=cmd_ground)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ModelError, MLNError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_INPUT
    except (SolveError, LiftError, OracleError, RuntimeError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_SOLVE


if __name__ == "__main__":
    sys.exit(main())
