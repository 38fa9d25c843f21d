"""Command line entry point: ``corners <subcommand> manifest.json``.

Exit status is 0 when every check passes, 1 when some check fails and 2 for
input errors.  Reports are JSON on standard output with sorted keys.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction
from math import comb

import numpy as np

from . import __version__
from .arrangement import ArrangementError, DomainError
from .collar import CollarError, FlowError, beta_collaring_check
from .edging import EdgingError, PolyhedronError, boundary_decomposition, wedge_check
from .jets import JetError, multijet_index, rel1jet_formula, relative_basis
from .lattice import LatticeError
from .manifest import Manifest, ManifestError, load_path, rational
from .perturb import DEFAULT_SCHEDULE, JetCondition, SamplerError, embedding_demo, mc_transversality
from .transversality import admissibility_check, whitney_rho

INPUT_ERRORS = (ManifestError, ArrangementError, DomainError, CollarError, FlowError, EdgingError,
                PolyhedronError, JetError, LatticeError, SamplerError)


def _plain(obj):
    """JSON-ready copy: rationals as ``p/q`` strings, non-finite floats as strings."""
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def dumps(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, separators=(",", ":"))


def _grid(task: dict, per_axis: int) -> list:
    if "grid" in task:
        return [list(p) for p in task["grid"]]
    if "grid_box" in task:
        axes = [np.linspace(lo, hi, per_axis).tolist() for lo, hi in task["grid_box"]]
        return [list(p) for p in np.array(np.meshgrid(*axes, indexing="ij")).reshape(len(axes), -1).T.tolist()] \
            if axes else [[]]
    return [[]]


def _members(F, sigma) -> list:
    return [str(c) for c in F.members(sigma)]


# --- subcommands -------------------------------------------------------------


def cmd_validate(m: Manifest, args) -> list[dict]:
    return [{"check": "validators", "ok": not m.problems, "violations": m.problems, "provenance": "proved",
             "entities": {k: len(getattr(m, k)) for k in ("lattices", "arrangements", "polyhedra",
                                                         "face_structures", "edgings", "maps")}}]


def cmd_dims(m: Manifest, args) -> list[dict]:
    out = []
    for task in m.tasks.get("dims", []):
        I, J = m.arrangements[task["source"]].value, m.arrangements[task["target"]].value
        r = task["r"]
        deg1 = relative_basis(I, J, 1).degree_count(1)
        formula = rel1jet_formula(I, J)
        res = {"source": task["source"], "target": task["target"], "r": r,
               "jet_dimension": J.ambient.m * comb(I.ambient.m + r, r),
               "relative_dimension": relative_basis(I, J, r).dimension,
               "relative_origin_dimension": relative_basis(I, J, r, origin=True).dimension,
               "relative_degree1": deg1, "formula_degree1": formula,
               "ok": deg1 == formula, "provenance": "proved"}
        if "multijet" in task:
            counts = {tuple(e["interval"]): e["count"] for e in task["multijet"]}
            mj = multijet_index(I, J, r, counts)
            res["multijet_fiber_dimension"] = mj.fiber_dimension
            res["multijet_index_size"] = len(mj.index)
        out.append(res)
    return out


def cmd_edging(m: Manifest, args) -> list[dict]:
    out = []
    for name, entry in m.edgings.items():
        beta = entry.value
        bad = beta.violations()
        res = {"edging": name, "violations": bad, "provenance": "proved"}
        if not bad:
            Y = beta.target
            taus = Y.sorted_nonempty()
            res["decomposition"] = {",".join(_members(Y, t)) or "{}": [_members(beta.source, s) for s in
                                                                      boundary_decomposition(beta, t)]
                                    for t in taus}
            wedges = []
            for i, a in enumerate(taus):
                for b in taus[i + 1:]:
                    if (a | b) in Y.nonempty:
                        wedges.append({"pair": [_members(Y, a), _members(Y, b)], "ok": wedge_check(beta, a, b)})
            res["wedge"] = wedges
            res["ok"] = all(w["ok"] for w in wedges)
        else:
            res["ok"] = False
        out.append(res)
    return out


def cmd_admissible(m: Manifest, args) -> list[dict]:
    out = []
    for task in m.tasks.get("admissible", []):
        e = m.edgings[task["edging"]]
        X, Y = m.polyhedra[e.source], m.polyhedra[e.target]
        samples = [[rational(v) for v in p] for p in task.get("samples", [])]
        rep = admissibility_check(m.maps[task["map"]], e.value, X, Y, samples)
        out.append({"map": task["map"], "edging": task["edging"], "ok": rep.admissible, **rep.to_json()})
    return out


def cmd_perturb(m: Manifest, args) -> list[dict]:
    out = []
    for task in m.tasks.get("perturb", []):
        I, J = m.arrangements[task["source"]].value, m.arrangements[task["target"]].value
        W = [JetCondition(c["target"], tuple(c["alpha"]), rational(c.get("value", 0))) for c in task["conditions"]]
        rep = mc_transversality(m.maps[task["map"]], I, J, W, _grid(task, args.grid), args.epsilon_schedule,
                                args.samples if args.samples is not None else 500, args.seed, task.get("r", 1),
                                rational(task.get("delta", 1)), args.tolerance)
        rep["ok"] = rep["results"][-1]["rate"] >= args.min_rate if rep["results"] else True
        rep["map"] = task["map"]
        out.append(rep)
    return out


def cmd_collar(m: Manifest, args) -> list[dict]:
    out = []
    for task in m.tasks.get("collar", []):
        e = m.edgings[task["edging"]]
        rep = beta_collaring_check(m.polyhedra[e.source], e.value, seed=args.seed,
                                   count=args.samples if args.samples is not None else 30,
                                   width=task.get("width", 0.2), baseline=task.get("baseline", False))
        rep["edging"] = task["edging"]
        out.append(rep)
    return out


def cmd_embed(m: Manifest, args) -> list[dict]:
    out = []
    for task in m.tasks.get("embed", []):
        e = m.edgings[task["edging"]]
        rep = embedding_demo(m.polyhedra[e.source], e.value, m.polyhedra[e.target], task["n"], seed=args.seed,
                             epsilon=task.get("epsilon", 0.05), max_rounds=task.get("max_rounds", 50))
        out.append({"edging": task["edging"], **rep.to_json()})
    return out


def cmd_metric(m: Manifest, args) -> list[dict]:
    out = []
    for task in m.tasks.get("metric", []):
        grid = _grid(task, args.grid)
        rho = whitney_rho(m.maps[task["f"]], m.maps[task["g"]], task["k"], grid)
        out.append({"f": task["f"], "g": task["g"], "k": task["k"], "rho": rho, "grid_points": len(grid),
                    "ok": True, "provenance": f"sampled({len(grid)})"})
    return out


COMMANDS = {
    "validate": (cmd_validate, "run every validator on the manifest entities"),
    "dims": (cmd_dims, "jet, relative-jet and multijet dimensions"),
    "edging": (cmd_edging, "validate edgings, decompose boundaries, wedge matrix"),
    "admissible": (cmd_admissible, "admissibility reports for maps along edgings"),
    "perturb": (cmd_perturb, "Monte-Carlo transversality success rates"),
    "collar": (cmd_collar, "collaring flow compatibility checks"),
    "embed": (cmd_embed, "embedding pipeline along an edging"),
    "metric": (cmd_metric, "Whitney distances between maps on a grid"),
}


def _schedule(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated numbers") from None
    if not vals or any(v <= 0 for v in vals):
        raise argparse.ArgumentTypeError("epsilons must be positive")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="corners", description=__doc__.splitlines()[0],
                                formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--version", action="version", version=f"corners {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="subcommand")
    for name, (_, help_text) in COMMANDS.items():
        s = sub.add_parser(name, help=help_text, formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        s.add_argument("manifest", help="path to a JSON manifest")
        s.add_argument("--seed", type=int, default=0, help="seed for every random choice")
        s.add_argument("--samples", type=int, default=None,
                       help="Monte-Carlo trials per epsilon (perturb, default 500) or sample points (collar, "
                            "default 30)")
        s.add_argument("--epsilon-schedule", type=_schedule, default=DEFAULT_SCHEDULE,
                       help="comma-separated perturbation sizes")
        s.add_argument("--grid", type=int, default=11, help="points per axis for tasks given a grid_box")
        s.add_argument("--tolerance", type=float, default=1e-4, help="distance counted as a hit on W")
        s.add_argument("--min-rate", type=float, default=0.95,
                       help="success rate required at the last epsilon")
        s.add_argument("--stream", action="store_true", help="one JSON line per result")
    return p


def run(argv: list[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    flags = {"seed": args.seed, "samples": args.samples, "epsilon_schedule": list(args.epsilon_schedule),
             "grid": args.grid, "tolerance": args.tolerance, "min_rate": args.min_rate}
    try:
        m = load_path(args.manifest, strict=args.command != "validate")
        results = COMMANDS[args.command][0](m, args)
    except INPUT_ERRORS as exc:
        err = {"command": args.command, "error": str(exc), "ok": False,
               "pointer": getattr(exc, "pointer", None)}
        print(dumps(err), file=out)
        print(f"corners: {exc}", file=sys.stderr)
        return 2
    ok = all(r.get("ok", True) for r in results)
    if args.stream:
        for r in results:
            print(dumps(r), file=out)
        print(dumps({"command": args.command, "flags": flags, "ok": ok, "summary": True}), file=out)
    else:
        print(dumps({"command": args.command, "flags": flags, "ok": ok, "results": results}), file=out)
    return 0 if ok else 1


def main() -> None:
    sys.exit(run())
