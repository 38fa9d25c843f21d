"""Loading and writing JSON manifests of named entities and tasks."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from typing import Any, Mapping

import jsonschema

from .arrangement import ArrangementError, MarkedSet, SetArrangement
from .edging import Edging, EdgingError, FaceStructure, Polyhedron, PolyhedronError, polyhedron_faces
from .jets import JetError, TruncatedPolyMap
from .lattice import FiniteLattice, FinitePoset, LatticeError

ENTITY_KINDS = ("lattices", "arrangements", "polyhedra", "face_structures", "edgings", "maps")


class ManifestError(ValueError):
    """Input problem located by a JSON pointer."""

    def __init__(self, pointer: str, message: str):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer or "/"
        self.message = message


def pointer(*parts) -> str:
    return "".join("/" + str(p).replace("~", "~0").replace("/", "~1") for p in parts)


def schema() -> dict:
    return json.loads(resources.files("corners").joinpath("data/manifest.schema.json").read_text())


def rational(v) -> Fraction:
    return Fraction(str(v)) if isinstance(v, str) else Fraction(int(v))


@dataclass(frozen=True)
class ArrangementEntry:
    lattice: str
    value: SetArrangement


@dataclass(frozen=True)
class EdgingEntry:
    source: str
    target: str
    value: Edging


@dataclass
class Manifest:
    version: str
    lattices: dict[str, FiniteLattice] = field(default_factory=dict)
    arrangements: dict[str, ArrangementEntry] = field(default_factory=dict)
    polyhedra: dict[str, Polyhedron] = field(default_factory=dict)
    face_structures: dict[str, FaceStructure] = field(default_factory=dict)
    edgings: dict[str, EdgingEntry] = field(default_factory=dict)
    maps: dict[str, TruncatedPolyMap] = field(default_factory=dict)
    tasks: dict[str, list] = field(default_factory=dict)
    problems: list[dict] = field(default_factory=list, compare=False)

    def faces_of(self, name: str) -> FaceStructure:
        if name in self.face_structures:
            return self.face_structures[name]
        return polyhedron_faces(self.polyhedra[name])

    def to_json(self) -> dict:
        out: dict[str, Any] = {"version": self.version}
        if self.lattices:
            out["lattices"] = {k: _lattice_json(v) for k, v in self.lattices.items()}
        if self.arrangements:
            out["arrangements"] = {k: _arrangement_json(e) for k, e in self.arrangements.items()}
        if self.polyhedra:
            out["polyhedra"] = {k: v.to_json() for k, v in self.polyhedra.items()}
        if self.face_structures:
            out["face_structures"] = {k: v.to_json() for k, v in self.face_structures.items()}
        if self.edgings:
            out["edgings"] = {k: {"source": e.source, "target": e.target, **e.value.to_json()}
                              for k, e in self.edgings.items()}
        if self.maps:
            out["maps"] = {k: v.to_json() for k, v in self.maps.items()}
        if self.tasks:
            out["tasks"] = self.tasks
        return out


def _lattice_json(L: FiniteLattice) -> dict:
    n = len(L)
    less = []
    for a in range(n):
        for b in range(n):
            if a != b and L.leq[a][b] and not any(c not in (a, b) and L.leq[a][c] and L.leq[c][b]
                                                  for c in range(n)):
                less.append([L.labels[a], L.labels[b]])
    return {"elements": list(L.labels), "less": less}


def _arrangement_json(e: ArrangementEntry) -> dict:
    A = e.value
    return {"lattice": e.lattice, "m": A.ambient.m, "k": A.ambient.k,
            "sets": {lab: sorted(A.assign[s]) for s, lab in enumerate(A.shape.labels)}}


def _load_lattice(raw: Mapping, at: str) -> FiniteLattice:
    if "chain" in raw:
        labels = raw["chain"]
        less = [(i, i + 1) for i in range(len(labels) - 1)]
    else:
        labels = raw["elements"]
        idx = {lab: i for i, lab in enumerate(labels)}
        less = []
        for k, (a, b) in enumerate(raw["less"]):
            for x in (a, b):
                if x not in idx:
                    raise ManifestError(at + pointer("less", k), f"unknown element {x!r}")
            less.append((idx[a], idx[b]))
    try:
        return FiniteLattice(FinitePoset.from_covers(len(labels), less, labels))
    except LatticeError as exc:
        raise ManifestError(at, str(exc)) from None


def _load_polyhedron(raw: Mapping, at: str) -> Polyhedron:
    try:
        if "box" in raw:
            P = Polyhedron.box(raw["box"])
            if not P.A:
                P.n = len(raw["box"])
            return P
        A = [[rational(v) for v in row] for row in raw["A"]]
        P = Polyhedron(A, [rational(v) for v in raw["b"]], raw["labels"], check=bool(A))
        if not A:
            P.n = int(raw.get("dim", 0))
        return P
    except PolyhedronError as exc:
        raise ManifestError(at, str(exc)) from None


def validate_schema(data: Any) -> None:
    validator = jsonschema.Draft202012Validator(schema())
    err = jsonschema.exceptions.best_match(validator.iter_errors(data))
    if err is not None:
        raise ManifestError(pointer(*err.absolute_path), err.message)


def load(data: Any, strict: bool = True) -> Manifest:
    """Build a manifest from parsed JSON.

    With ``strict`` an invalid arrangement or edging is an input error;
    otherwise the violations are collected in ``problems``.
    """
    validate_schema(data)
    m = Manifest(data["version"])

    def complain(at: str, violations: list):
        if strict:
            raise ManifestError(at, f"failed validation: {violations[0]}")
        m.problems.append({"pointer": at, "violations": violations})

    for name, raw in data.get("lattices", {}).items():
        m.lattices[name] = _load_lattice(raw, pointer("lattices", name))

    for name, raw in data.get("arrangements", {}).items():
        at = pointer("arrangements", name)
        if raw["lattice"] not in m.lattices:
            raise ManifestError(at + "/lattice", f"unknown lattice {raw['lattice']!r}")
        S = m.lattices[raw["lattice"]]
        missing = [lab for lab in S.labels if lab not in raw["sets"]]
        if missing:
            raise ManifestError(at + "/sets", f"no coordinate set for {missing[0]!r}")
        try:
            A = SetArrangement.from_labels(S, MarkedSet(raw["m"], raw["k"]), raw["sets"])
        except ArrangementError as exc:
            raise ManifestError(at, str(exc)) from None
        bad = A.validate()
        if bad:
            complain(at, bad)
        m.arrangements[name] = ArrangementEntry(raw["lattice"], A)

    for name, raw in data.get("polyhedra", {}).items():
        m.polyhedra[name] = _load_polyhedron(raw, pointer("polyhedra", name))

    for name, raw in data.get("face_structures", {}).items():
        at = pointer("face_structures", name)
        if name in m.polyhedra:
            raise ManifestError(at, "name already used by a polyhedron")
        try:
            m.face_structures[name] = FaceStructure.from_json(raw)
        except (EdgingError, LatticeError, ValueError) as exc:
            raise ManifestError(at, str(exc)) from None

    for name, raw in data.get("edgings", {}).items():
        at = pointer("edgings", name)
        for side in ("source", "target"):
            if raw[side] not in m.polyhedra and raw[side] not in m.face_structures:
                raise ManifestError(at + "/" + side, f"unknown face structure {raw[side]!r}")
        X, Y = m.faces_of(raw["source"]), m.faces_of(raw["target"])
        for C, D in raw["map"].items():
            if C not in X.faces:
                raise ManifestError(at + pointer("map", C), f"{C!r} is not a face of the source")
            if D not in Y.faces:
                raise ManifestError(at + pointer("map", C), f"{D!r} is not a face of the target")
        beta = Edging.from_mapping(X, Y, raw["map"])
        bad = beta.violations()
        if bad:
            complain(at, bad)
        m.edgings[name] = EdgingEntry(raw["source"], raw["target"], beta)

    for name, raw in data.get("maps", {}).items():
        at = pointer("maps", name)
        nv = len(raw["vars"])
        for c, comp in enumerate(raw["components"]):
            for t, term in enumerate(comp["terms"]):
                if len(term["alpha"]) != nv:
                    raise ManifestError(at + pointer("components", c, "terms", t, "alpha"),
                                        f"expected {nv} exponents")
        try:
            m.maps[name] = TruncatedPolyMap.from_json(
                {**raw, "components": [{"terms": [{"alpha": t["alpha"], "coef": str(t["coef"])}
                                                  for t in comp["terms"]]} for comp in raw["components"]]})
        except JetError as exc:
            raise ManifestError(at, str(exc)) from None

    m.tasks = json.loads(json.dumps(data.get("tasks", {})))
    _check_task_refs(m)
    return m


_REFS = {
    "dims": {"source": "arrangements", "target": "arrangements"},
    "admissible": {"map": "maps", "edging": "edgings"},
    "perturb": {"map": "maps", "source": "arrangements", "target": "arrangements"},
    "collar": {"edging": "edgings"},
    "embed": {"edging": "edgings"},
    "metric": {"f": "maps", "g": "maps"},
}


def _check_task_refs(m: Manifest) -> None:
    for kind, tasks in m.tasks.items():
        for i, task in enumerate(tasks):
            for key, table in _REFS[kind].items():
                if task[key] not in getattr(m, table):
                    raise ManifestError(pointer("tasks", kind, i, key), f"unknown {table[:-1]} {task[key]!r}")
            if "edging" in task and kind in ("admissible", "collar", "embed"):
                e = m.edgings[task["edging"]]
                for side in (e.source, e.target):
                    if side not in m.polyhedra:
                        raise ManifestError(pointer("tasks", kind, i, "edging"),
                                            f"{side!r} must be a polyhedron for this task")


def load_path(path: str, strict: bool = True) -> Manifest:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ManifestError("/", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ManifestError("/", f"not valid JSON: {exc.msg} at line {exc.lineno}") from None
    return load(data, strict)
