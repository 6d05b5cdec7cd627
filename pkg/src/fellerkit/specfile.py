"""JSON model and kernel documents: loading, validation, export, and the built-in documents.

Two document formats share one loader:

* ``fellerkit-model/1`` declares W, Y, A, the model kernels (tables or
  closed forms) and a variant, plus priors, sequences, families, witness
  intervals and default diagnostics;
* ``fellerkit-kernel/1`` declares one joint kernel ``psi`` on S1 x S2
  given a parameter space (tables, constants or two-measure mixtures).

Point ids on a real line are decimal strings of the coordinate.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .continuity import Interval, IntervalUnion, WitnessPlan, default_plan
from .filter import MDPIIModel, Variant
from .instances import MIXINGS, CLOSED_FORM_IDS, GeneratedInstance, closed_form
from .kernel import TABLE_TOL, JointKernel, Kernel, ParamSequence, determining_family
from .measure import (
    ATAN,
    CLIPPED_ABS,
    CONSTANT_ONE,
    DomainError,
    FunctionFamily,
    Measure,
    MetricSpace,
    Point,
    ProductSpace,
    RealLine,
    Space,
    indicator_of,
    mixture,
    real_point,
)

FORMAT_MODEL = "fellerkit-model/1"
FORMAT_KERNEL = "fellerkit-kernel/1"


class SpecError(DomainError):
    """A spec document is malformed; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


@dataclass
class LoadedSpec:
    name: str
    format: str
    spaces: dict[str, MetricSpace]
    kernels: dict[str, Kernel]
    model: MDPIIModel | None
    priors: dict[str, Measure]
    sequences: dict[str, ParamSequence]
    sequence_kernel: dict[str, str]
    families: dict[str, FunctionFamily]
    plan: WitnessPlan | None
    diagnostics: list[dict]
    document: dict = field(repr=False)

    def kernel(self, name: str) -> Kernel:
        try:
            return self.kernels[name]
        except KeyError:
            raise SpecError("kernels", f"unknown kernel {name!r}") from None

    def sequence(self, name: str) -> tuple[ParamSequence, str]:
        try:
            return self.sequences[name], self.sequence_kernel[name]
        except KeyError:
            raise SpecError("sequences", f"unknown sequence {name!r}; declared: {sorted(self.sequences)}") from None

    def prior(self, name: str) -> Measure:
        try:
            return self.priors[name]
        except KeyError:
            raise SpecError("priors", f"unknown prior {name!r}") from None

    def witness_plan(self, kernel: JointKernel) -> WitnessPlan:
        return self.plan if self.plan is not None else default_plan(kernel.s1)


# ---------------------------------------------------------------------------
# resolution helpers


def _require(doc: dict, key: str, path: str) -> Any:
    if not isinstance(doc, dict):
        raise SpecError(path, "expected an object")
    if key not in doc:
        raise SpecError(f"{path}.{key}" if path else key, "missing field")
    return doc[key]


def _space(doc: Any, path: str, name: str) -> MetricSpace:
    if not isinstance(doc, dict):
        raise SpecError(path, "expected an object with 'points' or 'real_line'")
    if "real_line" in doc:
        rl = doc["real_line"] or {}
        lo = float(rl.get("lo", "-inf"))
        hi = float(rl.get("hi", "inf"))
        if not lo <= hi:
            raise SpecError(f"{path}.real_line", f"empty interval [{lo}, {hi}]")
        return RealLine(name, lo, hi)
    pts = []
    for i, p in enumerate(_require(doc, "points", path)):
        if isinstance(p, str):
            pts.append(Point(p))
        elif isinstance(p, dict) and "id" in p:
            coord = p.get("coord")
            pts.append(Point(str(p["id"]), None if coord is None else tuple(float(c) for c in coord)))
        else:
            raise SpecError(f"{path}.points[{i}]", "a point is an id string or {'id', 'coord'}")
    try:
        return Space(name, tuple(pts), doc.get("metric", "discrete"))
    except DomainError as exc:
        raise SpecError(path, str(exc)) from None


def _atom(space: MetricSpace, ref: Any, path: str) -> Any:
    if isinstance(space, ProductSpace):
        if not isinstance(ref, list) or len(ref) != len(space.factors):
            raise SpecError(path, f"expected a list of {len(space.factors)} ids for {space.name}")
        return tuple(_atom(f, r, f"{path}[{i}]") for i, (f, r) in enumerate(zip(space.factors, ref)))
    if isinstance(space, RealLine):
        try:
            p = real_point(float(ref))
        except (TypeError, ValueError):
            raise SpecError(path, f"{ref!r} is not a real coordinate") from None
        if p not in space:
            raise SpecError(path, f"{ref!r} is outside {space.name}")
        return p
    if isinstance(space, Space):
        if not isinstance(ref, str):
            raise SpecError(path, f"expected a point id of {space.name}, got {ref!r}")
        try:
            return space[ref]
        except DomainError:
            raise SpecError(path, f"unresolved id {ref!r} in space {space.name}") from None
    raise SpecError(path, f"atoms of {space.name} cannot be written in a spec")


def resolve_atom(space: MetricSpace, ref: Any, where: str = "") -> Any:
    """Resolve a written id (or list of ids for a product) to an atom of ``space``."""
    return _atom(space, ref, where)


def _atom_ref(space: MetricSpace, atom: Any) -> Any:
    if isinstance(space, ProductSpace):
        return [_atom_ref(f, a) for f, a in zip(space.factors, atom)]
    return atom.id


def _space_ref(spaces: dict, ref: Any, path: str) -> MetricSpace:
    if isinstance(ref, list):
        return ProductSpace(tuple(_space_ref(spaces, r, f"{path}[{i}]") for i, r in enumerate(ref)))
    try:
        return spaces[ref]
    except (KeyError, TypeError):
        raise SpecError(path, f"unresolved space {ref!r}") from None


def _weight(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpecError(path, f"weight {value!r} is not a number")
    if value < 0:
        raise SpecError(path, f"negative weight {value!r}")
    return float(value)


def _outcome_rows(rows: Any, target: MetricSpace, path: str) -> dict:
    if not isinstance(rows, list):
        raise SpecError(path, "expected a list of rows")
    out: dict = {}
    for i, row in enumerate(rows):
        p = f"{path}[{i}]"
        atom = _atom(target, _require(row, "outcome", p), f"{p}.outcome")
        out[atom] = out.get(atom, 0.0) + _weight(_require(row, "weight", p), f"{p}.weight")
    return out


def _measure(rows: Any, target: MetricSpace, path: str, probability: bool = True) -> Measure:
    weights = _outcome_rows(rows, target, path)
    total = sum(weights.values())
    if probability and abs(total - 1.0) > TABLE_TOL:
        raise SpecError(path, f"weights sum to {total!r}, not 1")
    if abs(total - 1.0) > 1e-12 and probability:
        weights = {a: w / total for a, w in weights.items()}
    try:
        return Measure(target, weights)
    except DomainError as exc:
        raise SpecError(path, str(exc)) from None


def _table(rows: Any, target: MetricSpace, params: MetricSpace, path: str, name: str) -> dict:
    if not isinstance(rows, list):
        raise SpecError(path, "expected a list of rows")
    table: dict = {}
    for i, row in enumerate(rows):
        p = f"{path}[{i}]"
        given = _atom(params, _require(row, "given", p), f"{p}.given")
        outcome = _atom(target, _require(row, "outcome", p), f"{p}.outcome")
        col = table.setdefault(given, {})
        col[outcome] = col.get(outcome, 0.0) + _weight(_require(row, "weight", p), f"{p}.weight")
    return table


def _kernel(spaces: dict, doc: dict, path: str, name: str) -> Kernel:
    if "closed_form" in doc:
        rule = doc["closed_form"]
        if rule not in CLOSED_FORM_IDS:
            raise SpecError(f"{path}.closed_form", f"unknown closed-form rule {rule!r}")
        return closed_form(rule)
    target = _space_ref(spaces, _require(doc, "target", path), f"{path}.target")
    params = _space_ref(spaces, _require(doc, "given", path), f"{path}.given")
    joint = isinstance(target, ProductSpace) and len(target.factors) == 2 and isinstance(doc["target"], list)

    def build(rule):
        if joint:
            return JointKernel(target.factors[0], target.factors[1], params, rule, name)
        return Kernel(target, params, rule, name)

    if "rows" in doc:
        table = _table(doc["rows"], target, params, f"{path}.rows", name)
        try:
            if joint:
                return JointKernel.from_table(target.factors[0], target.factors[1], params, table, name)
            return Kernel.from_table(target, params, table, name)
        except DomainError as exc:
            raise SpecError(f"{path}.rows", str(exc)) from None
    if "constant" in doc:
        mu = _measure(doc["constant"], target, f"{path}.constant")
        return build(lambda _p: mu)
    if "mixture" in doc:
        mix = doc["mixture"]
        m0 = _measure(_require(mix, "m0", f"{path}.mixture"), target, f"{path}.mixture.m0")
        m1 = _measure(_require(mix, "m1", f"{path}.mixture"), target, f"{path}.mixture.m1")
        mixing = mix.get("mixing", "identity")
        if mixing not in MIXINGS:
            raise SpecError(f"{path}.mixture.mixing", f"unknown mixing {mixing!r}; use one of {sorted(MIXINGS)}")
        if not isinstance(params, RealLine):
            raise SpecError(f"{path}.given", "mixture kernels are given a real line")
        g = MIXINGS[mixing]
        return build(lambda t: mixture([(1.0 - g(t.coord[0]), m0), (g(t.coord[0]), m1)]))
    raise SpecError(path, "a kernel needs one of 'rows', 'constant', 'mixture' or 'closed_form'")


def _family(doc: Any, space: MetricSpace | None, spaces: dict, path: str) -> FunctionFamily:
    members = []
    for i, m in enumerate(_require(doc, "members", path)):
        p = f"{path}.members[{i}]"
        kind = m if isinstance(m, str) else (m.get("builtin") if isinstance(m, dict) else None)
        if kind == "constant-one":
            members.append(CONSTANT_ONE)
        elif kind == "clipped-abs":
            members.append(CLIPPED_ABS)
        elif kind == "atan":
            members.append(ATAN)
        elif kind == "indicator":
            sp = _space_ref(spaces, doc.get("space"), f"{path}.space") if "space" in doc else space
            if not isinstance(m, dict) or sp is None:
                raise SpecError(p, "an indicator needs 'points' and a family 'space'")
            pts = [_atom(sp, r, f"{p}.points[{j}]") for j, r in enumerate(m.get("points", []))]
            members.append(indicator_of(pts))
        else:
            raise SpecError(p, f"unknown family member {m!r}")
    try:
        return FunctionFamily(tuple(members))
    except DomainError as exc:
        raise SpecError(path, str(exc)) from None


def _sequence(doc: dict, kernel: Kernel, path: str) -> ParamSequence:
    params = kernel.params
    try:
        if "harmonic" in doc:
            h = doc["harmonic"]
            given = _require(h, "given", f"{path}.harmonic")
            center = float(h.get("center", 0.0))
            scale = float(h.get("scale", 1.0))
            sign = float(h.get("sign", 1.0))
            length = int(h.get("length", 64))

            def at(x: float):
                ref = [repr(x) if r == "$t" else r for r in given] if isinstance(given, list) else (
                    repr(x) if given == "$t" else given
                )
                return _atom(params, ref, f"{path}.harmonic.given")

            terms = tuple(at(center + sign * scale / n) for n in range(1, length + 1))
            return ParamSequence(params, terms, at(center), doc.get("name", "harmonic"))
        terms = tuple(_atom(params, r, f"{path}.terms[{i}]") for i, r in enumerate(_require(doc, "terms", path)))
        return ParamSequence(params, terms, _atom(params, _require(doc, "limit", path), f"{path}.limit"))
    except SpecError:
        raise
    except DomainError as exc:
        raise SpecError(path, str(exc)) from None


def _intervals(doc: Any, path: str) -> list[IntervalUnion]:
    out = []
    for i, union in enumerate(doc):
        ivs = []
        for j, iv in enumerate(union):
            p = f"{path}[{i}][{j}]"
            try:
                ivs.append(Interval(float(iv["lo"]), float(iv["hi"]), bool(iv.get("lo_closed", False)), bool(iv.get("hi_closed", False))))
            except (KeyError, TypeError, ValueError):
                raise SpecError(p, "an interval needs numeric 'lo' and 'hi'") from None
        out.append(IntervalUnion(tuple(ivs)))
    return out


# ---------------------------------------------------------------------------
# loading


def load_document(doc: dict) -> LoadedSpec:
    if not isinstance(doc, dict):
        raise SpecError("", "a spec document is a JSON object")
    fmt = _require(doc, "format", "")
    if fmt not in (FORMAT_MODEL, FORMAT_KERNEL):
        raise SpecError("format", f"unknown format {fmt!r}")
    name = str(doc.get("name", "spec"))
    spaces_doc = _require(doc, "spaces", "")
    if not isinstance(spaces_doc, dict):
        raise SpecError("spaces", "expected an object")
    spaces = {k: _space(v, f"spaces.{k}", k) for k, v in spaces_doc.items()}

    kernels: dict[str, Kernel] = {}
    for k, kd in (_require(doc, "kernels", "") or {}).items():
        kernels[k] = _kernel(spaces, kd, f"kernels.{k}", k)

    model = None
    if fmt == FORMAT_MODEL:
        model = _model(doc, spaces, kernels)
        kernels.setdefault("P", model.P)
    elif "psi" not in kernels or not isinstance(kernels["psi"], JointKernel):
        raise SpecError("kernels.psi", "a kernel document declares a joint kernel 'psi'")

    priors = {}
    for k, rows in (doc.get("priors") or {}).items():
        if model is None:
            raise SpecError(f"priors.{k}", "priors belong to model documents")
        priors[k] = _measure(rows, model.W, f"priors.{k}")

    sequences, sequence_kernel = {}, {}
    for k, sd in (doc.get("sequences") or {}).items():
        p = f"sequences.{k}"
        kname = sd.get("kernel", "P" if model else "psi") if isinstance(sd, dict) else None
        if kname not in kernels:
            raise SpecError(f"{p}.kernel", f"unresolved kernel {kname!r}")
        sequences[k] = _sequence(sd, kernels[kname], p)
        sequence_kernel[k] = kname

    families = {k: _family(fd, None, spaces, f"families.{k}") for k, fd in (doc.get("families") or {}).items()}

    plan = None
    if doc.get("intervals"):
        fam_name = doc.get("witness_family")
        fam = families.get(fam_name) if fam_name else None
        plan = WitnessPlan.intervals(_intervals(doc["intervals"], "intervals"), fam)

    diagnostics = list(doc.get("diagnostics") or [])
    for i, d in enumerate(diagnostics):
        if d.get("sequence") not in sequences:
            raise SpecError(f"diagnostics[{i}].sequence", f"unresolved sequence {d.get('sequence')!r}")
    return LoadedSpec(name, fmt, spaces, kernels, model, priors, sequences, sequence_kernel, families, plan,
                      diagnostics, doc)


def _model(doc: dict, spaces: dict, kernels: dict) -> MDPIIModel:
    md = _require(doc, "model", "")
    try:
        variant = Variant(_require(md, "variant", "model"))
    except ValueError:
        raise SpecError("model.variant", f"unknown variant {md.get('variant')!r}") from None

    def k(key):
        ref = _require(md, key, "model")
        if ref not in kernels:
            raise SpecError(f"model.{key}", f"unresolved kernel {ref!r}")
        return kernels[ref]

    try:
        if variant is Variant.POMDP2:
            return MDPIIModel.pomdp2(k("P2"), k("Q2"), doc.get("name", "model"))
        if variant is Variant.POMDP1:
            return MDPIIModel.pomdp1(k("P1"), k("Q1"), doc.get("name", "model"))
        W = _space_ref(spaces, _require(md, "W", "model"), "model.W")
        Y = _space_ref(spaces, _require(md, "Y", "model"), "model.Y")
        A = _space_ref(spaces, _require(md, "A", "model"), "model.A")
        return MDPIIModel(W, Y, A, k("P"), variant, name=doc.get("name", "model"))
    except SpecError:
        raise
    except DomainError as exc:
        raise SpecError("model", str(exc)) from None


def load(source: str | Path) -> LoadedSpec:
    """Load a built-in document by name, or a JSON file by path."""
    if isinstance(source, str) and source in BUILTINS:
        return load_document(builtin(source))
    path = Path(source)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SpecError("", f"cannot read {source}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"line {exc.lineno} column {exc.colno}", exc.msg) from None
    return load_document(doc)


# ---------------------------------------------------------------------------
# export


def _space_doc(space: MetricSpace) -> dict:
    if isinstance(space, RealLine):
        return {"real_line": {"lo": repr(space.lo), "hi": repr(space.hi)}}
    pts = [p.id if p.coord is None else {"id": p.id, "coord": list(p.coord)} for p in space.points]
    out: dict = {"points": pts}
    if space.metric != "discrete":
        out["metric"] = space.metric
    return out


def _rows(mu: Measure, given: Any = None, given_space: MetricSpace | None = None) -> list[dict]:
    rows = []
    for atom, w in mu.sorted_items():
        row = {} if given is None else {"given": _atom_ref(given_space, given)}
        row["outcome"] = _atom_ref(mu.space, atom)
        row["weight"] = w
        rows.append(row)
    return rows


def export_document(spec: LoadedSpec) -> dict:
    """Canonical document: finite tables are re-emitted from kernel evaluations, exact to the last bit."""
    doc = copy.deepcopy(spec.document)
    doc["spaces"] = {k: _space_doc(v) for k, v in spec.spaces.items()}
    for name, kd in doc.get("kernels", {}).items():
        if "rows" in kd:
            kernel = spec.kernels[name]
            kd["rows"] = [row for p in kernel.params.points for row in _rows(kernel(p), p, kernel.params)]
    for name, rows in (doc.get("priors") or {}).items():
        doc["priors"][name] = _rows(spec.priors[name])
    return doc


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2) + "\n"


def instance_document(inst: GeneratedInstance) -> dict:
    s1, s2 = inst.m0.space.factors
    return {
        "format": FORMAT_KERNEL,
        "name": f"generated-{inst.seed}-{inst.ground_truth.value.lower()}",
        "ground_truth": inst.ground_truth.value,
        "spaces": {"S1": _space_doc(s1), "S2": _space_doc(s2), "T": _space_doc(inst.kernel.params)},
        "kernels": {
            "psi": {
                "target": ["S1", "S2"],
                "given": "T",
                "mixture": {"m0": _rows(inst.m0), "m1": _rows(inst.m1), "mixing": inst.mixing},
            }
        },
        "sequences": {"t=1/n": {"kernel": "psi", "harmonic": {"given": "$t", "center": 0.0, "scale": 1.0, "length": 64}}},
        "diagnostics": [{"kernel": "psi", "sequence": "t=1/n", "conditions": ["ALL"]}],
    }


# ---------------------------------------------------------------------------
# built-in documents


def _real_sequences(kernel: str = "P") -> dict:
    return {
        "w=1/n": {"kernel": kernel, "harmonic": {"given": ["$t", "0.0"], "center": 0.0, "scale": 1.0, "length": 64}},
        "w=-1/n": {
            "kernel": kernel,
            "harmonic": {"given": ["$t", "0.0"], "center": 0.0, "scale": 1.0, "sign": -1.0, "length": 64},
        },
    }


def _real_intervals() -> list:
    inf = "inf"
    return [
        [{"lo": -1.0, "hi": 1.0}],
        [{"lo": -1.0, "hi": 1.0, "lo_closed": True, "hi_closed": True}],
        [{"lo": 0.0, "hi": 1.0}],
        [{"lo": 0.0, "hi": 1.0, "lo_closed": True, "hi_closed": True}],
        [{"lo": -1.0, "hi": 0.0, "lo_closed": True, "hi_closed": True}],
        [{"lo": "-inf", "hi": 0.0}, {"lo": 0.0, "hi": inf}],
        [{"lo": 0.0, "hi": 0.0, "lo_closed": True, "hi_closed": True}],
    ]


def _closed_form_model(name: str, prefix: str) -> dict:
    return {
        "format": FORMAT_MODEL,
        "name": name,
        "spaces": {"R": {"real_line": {}}},
        "kernels": {
            "P2": {"closed_form": f"{prefix}_P2"},
            "Q2": {"closed_form": f"{prefix}_Q2"},
            "P_closed": {"closed_form": f"{prefix}_P"},
        },
        "model": {"variant": "POMDP2", "P2": "P2", "Q2": "Q2"},
        "priors": {"half-0-1": [{"outcome": "0.0", "weight": 0.5}, {"outcome": "1.0", "weight": 0.5}]},
        "sequences": _real_sequences(),
        "families": {"real": {"members": ["constant-one", "clipped-abs", "atan"]},
                     "clipped-abs": {"members": ["constant-one", "clipped-abs"]}},
        "witness_family": "real",
        "intervals": _real_intervals(),
        "diagnostics": [{"kernel": "P", "sequence": "w=1/n", "conditions": ["SUF_A"], "family": "real"}],
    }


def _twostate() -> dict:
    return {
        "format": FORMAT_MODEL,
        "name": "twostate-demo",
        "spaces": {"W": {"points": ["w1", "w2"]}, "Y": {"points": ["y1", "y2"]}, "A": {"points": ["a1"]}},
        "kernels": {
            "P2": {
                "target": "W",
                "given": ["W", "A"],
                "rows": [
                    {"given": ["w1", "a1"], "outcome": "w1", "weight": 1.0},
                    {"given": ["w2", "a1"], "outcome": "w2", "weight": 1.0},
                ],
            },
            "Q2": {
                "target": "Y",
                "given": ["A", "W"],
                "rows": [
                    {"given": ["a1", "w1"], "outcome": "y1", "weight": 0.9},
                    {"given": ["a1", "w1"], "outcome": "y2", "weight": 0.1},
                    {"given": ["a1", "w2"], "outcome": "y1", "weight": 0.2},
                    {"given": ["a1", "w2"], "outcome": "y2", "weight": 0.8},
                ],
            },
        },
        "model": {"variant": "POMDP2", "P2": "P2", "Q2": "Q2"},
        "priors": {"uniform": [{"outcome": "w1", "weight": 0.5}, {"outcome": "w2", "weight": 0.5}]},
        "sequences": {"w2->w1": {"kernel": "P", "terms": [["w2", "a1"], ["w1", "a1"]], "limit": ["w1", "a1"]}},
        "diagnostics": [],
    }


def _constant() -> dict:
    rows = [
        {"outcome": ["x1", "y1"], "weight": 0.25},
        {"outcome": ["x1", "y2"], "weight": 0.25},
        {"outcome": ["x2", "y1"], "weight": 0.125},
        {"outcome": ["x2", "y2"], "weight": 0.375},
    ]
    return {
        "format": FORMAT_KERNEL,
        "name": "constant",
        "spaces": {"S1": {"points": ["x1", "x2"]}, "S2": {"points": ["y1", "y2"]}, "T": {"real_line": {"lo": 0.0, "hi": 1.0}}},
        "kernels": {"psi": {"target": ["S1", "S2"], "given": "T", "constant": rows}},
        "sequences": {"t=1/n": {"kernel": "psi", "harmonic": {"given": "$t", "center": 0.0, "scale": 1.0, "length": 64}}},
        "diagnostics": [{"kernel": "psi", "sequence": "t=1/n", "conditions": ["ALL"]}],
    }


BUILTINS = {
    "example1": lambda: _closed_form_model("example1", "EXAMPLE1"),
    "remark": lambda: _closed_form_model("remark", "REMARK"),
    "twostate-demo": _twostate,
    "constant": _constant,
}


def builtin(name: str) -> dict:
    return BUILTINS[name]()


def family_for(spec: LoadedSpec, kernel: JointKernel, name: str | None) -> FunctionFamily:
    if name is None:
        return spec.plan.functions if spec.plan is not None else determining_family(kernel.s1)
    try:
        return spec.families[name]
    except KeyError:
        raise SpecError("families", f"unknown family {name!r}") from None
