"""Circuit description files and a generic heralded-circuit runner.

A circuit file is a JSON document (extension ``.circuit``). Lists are
executed in order. Angles are in degrees. A minimal layout::

    {
      "name": "scheme1",
      "inputs": ["1a", "1b"],
      "sources": [{"kind": "singlet", "modes": ["3a", "3b"]}, ...],
      "heralded_sources": [{"circuit": {...}, "relabel": {"i.8a": "4a"}}],
      "elements": [{"type": "wave_plate", "modes": ["3a"], "params": {"angle_deg": 45}}, ...],
      "detectors": {"channels": ["6a", "7a", "6b", "7b"], "eta": 1.0, "eta2": 1.0},
      "sides": [{"name": "a", "port6": "6a", "port7": "7a", "target": "5a", "output": "8a"}, ...],
      "accept_rule": "scheme1_16patterns",
      "feed_forward": "derived",
      "post_elements": [],
      "outputs": ["8a", "8b"],
      "ideal": "cz"
    }

A heralded source is a nested circuit without qubit inputs; its accepted,
renormalized output (after ``relabel``) is added to the initial state.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

from . import gates
from .detect import (
    AcceptClass,
    DetectorModel,
    ReportedPattern,
    Side,
    SideClass,
    classify_side,
    measure_projection,
    project,
)
from .elements import apply, beam_splitter, pbs, phase_modulator, rotator, spatial_loss, wave_plate
from .fock import Ensemble, H, ModeId, PureState, V, basis_state, ensemble_tensor, inner_product, relabel, tensor, vacuum

SOURCE_KINDS = {"singlet": 2, "phi_minus": 2, "single_photon_H": 1, "single_photon_V": 1, "vacuum": 1}
ELEMENT_TYPES = {"wave_plate", "rotator", "pbs", "beam_splitter", "phase_modulator", "loss"}
SHIPPED = ("scheme1", "scheme2", "scheme3", "scheme1_lossy", "cnot")


class CircuitError(ValueError):
    """Schema or reference error, carrying the JSON path of the bad field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class CircuitSpec:
    name: str
    inputs: list[str]
    sources: list[dict]
    elements: list[dict]
    detectors: dict
    sides: list[dict]
    accept_rule: Any = "scheme1_16patterns"
    feed_forward: Any = "derived"
    outputs: list[str] = field(default_factory=lambda: ["8a", "8b"])
    heralded_sources: list[dict] = field(default_factory=list)
    post_elements: list[dict] = field(default_factory=list)
    ideal: str | None = None

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "inputs": list(self.inputs),
            "sources": copy.deepcopy(self.sources),
            "heralded_sources": [
                {"circuit": h["circuit"].to_dict(), "relabel": dict(h["relabel"])} for h in self.heralded_sources
            ],
            "elements": copy.deepcopy(self.elements),
            "detectors": copy.deepcopy(self.detectors),
            "sides": copy.deepcopy(self.sides),
            "accept_rule": copy.deepcopy(self.accept_rule),
            "feed_forward": copy.deepcopy(self.feed_forward),
            "post_elements": copy.deepcopy(self.post_elements),
            "outputs": list(self.outputs),
            "ideal": self.ideal,
        }
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def __eq__(self, other):
        return isinstance(other, CircuitSpec) and self.to_dict() == other.to_dict()


# ---------------------------------------------------------------- parsing

def _req(d: dict, key: str, path: str, kind):
    if not isinstance(d, dict):
        raise CircuitError(path, "expected an object")
    if key not in d:
        raise CircuitError(f"{path}.{key}" if path else key, "missing required field")
    v = d[key]
    if not isinstance(v, kind):
        raise CircuitError(f"{path}.{key}" if path else key, f"expected {_kind_name(kind)}")
    return v


def _kind_name(kind) -> str:
    if isinstance(kind, tuple):
        return " or ".join(k.__name__ for k in kind)
    return kind.__name__


def _num(v, path: str, lo=None, hi=None) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise CircuitError(path, "expected a number")
    if (lo is not None and v < lo) or (hi is not None and v > hi):
        raise CircuitError(path, f"value {v} outside [{lo}, {hi}]")
    return float(v)


def _labels(v, path: str, n: int | None = None) -> list[str]:
    if not isinstance(v, list) or not all(isinstance(x, str) and x for x in v):
        raise CircuitError(path, "expected a list of path labels")
    if n is not None and len(v) != n:
        raise CircuitError(path, f"expected {n} path labels, got {len(v)}")
    return list(v)


def parse(doc: dict | str, path: str = "") -> CircuitSpec:
    """Validate a circuit document and return a spec (raises CircuitError)."""
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise CircuitError(path or "$", f"invalid JSON: {exc.msg} at line {exc.lineno}") from None
    if not isinstance(doc, dict):
        raise CircuitError(path or "$", "expected an object")
    p = (lambda k: f"{path}.{k}" if path else k)
    name = doc.get("name", "circuit")
    inputs = _labels(doc.get("inputs", []), p("inputs"))
    sources = _req(doc, "sources", path, list)
    for i, src in enumerate(sources):
        sp = p(f"sources[{i}]")
        kind = _req(src, "kind", sp, str)
        if kind not in SOURCE_KINDS:
            raise CircuitError(f"{sp}.kind", f"unknown source kind {kind!r}")
        _labels(_req(src, "modes", sp, list), f"{sp}.modes", SOURCE_KINDS[kind])
    heralded = []
    for i, h in enumerate(doc.get("heralded_sources", []) or []):
        hp = p(f"heralded_sources[{i}]")
        inner = parse(_req(h, "circuit", hp, dict), f"{hp}.circuit")
        if inner.inputs:
            raise CircuitError(f"{hp}.circuit.inputs", "heralded sources take no qubit inputs")
        rl = h.get("relabel", {})
        if not isinstance(rl, dict) or not all(isinstance(k, str) and isinstance(v, str) for k, v in rl.items()):
            raise CircuitError(f"{hp}.relabel", "expected a mapping of path labels")
        heralded.append({"circuit": inner, "relabel": dict(rl)})
    elements = _req(doc, "elements", path, list)
    post = doc.get("post_elements", []) or []
    for key, lst in (("elements", elements), ("post_elements", post)):
        for i, el in enumerate(lst):
            _check_element(el, p(f"{key}[{i}]"))
    det = _req(doc, "detectors", path, dict)
    _labels(_req(det, "channels", p("detectors"), list), p("detectors.channels"))
    _num(det.get("eta", 1.0), p("detectors.eta"), 0, 1)
    _num(det.get("eta2", 1.0), p("detectors.eta2"), 0, 1)
    sides = _req(doc, "sides", path, list)
    if len(sides) != 2:
        raise CircuitError(p("sides"), "expected two sides")
    for i, s in enumerate(sides):
        for k in ("name", "port6", "port7", "target", "output"):
            _req(s, k, p(f"sides[{i}]"), str)
    rule = doc.get("accept_rule", "scheme1_16patterns")
    if isinstance(rule, str):
        if rule != "scheme1_16patterns":
            raise CircuitError(p("accept_rule"), f"unknown rule {rule!r}")
    elif isinstance(rule, dict):
        pats = _req(rule, "patterns", p("accept_rule"), list)
        for i, pat in enumerate(pats):
            pp = p(f"accept_rule.patterns[{i}]")
            if not isinstance(pat, dict):
                raise CircuitError(pp, "expected a mapping of channel to count")
            for k, v in pat.items():
                try:
                    ModeId.parse(k)
                except ValueError as exc:
                    raise CircuitError(f"{pp}.{k}", str(exc)) from None
                if not isinstance(v, int) or v < 0:
                    raise CircuitError(f"{pp}.{k}", "expected a non-negative integer")
    else:
        raise CircuitError(p("accept_rule"), "expected a rule name or {'patterns': [...]}")
    ff = doc.get("feed_forward", "derived")
    if isinstance(ff, str):
        if ff != "derived":
            raise CircuitError(p("feed_forward"), f"unknown table {ff!r}")
    elif isinstance(ff, dict):
        for cls in ("DifferentPorts", "SamePort6", "SamePort7"):
            v = _req(ff, cls, p("feed_forward"), list)
            if len(v) != 2:
                raise CircuitError(p(f"feed_forward.{cls}"), "expected [phase_h_deg, phase_v_deg]")
            for j, x in enumerate(v):
                _num(x, p(f"feed_forward.{cls}[{j}]"))
    else:
        raise CircuitError(p("feed_forward"), "expected 'derived' or a phase table")
    outputs = _labels(doc.get("outputs", ["8a", "8b"]), p("outputs"))
    ideal = doc.get("ideal")
    if ideal is not None and ideal not in gates.IDEAL_MAPS:
        raise CircuitError(p("ideal"), f"unknown ideal map {ideal!r}")
    spec = CircuitSpec(
        name=name,
        inputs=inputs,
        sources=sources,
        elements=elements,
        detectors=det,
        sides=sides,
        accept_rule=rule,
        feed_forward=ff,
        outputs=outputs,
        heralded_sources=heralded,
        post_elements=post,
        ideal=ideal,
    )
    _check_references(spec, path)
    return spec


def _check_element(el: dict, path: str) -> None:
    t = _req(el, "type", path, str)
    if t not in ELEMENT_TYPES:
        raise CircuitError(f"{path}.type", f"unknown element type {t!r}")
    modes = _req(el, "modes", path, list)
    params = el.get("params", {})
    if not isinstance(params, dict):
        raise CircuitError(f"{path}.params", "expected an object")
    if t in ("wave_plate", "rotator"):
        _labels(modes, f"{path}.modes", 1)
        _num(_req(params, "angle_deg", f"{path}.params", (int, float)), f"{path}.params.angle_deg")
    elif t in ("pbs", "beam_splitter"):
        _labels(modes, f"{path}.modes", 4)
    elif t == "phase_modulator":
        _labels(modes, f"{path}.modes")
        if len(modes) not in (1, 2):
            raise CircuitError(f"{path}.modes", "expected [path] or [path, output_path]")
        for k in ("phase_h_deg", "phase_v_deg"):
            _num(params.get(k, 0.0), f"{path}.params.{k}")
    elif t == "loss":
        _labels(modes, f"{path}.modes", 1)
        _num(_req(params, "transmittance", f"{path}.params", (int, float)), f"{path}.params.transmittance", 0, 1)


def _check_references(spec: CircuitSpec, path: str) -> None:
    p = (lambda k: f"{path}.{k}" if path else k)
    live: set[str] = set()

    def declare(label: str, where: str):
        if label in live:
            raise CircuitError(where, f"path {label!r} declared twice")
        live.add(label)

    def use(label: str, where: str):
        if label not in live:
            raise CircuitError(where, f"undeclared path {label!r}")

    for i, lab in enumerate(spec.inputs):
        declare(lab, p(f"inputs[{i}]"))
    for i, src in enumerate(spec.sources):
        for j, lab in enumerate(src["modes"]):
            declare(lab, p(f"sources[{i}].modes[{j}]"))
    for i, h in enumerate(spec.heralded_sources):
        inner = h["circuit"]
        produced = set(_spectators(inner)) | set(inner.outputs)
        for k, lab in enumerate(sorted(produced)):
            declare(h["relabel"].get(lab, lab), p(f"heralded_sources[{i}]"))
        for src in h["relabel"]:
            if src not in produced:
                raise CircuitError(p(f"heralded_sources[{i}].relabel.{src}"), f"inner circuit has no output path {src!r}")

    def run_elements(lst, key):
        for i, el in enumerate(lst):
            ep = p(f"{key}[{i}].modes")
            m = el["modes"]
            t = el["type"]
            if t in ("pbs", "beam_splitter"):
                use(m[0], f"{ep}[0]")
                use(m[1], f"{ep}[1]")
                live.discard(m[0])
                live.discard(m[1])
                declare(m[2], f"{ep}[2]")
                declare(m[3], f"{ep}[3]")
            elif t == "phase_modulator" and len(m) == 2:
                use(m[0], f"{ep}[0]")
                live.discard(m[0])
                declare(m[1], f"{ep}[1]")
            else:
                use(m[0], f"{ep}[0]")

    run_elements(spec.elements, "elements")
    for i, ch in enumerate(spec.detectors["channels"]):
        use(ch, p(f"detectors.channels[{i}]"))
    for i, s in enumerate(spec.sides):
        for k in ("port6", "port7"):
            if s[k] not in spec.detectors["channels"]:
                raise CircuitError(p(f"sides[{i}].{k}"), f"path {s[k]!r} has no detector")
    for ch in spec.detectors["channels"]:
        live.discard(ch)
    for i, s in enumerate(spec.sides):
        use(s["target"], p(f"sides[{i}].target"))
        live.discard(s["target"])
        declare(s["output"], p(f"sides[{i}].output"))
    run_elements(spec.post_elements, "post_elements")
    for i, lab in enumerate(spec.outputs):
        use(lab, p(f"outputs[{i}]"))


def _spectators(spec: CircuitSpec) -> list[str]:
    """Paths that survive a circuit run besides its declared outputs."""
    live = set(spec.inputs)
    for src in spec.sources:
        live |= set(src["modes"])
    for h in spec.heralded_sources:
        inner = h["circuit"]
        for lab in set(_spectators(inner)) | set(inner.outputs):
            live.add(h["relabel"].get(lab, lab))
    for el in spec.elements + spec.post_elements:
        m = el["modes"]
        if el["type"] in ("pbs", "beam_splitter"):
            live -= {m[0], m[1]}
            live |= {m[2], m[3]}
        elif el["type"] == "phase_modulator" and len(m) == 2:
            live.discard(m[0])
            live.add(m[1])
    live -= set(spec.detectors["channels"])
    for s in spec.sides:
        live.discard(s["target"])
        live.add(s["output"])
    return sorted(live - set(spec.outputs))


def load(path: str | Path) -> CircuitSpec:
    """Load a circuit file; bare shipped names (``scheme1``) also resolve."""
    p = Path(path)
    if not p.exists():
        name = p.name.removesuffix(".circuit")
        if name in SHIPPED and p.parent == Path("."):
            text = resources.files("photonsim").joinpath("circuits", f"{name}.circuit").read_text()
            return parse(text)
        raise FileNotFoundError(str(path))
    return parse(p.read_text())


# ---------------------------------------------------------------- running

def _source_state(src: dict) -> PureState:
    kind, m = src["kind"], src["modes"]
    if kind == "singlet":
        return gates.singlet(*m)
    if kind == "phi_minus":
        return gates.phi_minus(*m)
    if kind == "single_photon_H":
        return basis_state({H(m[0]): 1})
    if kind == "single_photon_V":
        return basis_state({V(m[0]): 1})
    return vacuum()


def _apply_element(el: dict, ens: Ensemble) -> Ensemble:
    t, m, prm = el["type"], el["modes"], el.get("params", {})
    if t == "loss":
        return spatial_loss(m[0], float(prm["transmittance"]), ens)
    if t == "wave_plate":
        e = wave_plate(m[0], math.radians(prm["angle_deg"]))
    elif t == "rotator":
        e = rotator(m[0], math.radians(prm["angle_deg"]))
    elif t == "pbs":
        e = pbs(*m)
    elif t == "beam_splitter":
        e = beam_splitter(*m)
    else:
        e = phase_modulator(
            m[0], math.radians(prm.get("phase_h_deg", 0.0)), math.radians(prm.get("phase_v_deg", 0.0)),
            out=m[1] if len(m) == 2 else None,
        )
    return ens.map(lambda s: apply(e, s))


def _table(spec: CircuitSpec) -> dict[SideClass, tuple[float, float]]:
    if spec.feed_forward == "derived":
        return gates.default_table()
    return {SideClass(k): (math.radians(v[0]), math.radians(v[1])) for k, v in spec.feed_forward.items()}


@dataclass
class CircuitResult:
    spec: CircuitSpec
    input: tuple[complex, ...] | None
    patterns: list[tuple[ReportedPattern, float, AcceptClass]]
    p_accept: float
    p_false: float
    output: Ensemble
    fidelity: float | None

    def to_dict(self) -> dict:
        return {
            "circuit": self.spec.to_dict(),
            "input": None if self.input is None else [[a.real, a.imag] for a in self.input],
            "p_accept": self.p_accept,
            "p_false": self.p_false,
            "fidelity": self.fidelity,
            "patterns": [
                {
                    "pattern": {str(m): n for m, n in r.counts},
                    "probability": p,
                    "accepted": c.accepted,
                    "a_side": c.a_side.value,
                    "b_side": c.b_side.value,
                }
                for r, p, c in self.patterns
            ],
            "output": ensemble_to_json(self.output),
        }


def ensemble_to_json(e: Ensemble) -> list[dict]:
    return [
        {
            "weight": w,
            "terms": [
                {"ket": {str(m): n for m, n in basis}, "re": a.real, "im": a.imag} for basis, a in sorted(s.terms.items())
            ],
        }
        for w, s in e
    ]


def run_circuit(spec: CircuitSpec, alpha: Sequence[complex] | None = None, d: DetectorModel | None = None) -> CircuitResult:
    """Run a circuit on qubit amplitudes (order VV, VH, HV, HH)."""
    if spec.inputs and alpha is None:
        raise ValueError(f"circuit {spec.name!r} needs input amplitudes")
    if d is None:
        d = DetectorModel(spec.detectors.get("eta", 1.0), spec.detectors.get("eta2", 1.0))
    state = vacuum()
    in_state = None
    if spec.inputs:
        q = gates.QubitPairAmplitudes(tuple(alpha))
        in_state = q.state(*spec.inputs)
        state = in_state
    for src in spec.sources:
        state = tensor(state, _source_state(src))
    ens = Ensemble.pure(state)
    for h in spec.heralded_sources:
        inner = run_circuit(h["circuit"])
        if inner.p_accept == 0:
            raise ValueError(f"heralded source {h['circuit'].name!r} never succeeds")
        mapping = {}
        for lab_in, lab_out in h["relabel"].items():
            mapping[H(lab_in)] = H(lab_out)
            mapping[V(lab_in)] = V(lab_out)
        ens = ensemble_tensor(ens, gates.merge_equivalent(inner.output.map(lambda s: relabel(s, mapping))))
    for el in spec.elements:
        ens = _apply_element(el, ens)
    sides = [Side(s["name"], s["port6"], s["port7"]) for s in spec.sides]
    channels = [pol(c) for c in spec.detectors["channels"] for pol in (H, V)]
    table = _table(spec)
    if isinstance(spec.accept_rule, dict):
        allowed = {ReportedPattern.of({ModeId.parse(k): v for k, v in pat.items()}) for pat in spec.accept_rule["patterns"]}
    else:
        allowed = None

    def accept_class(r: ReportedPattern) -> AcceptClass:
        ca, cb = classify_side(r, sides[0]), classify_side(r, sides[1])
        ok = ca is not SideClass.NA and cb is not SideClass.NA
        if allowed is not None:
            ok = r in allowed and ok
        return AcceptClass(ok, ca if ok else SideClass.NA, cb if ok else SideClass.NA)

    patterns = []
    accepted = []
    p_accept = 0.0
    for r, prob, cond in measure_projection(project(ens, channels), d):
        cls = accept_class(r)
        patterns.append((r, prob, cls))
        if not cls.accepted:
            continue
        p_accept += prob
        for side, c in zip(spec.sides, (cls.a_side, cls.b_side)):
            ph, pv = table[c]
            pm = phase_modulator(side["target"], ph, pv, out=side["output"])
            cond = cond.map(lambda s, pm=pm: apply(pm, s))
        for el in spec.post_elements:
            cond = _apply_element(el, cond)
        accepted.extend((prob * w, s) for w, s in cond)
    output = Ensemble(tuple((w / p_accept, s) for w, s in accepted)) if p_accept > 0 else Ensemble(())
    p_false = sum(w * gates.missing_photon_weight(s, spec.outputs) for w, s in accepted)
    fidelity = None
    if spec.ideal and in_state is not None and p_accept > 0:
        target = gates.apply_logical(in_state, gates.IDEAL_MAPS[spec.ideal], tuple(spec.inputs), tuple(spec.outputs))
        fidelity = sum(w * abs(inner_product(target, s)) ** 2 for w, s in output) / target.norm2()
    return CircuitResult(spec, None if alpha is None else tuple(complex(a) for a in alpha), patterns, p_accept, p_false, output, fidelity)


# ---------------------------------------------------------------- standard layouts

def _el(t: str, modes: list[str], **params) -> dict:
    d = {"type": t, "modes": modes}
    if params:
        d["params"] = params
    return d


def scheme_circuit(level: int, prefix: str = "", eta: float = 1.0, eta2: float = 1.0, inner_eta=None, inner_eta2=None, inputs=True) -> dict:
    """Circuit document for scheme 1, 2 or 3 with path labels under ``prefix``."""
    p = prefix
    doc: dict = {"name": f"scheme{level}" if not p else f"{p}scheme{level}", "inputs": [p + "1a", p + "1b"] if inputs else []}
    if level == 1:
        doc["sources"] = [
            {"kind": "single_photon_H", "modes": [p + "2a"]},
            {"kind": "single_photon_H", "modes": [p + "2b"]},
            {"kind": "singlet", "modes": [p + "3a", p + "3b"]},
        ]
        resource = [
            _el("wave_plate", [p + "3a"], angle_deg=45),
            _el("wave_plate", [p + "2a"], angle_deg=45),
            _el("wave_plate", [p + "2b"], angle_deg=45),
            _el("pbs", [p + "2a", p + "3a", p + "4a", p + "5a"]),
            _el("pbs", [p + "2b", p + "3b", p + "4b", p + "5b"]),
        ]
    else:
        ip = p + "i."
        ie = eta if inner_eta is None else inner_eta
        ie2 = eta2 if inner_eta2 is None else inner_eta2
        inner = scheme_circuit(level - 1, ip, ie, ie2, ie, ie2, inputs=False)
        inner["sources"] = [
            {"kind": "phi_minus", "modes": [ip + "1a", p + "5a"]},
            {"kind": "phi_minus", "modes": [ip + "1b", p + "5b"]},
        ] + inner["sources"]
        doc["sources"] = []
        doc["heralded_sources"] = [{"circuit": inner, "relabel": {ip + "8a": p + "4a", ip + "8b": p + "4b"}}]
        resource = []
    doc["elements"] = resource + [
        _el("wave_plate", [p + "1a"], angle_deg=90),
        _el("wave_plate", [p + "1b"], angle_deg=90),
        _el("beam_splitter", [p + "1a", p + "4a", p + "6a", p + "7a"]),
        _el("beam_splitter", [p + "1b", p + "4b", p + "6b", p + "7b"]),
    ]
    doc["detectors"] = {"channels": [p + "6a", p + "7a", p + "6b", p + "7b"], "eta": eta, "eta2": eta2}
    doc["sides"] = [
        {"name": "a", "port6": p + "6a", "port7": p + "7a", "target": p + "5a", "output": p + "8a"},
        {"name": "b", "port6": p + "6b", "port7": p + "7b", "target": p + "5b", "output": p + "8b"},
    ]
    doc["accept_rule"] = "scheme1_16patterns"
    doc["feed_forward"] = "derived"
    doc["outputs"] = [p + "8a", p + "8b"]
    doc["ideal"] = "cz" if inputs else None
    return doc


def shipped_documents() -> dict[str, dict]:
    docs = {f"scheme{k}": scheme_circuit(k) for k in (1, 2, 3)}
    lossy = scheme_circuit(1)
    lossy["name"] = "scheme1_lossy"
    lossy["elements"] = [_el("loss", ["1a"], transmittance=0.9)] + lossy["elements"]
    docs["scheme1_lossy"] = lossy
    cnot = scheme_circuit(1)
    cnot["name"] = "cnot"
    cnot["elements"] = [_el("rotator", ["1b"], angle_deg=gates.CNOT_PRE_ANGLE)] + cnot["elements"]
    cnot["post_elements"] = [_el("rotator", ["8b"], angle_deg=gates.CNOT_POST_ANGLE)]
    cnot["ideal"] = "cnot"
    docs["cnot"] = cnot
    return docs
