import copy
import json

import pytest

from photonsim import circuit, gates
from photonsim.circuit import CircuitError, parse, run_circuit
from photonsim.detect import DetectorModel

DOCS = circuit.shipped_documents()


@pytest.mark.parametrize("name", sorted(DOCS))
def test_shipped_files_match_generator(name):
    assert circuit.load(name) == parse(DOCS[name])


@pytest.mark.parametrize("name", sorted(DOCS))
def test_json_round_trip(name):
    spec = parse(DOCS[name])
    assert parse(json.loads(spec.dumps())) == spec


def test_result_json_round_trips_through_parser():
    res = run_circuit(circuit.load("scheme1"), gates.QubitPairAmplitudes.basis("HH").alpha)
    doc = json.loads(json.dumps(res.to_dict()))
    assert parse(doc["circuit"]) == res.spec


def test_scheme1_file_matches_library():
    for label in gates.QUBIT_BASIS:
        alpha = gates.QubitPairAmplitudes.basis(label).alpha
        res = run_circuit(circuit.load("scheme1"), alpha)
        lib = gates.run_scheme1(gates.QubitPairAmplitudes(alpha))
        assert res.p_accept == pytest.approx(lib.p_accept, abs=1e-12)
        assert res.fidelity == pytest.approx(1, abs=1e-10)


@pytest.mark.parametrize("name, p", [("scheme2", 0.25), ("scheme3", 0.25), ("cnot", 0.0625)])
def test_other_shipped_circuits(name, p):
    res = run_circuit(circuit.load(name), (0.5, 0.5, 0.5, 0.5))
    assert res.p_accept == pytest.approx(p, abs=1e-12)
    assert res.fidelity == pytest.approx(1, abs=1e-10)


def test_lossy_circuit():
    res = run_circuit(circuit.load("scheme1_lossy"), (0.5, 0.5, 0.5, 0.5))
    clean = run_circuit(circuit.load("scheme1"), (0.5, 0.5, 0.5, 0.5))
    # an empty control side heralds as often as a full one
    assert res.p_accept == pytest.approx(clean.p_accept, abs=1e-12)
    assert res.fidelity == pytest.approx(0.9, abs=1e-10)
    kept = gates.postselect_final(res.output)
    target = gates.ideal_output(gates.QubitPairAmplitudes((0.5, 0.5, 0.5, 0.5)))
    for w, s in kept:
        assert abs(gates.inner_product(target, s)) ** 2 == pytest.approx(1, abs=1e-10)


def test_detector_override():
    res = run_circuit(circuit.load("scheme1"), (0.5, 0.5, 0.5, 0.5), DetectorModel(0.5, 1.0))
    assert res.p_accept * res.fidelity == pytest.approx(0.5**4 / 16, abs=1e-12)
    assert res.p_false == pytest.approx(res.p_accept - 0.5**4 / 16, abs=1e-12)


def _broken(mutate):
    doc = copy.deepcopy(DOCS["scheme1"])
    mutate(doc)
    with pytest.raises(CircuitError) as info:
        parse(doc)
    return info.value.path


def test_undeclared_mode_reports_path():
    def m(doc):
        doc["elements"][3]["modes"][1] = "9z"
    assert _broken(m) == "elements[3].modes[1]"


def test_missing_field_reports_path():
    assert _broken(lambda d: d.pop("detectors")) == "detectors"


def test_bad_eta_reports_path():
    def m(doc):
        doc["detectors"]["eta"] = 1.5
    assert _broken(m) == "detectors.eta"


def test_unknown_element_type():
    def m(doc):
        doc["elements"][0]["type"] = "mirror"
    assert _broken(m).startswith("elements[0]")


def test_not_json():
    with pytest.raises(CircuitError):
        parse("{not json")


def test_load_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        circuit.load(tmp_path / "nope.circuit")
