"""Command-line front end: ``photonsim {truth-table,sweep,run,verify}``.

Exit codes: 0 success, 1 verify failure, 2 usage or validation error,
3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time

import numpy as np

from . import analysis, circuit, gates, verify
from .detect import DetectorModel

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3

CSV_COLUMNS = [
    "scheme", "eta", "eta2", "kappa",
    "p_true_formula", "p_true_sim",
    "p_false_formula", "p_false_sim",
    "p_err_formula", "p_err_sim",
    "max_abs_dev",
]


def fmt(x: float) -> str:
    return f"{x:.12g}"


def _unit(text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0 <= x <= 1:
        raise argparse.ArgumentTypeError(f"{x} outside [0, 1]")
    return x


def parse_grid(text: str, steps: int | None) -> list[float]:
    """``"0.3"``, ``"0.3,0.6,0.9"`` or ``"lo:hi"`` (with ``steps`` points)."""
    if ":" in text:
        lo, hi = (_unit(x) for x in text.split(":", 1))
        n = 5 if steps is None else steps
        if n <= 0:
            return []
        return [float(x) for x in np.linspace(lo, hi, n)] if n > 1 else [lo]
    vals = [_unit(x) for x in text.split(",") if x.strip()]
    if steps == 0:
        return []
    return vals


def parse_input(text: str) -> tuple[complex, ...]:
    """Four amplitudes as ``re,im`` pairs: ``"re1,im1,re2,im2,..."`` or basis label."""
    label = text.strip().upper()
    if label in gates.QUBIT_BASIS:
        return gates.QubitPairAmplitudes.basis(label).alpha
    try:
        nums = [float(x) for x in text.replace(";", ",").split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad amplitude list {text!r}") from None
    if len(nums) != 8:
        raise argparse.ArgumentTypeError("--input needs 4 complex amplitudes as 8 numbers (re,im pairs) or a basis label")
    alpha = tuple(complex(nums[2 * i], nums[2 * i + 1]) for i in range(4))
    norm = math.sqrt(sum(abs(a) ** 2 for a in alpha))
    if norm == 0:
        raise argparse.ArgumentTypeError("input amplitudes are all zero")
    return tuple(a / norm for a in alpha)


# ---------------------------------------------------------------- truth-table

def truth_table(gate: str, d: DetectorModel, scheme: int = 1) -> list[dict]:
    """Rows: basis input, output amplitudes, heralding probability, fidelity.

    Amplitudes are read from the photon-complete branch of one fixed
    heralding pattern, so relative signs between rows are meaningful; the
    global phase is fixed by making the trace of the 4x4 map real positive.
    """
    runs = []
    for label in gates.QUBIT_BASIS:
        q = gates.QubitPairAmplitudes.basis(label)
        out = gates.run_cnot(q, d, scheme=scheme) if gate == "cnot" else gates.SCHEMES[scheme](q, d)
        runs.append((label, q, out))
    ref = None
    for _, _, out in runs:
        if out.p_accept > 0:
            ref = min(out.accepted())
            break
    matrix = np.zeros((4, 4), dtype=complex)
    for j, (label, q, out) in enumerate(runs):
        if ref is None or ref not in out.per_pattern:
            continue
        best = max(out.per_pattern[ref].state, key=lambda b: b[0] * (1 - gates.missing_photon_weight(b[1])))
        matrix[:, j] = gates.qubit_amplitudes(best[1], "8a", "8b")
    tr = np.trace(matrix)
    if abs(tr) > 1e-9:
        matrix *= abs(tr) / tr
    rows = []
    for j, (label, q, out) in enumerate(runs):
        fid = analysis.process_fidelity(out, gate, q) if out.p_accept > 0 else 0.0
        rows.append({"input": label, "output": matrix[:, j], "p_accept": out.p_accept, "fidelity": fid})
    return rows


def _amp_text(v: np.ndarray) -> str:
    parts = []
    for a, lab in zip(v, gates.QUBIT_BASIS):
        if abs(a) < 1e-12:
            continue
        if abs(a.imag) < 1e-12:
            coef = "" if abs(a.real - 1) < 1e-12 else "-" if abs(a.real + 1) < 1e-12 else f"{a.real:.6g}*"
        else:
            coef = f"({a.real:.6g}{a.imag:+.6g}j)*"
        parts.append(f"{coef}{lab}")
    return " + ".join(parts).replace("+ -", "- ") or "0"


def cmd_truth_table(args) -> int:
    d = DetectorModel(args.eta, args.eta2)
    rows = truth_table(args.gate, d, args.scheme)
    if all(r["p_accept"] == 0 for r in rows):
        print("warning: detectors never herald success at these settings", file=sys.stderr)
    if args.json:
        print(json.dumps([
            {"input": r["input"], "output": [[a.real, a.imag] for a in r["output"]], "p_accept": r["p_accept"], "fidelity": r["fidelity"]}
            for r in rows
        ], indent=2))
        return EXIT_OK
    print(f"gate={args.gate} scheme={args.scheme} eta={fmt(args.eta)} eta2={fmt(args.eta2)}")
    print(f"{'input':<6} {'output':<24} {'p_accept':>16} {'fidelity':>16}")
    for r in rows:
        print(f"{r['input']:<6} {_amp_text(r['output']):<24} {fmt(r['p_accept']):>16} {fmt(r['fidelity']):>16}")
    return EXIT_OK


# ---------------------------------------------------------------- sweep

def sweep_rows(scheme: int, etas, eta2s, inner_eta=None, inner_eta2=None) -> list[list[str]]:
    reports = analysis.compare_sweep(scheme, etas, eta2s, inner_eta=inner_eta, inner_eta2=inner_eta2)
    rows = []
    for r in reports:
        rows.append([
            str(scheme), fmt(r.eta), fmt(r.eta2), fmt(r.kappa),
            fmt(r.p_true), fmt(r.p_true_sim),
            fmt(r.p_false), fmt(r.p_false_sim),
            fmt(r.p_err), fmt(r.p_err_sim),
            fmt(r.max_abs_dev),
        ])
    return rows


def cmd_sweep(args) -> int:
    etas = parse_grid(args.eta, args.eta_steps)
    eta2s = parse_grid(args.eta2, args.eta2_steps)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    w.writerows(sweep_rows(args.scheme, etas, eta2s, args.inner_eta, args.inner_eta2))
    if args.out in (None, "-"):
        sys.stdout.write(buf.getvalue())
        return EXIT_OK
    try:
        with open(args.out, "w", newline="", encoding="ascii") as fh:
            fh.write(buf.getvalue())
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc.strerror}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


# ---------------------------------------------------------------- run

def cmd_run(args) -> int:
    try:
        spec = circuit.load(args.circuit)
    except FileNotFoundError:
        print(f"error: circuit file not found: {args.circuit}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: cannot read {args.circuit}: {exc.strerror}", file=sys.stderr)
        return EXIT_IO
    except circuit.CircuitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    d = None
    if args.eta is not None or args.eta2 is not None:
        d = DetectorModel(
            spec.detectors.get("eta", 1.0) if args.eta is None else args.eta,
            spec.detectors.get("eta2", 1.0) if args.eta2 is None else args.eta2,
        )
    alpha = args.input if spec.inputs else None
    if spec.inputs and alpha is None:
        print("error: --input is required for circuits with qubit inputs", file=sys.stderr)
        return EXIT_USAGE
    try:
        res = circuit.run_circuit(spec, alpha, d)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.json:
        print(json.dumps(res.to_dict(), indent=2))
        return EXIT_OK
    print(f"circuit {spec.name}")
    print(f"{'pattern':<52} {'probability':>16}  class")
    for r, p, c in res.patterns:
        if p < 1e-15:
            continue
        tag = f"accepted a={c.a_side.value} b={c.b_side.value}" if c.accepted else "rejected"
        print(f"{str(r):<52} {fmt(p):>16}  {tag}")
    print(f"p_accept {fmt(res.p_accept)}")
    print(f"p_false  {fmt(res.p_false)}")
    if res.fidelity is not None:
        print(f"fidelity {fmt(res.fidelity)}")
    print("heralded output:")
    for w, s in res.output.merge_identical():
        print(f"  {fmt(w)}  {s!r}")
    return EXIT_OK


# ---------------------------------------------------------------- verify

def cmd_verify(args) -> int:
    t0 = time.perf_counter()
    results = verify.run_checks(args.filter)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.ok]
    print(f"{len(results)} checks, {len(failed)} failed, {time.perf_counter() - t0:.1f}s")
    return EXIT_VERIFY if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="photonsim", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    tt = sub.add_parser("truth-table", help="basis-state table of the heralded gate")
    tt.add_argument("--gate", choices=["cz", "cnot"], default="cz")
    tt.add_argument("--scheme", type=int, choices=[1, 2, 3], default=1)
    tt.add_argument("--eta", type=_unit, default=1.0)
    tt.add_argument("--eta2", type=_unit, default=1.0)
    tt.add_argument("--json", action="store_true")
    tt.set_defaults(func=cmd_truth_table)

    sw = sub.add_parser("sweep", help="simulated vs closed-form rates as CSV")
    sw.add_argument("--scheme", type=int, choices=[1, 2, 3], default=1)
    sw.add_argument("--eta", default="0.3,0.6,0.9,1.0", help="value, comma list or lo:hi")
    sw.add_argument("--eta-steps", type=int, default=None)
    sw.add_argument("--eta2", default="0,0.5,1", help="value, comma list or lo:hi")
    sw.add_argument("--eta2-steps", type=int, default=None)
    sw.add_argument("--inner-eta", type=_unit, default=None)
    sw.add_argument("--inner-eta2", type=_unit, default=None)
    sw.add_argument("--out", default=None)
    sw.set_defaults(func=cmd_sweep)

    rn = sub.add_parser("run", help="run a circuit file")
    rn.add_argument("--circuit", required=True, help="path, or a shipped name such as scheme1")
    rn.add_argument("--input", type=parse_input, default=None)
    rn.add_argument("--eta", type=_unit, default=None)
    rn.add_argument("--eta2", type=_unit, default=None)
    rn.add_argument("--json", action="store_true")
    rn.set_defaults(func=cmd_run)

    vf = sub.add_parser("verify", help="run the invariant suite")
    vf.add_argument("--filter", default=None)
    vf.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except argparse.ArgumentTypeError as exc:
        ap.error(str(exc))


if __name__ == "__main__":
    sys.exit(main())
