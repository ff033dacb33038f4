"""Command-line front end: circuit simulation, gate checks, sorting reports,
resource counts and crystal validation.

All file and flag angles are degrees with a mandatory `deg` suffix; values
are converted to radians at the boundary.  Output is tab-separated text
with fixed decimal formatting so runs are byte-deterministic.

Exit codes: 0 success / check passed, 1 check failed, 2 input error.
"""

from __future__ import annotations

import argparse
import math
import sys
from typing import Optional, Sequence

import numpy as np

from . import circuits, elements, geometry
from .circuits import Circuit
from .elements import ElementSpec
from .hilbert import (
    POLS,
    ModeSpace,
    StateVector,
    UnitaryOp,
    as_phased_permutation,
    equal_up_to_global_phase,
)

GATES = ("cnot", "swap", "x", "x2", "x3", "z")
SORT_SIZES = (2, 4, 8, 16)


class ParseError(ValueError):
    """Input file rejected; message carries the offending line number."""


def _fail(path: str, lineno: int, message: str) -> ParseError:
    return ParseError(f"{path}:{lineno}: {message}")


def _parse_angle_deg(text: str, path: str, lineno: int) -> float:
    if not text.endswith("deg"):
        raise _fail(path, lineno, f"angle {text!r} must carry a 'deg' suffix")
    try:
        return float(text[:-3])
    except ValueError:
        raise _fail(path, lineno, f"bad angle value {text!r}") from None


def _parse_int(text: str, path: str, lineno: int, key: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise _fail(path, lineno, f"key {key} needs an integer, got {text!r}") from None


def _parse_pol(text: str, path: str, lineno: int) -> str:
    if text not in POLS:
        raise _fail(path, lineno, f"polarization must be H or V, got {text!r}")
    return text


def _split_kv(fields: Sequence[str], path: str, lineno: int) -> dict[str, str]:
    out: dict[str, str] = {}
    for f in fields:
        if "=" not in f:
            raise _fail(path, lineno, f"expected key=value, got {f!r}")
        key, _, value = f.partition("=")
        if key in out:
            raise _fail(path, lineno, f"duplicate key {key!r}")
        out[key] = value
    return out


# Per-kind stage grammar: required keys, optional keys with defaults.
_STAGE_KEYS: dict[str, tuple[tuple[str, ...], tuple[str, ...]]] = {
    "dove": (("alpha",), ("rail",)),
    "hwp": (("theta",), ("rail",)),
    "psdp": ((), ("alpha", "rail")),
    "spp": (("q",), ("rail",)),
    "slm": (("pol", "shift"), ("rail",)),
    "bs": (("rail", "rail2"), ()),
    "pbs": (("rail", "rail2"), ()),
    "mirror": ((), ("rail",)),
    "oamh": (("plus", "minus"), ("rail",)),
    "zpow": (("n", "N"), ("rail",)),
    "phase": (("phi",), ("rail", "pol")),
}


def _parse_stage(fields: Sequence[str], path: str, lineno: int) -> ElementSpec:
    if not fields:
        raise _fail(path, lineno, "stage line is missing the element name")
    kind, kv = fields[0], _split_kv(fields[1:], path, lineno)
    if kind not in _STAGE_KEYS:
        raise _fail(path, lineno, f"unknown element {kind!r}")
    required, optional = _STAGE_KEYS[kind]
    for key in required:
        if key not in kv:
            raise _fail(path, lineno, f"element {kind!r} needs key {key!r}")
    for key in kv:
        if key not in required and key not in optional:
            raise _fail(path, lineno, f"unknown key {key!r} for element {kind!r}")

    rail = _parse_int(kv.get("rail", "0"), path, lineno, "rail")
    if kind == "dove":
        return ElementSpec("dove", rail=rail, angle_deg=_parse_angle_deg(kv["alpha"], path, lineno))
    if kind == "hwp":
        return ElementSpec("hwp", rail=rail, angle_deg=_parse_angle_deg(kv["theta"], path, lineno))
    if kind == "psdp":
        angle = _parse_angle_deg(kv["alpha"], path, lineno) if "alpha" in kv else 0.0
        return ElementSpec("psdp", rail=rail, angle_deg=angle)
    if kind == "spp":
        return ElementSpec("spp", rail=rail, q=_parse_int(kv["q"], path, lineno, "q"))
    if kind == "slm":
        return ElementSpec(
            "slm",
            rail=rail,
            pol=_parse_pol(kv["pol"], path, lineno),
            shift=_parse_int(kv["shift"], path, lineno, "shift"),
        )
    if kind in ("bs", "pbs"):
        return ElementSpec(
            kind, rail=rail, rail_b=_parse_int(kv["rail2"], path, lineno, "rail2")
        )
    if kind == "mirror":
        return ElementSpec("mirror", rail=rail)
    if kind == "oamh":
        return ElementSpec(
            "oamh",
            rail=rail,
            ell_plus=_parse_int(kv["plus"], path, lineno, "plus"),
            ell_minus=_parse_int(kv["minus"], path, lineno, "minus"),
        )
    if kind == "zpow":
        return ElementSpec(
            "zpow",
            rail=rail,
            n=_parse_int(kv["n"], path, lineno, "n"),
            cycle=_parse_int(kv["N"], path, lineno, "N"),
        )
    pol = _parse_pol(kv["pol"], path, lineno) if "pol" in kv else ""
    return ElementSpec(
        "phase", rail=rail, pol=pol, angle_deg=_parse_angle_deg(kv["phi"], path, lineno)
    )


def parse_circuit(text: str, path: str = "<circuit>") -> Circuit:
    """Parse the circuit text format: header directives, then stage lines."""
    rails: Optional[int] = None
    window: Optional[int] = None
    active: set[tuple[str, int]] = set()
    stages: list[ElementSpec] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        directive = fields[0]
        if directive in ("rails", "window", "active") and stages:
            raise _fail(path, lineno, "header directives must precede stage lines")
        if directive == "rails":
            if len(fields) != 2 or rails is not None:
                raise _fail(path, lineno, "expected a single 'rails <count>' directive")
            rails = _parse_int(fields[1], path, lineno, "rails")
        elif directive == "window":
            if len(fields) != 2 or window is not None:
                raise _fail(path, lineno, "expected a single 'window <half-width>' directive")
            window = _parse_int(fields[1], path, lineno, "window")
        elif directive == "active":
            kv = _split_kv(fields[1:], path, lineno)
            extra = set(kv) - {"ell", "pol"}
            if extra or "ell" not in kv or "pol" not in kv:
                raise _fail(path, lineno, "active line needs exactly ell=<list> pol=<H|V>")
            pol = _parse_pol(kv["pol"], path, lineno)
            for part in kv["ell"].split(","):
                active.add((pol, _parse_int(part, path, lineno, "ell")))
        elif directive == "stage":
            if rails is None or window is None:
                raise _fail(path, lineno, "rails and window must be declared before stages")
            stages.append(_parse_stage(fields[1:], path, lineno))
        else:
            raise _fail(path, lineno, f"unknown directive {directive!r}")
    if rails is None or window is None:
        raise ParseError(f"{path}: missing 'rails' or 'window' header")
    try:
        return Circuit(
            rails, window, tuple(stages), frozenset(active) if active else None
        )
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def format_circuit(circuit: Circuit) -> str:
    """Render a circuit in the text format; parsing the result is lossless."""
    lines = [f"rails {circuit.rails}", f"window {circuit.window}"]
    if circuit.active:
        for pol in POLS:
            ells = sorted(ell for p, ell in circuit.active if p == pol)
            if ells:
                lines.append(f"active ell={','.join(str(e) for e in ells)} pol={pol}")
    for s in circuit.stages:
        if s.kind == "dove":
            lines.append(f"stage dove alpha={s.angle_deg!r}deg rail={s.rail}")
        elif s.kind == "hwp":
            lines.append(f"stage hwp theta={s.angle_deg!r}deg rail={s.rail}")
        elif s.kind == "psdp":
            lines.append(f"stage psdp alpha={s.angle_deg!r}deg rail={s.rail}")
        elif s.kind == "spp":
            lines.append(f"stage spp q={s.q} rail={s.rail}")
        elif s.kind == "slm":
            lines.append(f"stage slm pol={s.pol} shift={s.shift} rail={s.rail}")
        elif s.kind in ("bs", "pbs"):
            lines.append(f"stage {s.kind} rail={s.rail} rail2={s.rail_b}")
        elif s.kind == "mirror":
            lines.append(f"stage mirror rail={s.rail}")
        elif s.kind == "oamh":
            lines.append(f"stage oamh plus={s.ell_plus} minus={s.ell_minus} rail={s.rail}")
        elif s.kind == "zpow":
            lines.append(f"stage zpow n={s.n} N={s.cycle} rail={s.rail}")
        elif s.kind == "phase":
            pol = f" pol={s.pol}" if s.pol else ""
            lines.append(f"stage phase phi={s.angle_deg!r}deg rail={s.rail}{pol}")
        else:
            raise ValueError(f"unknown element kind {s.kind!r}")
    return "\n".join(lines) + "\n"


def parse_state(text: str, space: ModeSpace, path: str = "<state>") -> StateVector:
    """Parse amplitude lines onto a mode space; reject badly normalized input."""
    amps = np.zeros(space.dim, dtype=complex)
    seen: set[int] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if fields[0] != "amp":
            raise _fail(path, lineno, f"unknown directive {fields[0]!r}")
        kv = _split_kv(fields[1:], path, lineno)
        extra = set(kv) - {"rail", "pol", "ell", "re", "im"}
        if extra:
            raise _fail(path, lineno, f"unknown keys {sorted(extra)}")
        for key in ("rail", "pol", "ell", "re", "im"):
            if key not in kv:
                raise _fail(path, lineno, f"amp line needs key {key!r}")
        rail = _parse_int(kv["rail"], path, lineno, "rail")
        pol = _parse_pol(kv["pol"], path, lineno)
        ell = _parse_int(kv["ell"], path, lineno, "ell")
        try:
            re, im = float(kv["re"]), float(kv["im"])
        except ValueError:
            raise _fail(path, lineno, "re/im must be floats") from None
        try:
            idx = space.index(rail, pol, ell)
        except ValueError as exc:
            raise _fail(path, lineno, str(exc)) from exc
        if idx in seen:
            raise _fail(path, lineno, f"duplicate amplitude for mode ({rail}, {pol}, {ell})")
        seen.add(idx)
        amps[idx] = complex(re, im)
    norm = float(np.linalg.norm(amps))
    if abs(norm - 1.0) > 1e-6:
        raise ParseError(f"{path}: state norm {norm:.9f} is not 1 within 1e-6")
    return StateVector(space, amps, normalized=False)


def parse_material_db(text: str, path: str = "<materials>") -> dict[str, tuple[float, float, float]]:
    """Parse `material <name> no=<f> ne=<f> wavelength=<nm>` records."""
    records: dict[str, tuple[float, float, float]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if fields[0] != "material" or len(fields) < 2:
            raise _fail(path, lineno, "expected 'material <name> no=.. ne=.. wavelength=..'")
        name = fields[1]
        kv = _split_kv(fields[2:], path, lineno)
        extra = set(kv) - {"no", "ne", "wavelength"}
        if extra or "no" not in kv or "ne" not in kv:
            raise _fail(path, lineno, "material needs keys no=, ne= (and optional wavelength=)")
        try:
            n_o, n_e = float(kv["no"]), float(kv["ne"])
            wavelength = float(kv.get("wavelength", "589.3"))
        except ValueError:
            raise _fail(path, lineno, "material values must be floats") from None
        records[name] = (n_o, n_e, wavelength)
    return records


# --- commands ----------------------------------------------------------------


def _print(out, *cols) -> None:
    print("\t".join(str(c) for c in cols), file=out)


def cmd_simulate(circuit_path: str, state_path: str, out=None) -> int:
    out = out if out is not None else sys.stdout
    with open(circuit_path) as fh:
        circuit = parse_circuit(fh.read(), circuit_path)
    unitary = circuits.compile_circuit(circuit)
    with open(state_path) as fh:
        state = parse_state(fh.read(), circuit.space, state_path)
    final = unitary.matrix @ state.amps
    _print(out, "rail", "pol", "ell", "prob", "re", "im")
    for i, mode in enumerate(circuit.space.modes()):
        amp = final[i]
        _print(
            out,
            mode.rail,
            mode.pol,
            mode.ell,
            f"{abs(amp) ** 2:.12f}",
            f"{amp.real:.12f}",
            f"{amp.imag:.12f}",
        )
    return 0


def _fmt_phase(z: complex) -> str:
    return f"{z.real:+.9f}{z.imag:+.9f}j"


def _restricted_block(u: UnitaryOp, space: ModeSpace, modes) -> np.ndarray:
    idx = [space.index(*m) for m in modes]
    return u.matrix[np.ix_(idx, idx)]


def _check_permutation(
    block: np.ndarray,
    labels: list[str],
    expected: dict[int, int],
    out,
    require_unit_phases: bool = False,
) -> bool:
    try:
        op = UnitaryOp(block, check_tol=1e-9)
    except ValueError:
        _print(out, "error", "restricted block is not unitary (leakage)")
        return False
    mapping = as_phased_permutation(op, tol=1e-9)
    if mapping is None:
        _print(out, "error", "matrix is not a phased permutation")
        return False
    ok = True
    for col in range(len(labels)):
        row, phase = mapping[col]
        _print(out, "map", labels[col], "->", labels[row], "phase", _fmt_phase(phase))
        if row != expected[col]:
            ok = False
        if require_unit_phases and abs(phase - 1.0) > 1e-9:
            ok = False
    for col in range(len(labels)):
        _print(out, "expect", labels[col], "->", labels[expected[col]])
    return ok


_QUBIT_MODES = [(0, "H", 1), (0, "H", -1), (0, "V", 1), (0, "V", -1)]
_QUBIT_LABELS = ["H,+1", "H,-1", "V,+1", "V,-1"]


def _three_cnot_oracle() -> np.ndarray:
    """SWAP on two qubits from the CNOT / reversed-CNOT / CNOT product."""
    fwd = np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    )
    rev = np.array(
        [[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex
    )
    return fwd @ rev @ fwd


def cmd_gate_check(name: str, out=None) -> int:
    out = out if out is not None else sys.stdout
    if name not in GATES:
        raise ValueError(f"unknown gate {name!r}; choose from {', '.join(GATES)}")
    _print(out, "gate", name)

    if name == "z":
        space = ModeSpace(1, 4)
        n, cycle = 1, 4
        u = elements.z_power(n, cycle, 0, space)
        ok = True
        for ell in range(-space.window, space.window + 1):
            got = u.matrix[space.index(0, "H", ell), space.index(0, "H", ell)]
            want = np.exp(2j * math.pi * ell * n / cycle)
            _print(out, "map", f"ell={ell:+d}", "phase", _fmt_phase(got),
                   "expect", _fmt_phase(want))
            if abs(got - want) > 1e-12:
                ok = False
        off = u.matrix - np.diag(np.diag(u.matrix))
        if float(np.max(np.abs(off))) > 1e-12:
            _print(out, "error", "matrix is not diagonal")
            ok = False
    elif name == "cnot":
        circuit = circuits.cnot()
        u = circuits.compile_circuit(circuit)
        block = _restricted_block(u, circuit.space, _QUBIT_MODES)
        ok = _check_permutation(
            block, _QUBIT_LABELS, {0: 0, 1: 1, 2: 3, 3: 2}, out, require_unit_phases=True
        )
    elif name == "swap":
        circuit = circuits.swap()
        u = circuits.compile_circuit(circuit)
        block = _restricted_block(u, circuit.space, _QUBIT_MODES)
        ok = _check_permutation(block, _QUBIT_LABELS, {0: 0, 1: 2, 2: 1, 3: 3}, out)
        oracle = _three_cnot_oracle()
        ok = ok and equal_up_to_global_phase(
            UnitaryOp(block, check_tol=1e-9), UnitaryOp(oracle), tol=1e-9
        )
    else:
        k = {"x": 1, "x2": 2, "x3": 3}[name]
        circuit = circuits.pauli_x_power(k)
        u = circuits.compile_circuit(circuit)
        subspace = list(circuits.X_SUBSPACE)
        modes = [(0, "H", ell) for ell in subspace]
        labels = [f"{ell:+d}" for ell in subspace]
        expected = {
            i: subspace.index((((ell + 2) + k) % 4) - 2) for i, ell in enumerate(subspace)
        }
        block = _restricted_block(u, circuit.space, modes)
        ok = _check_permutation(block, labels, expected, out)

    _print(out, "result", "PASS" if ok else "FAIL")
    return 0 if ok else 1


def cmd_sort(kind: str, n: int, out=None) -> int:
    out = out if out is not None else sys.stdout
    if n not in SORT_SIZES:
        raise ValueError(f"sort size must be one of {SORT_SIZES}, got {n}")
    window = max(1, n - 1)
    if kind == "mz":
        circuit = circuits.mz_tree(n, window=window)
    elif kind == "pos":
        circuit = circuits.pos_tree(n, window=window)
    else:
        raise ValueError(f"unknown sorter kind {kind!r}; choose mz or pos")
    report = circuits.run_sort(circuit, range(n))
    _print(out, "ell", "rail", "pol", "prob")
    for ell, rail, pol, prob in report.rows():
        _print(out, ell, rail, pol, f"{prob:.12f}")
    return 0


def cmd_resources(kind: str, n: int, out=None) -> int:
    out = out if out is not None else sys.stdout
    if n not in SORT_SIZES:
        raise ValueError(f"sort size must be one of {SORT_SIZES}, got {n}")
    window = max(1, n - 1)
    if kind == "mz":
        circuit = circuits.mz_tree(n, window=window)
    elif kind == "pos":
        circuit = circuits.pos_tree(n, window=window)
    else:
        raise ValueError(f"unknown sorter kind {kind!r}; choose mz or pos")
    counts = circuits.resource_count(circuit)
    for label in sorted(counts):
        _print(out, label, counts[label])
    return 0


def cmd_crystal(
    material: Optional[str],
    n_o: Optional[float],
    n_e: Optional[float],
    d: float,
    beta_deg: Optional[str],
    material_db: Optional[str],
    out=None,
) -> int:
    out = out if out is not None else sys.stdout
    records = dict(geometry.MATERIALS)
    if material_db is not None:
        with open(material_db) as fh:
            records.update(parse_material_db(fh.read(), material_db))
    wavelength = 589.3
    if material is not None:
        if material not in records:
            raise ValueError(f"unknown material {material!r}")
        n_o, n_e, wavelength = records[material]
    elif n_o is None or n_e is None:
        raise ValueError("give a material name or both --no and --ne")
    if n_e > n_o:
        raise ValueError(f"n_e={n_e} exceeds n_o={n_o}: not a negative uniaxial crystal")

    beta_recommended = geometry.beta_zero_opd(n_o, n_e)
    if beta_deg is not None:
        if not beta_deg.endswith("deg"):
            raise ValueError(f"--beta {beta_deg!r} must carry a 'deg' suffix")
        beta = math.radians(float(beta_deg[:-3]))
    elif beta_recommended < math.pi / 2:
        beta = beta_recommended
    else:
        beta = math.pi / 4  # isotropic limit recommends grazing; report anything
    spec = geometry.CrystalSpec(
        n_o=n_o, n_e=n_e, d=d, beta=beta, wavelength=wavelength
    )
    report = geometry.validate_assembly(spec)

    def yn(flag: bool) -> str:
        return "yes" if flag else "no"

    _print(out, "material", material if material is not None else "custom")
    _print(out, "n_o", f"{n_o:.6f}")
    _print(out, "n_e", f"{n_e:.6f}")
    _print(out, "d_mm", f"{d:.6f}")
    _print(out, "beta_deg", f"{math.degrees(beta):.3f}")
    _print(out, "delta_deg", f"{math.degrees(report.delta):.3f}")
    _print(out, "beta_recommended_deg", f"{math.degrees(report.beta_recommended):.3f}")
    _print(out, "opd_mm", f"{report.opd_mm:.12e}")
    _print(out, "tir_margin", f"{geometry.tir_margin(spec):.12f}" if not report.degenerate else "nan")
    _print(out, "tir_ok", yn(report.tir_ok))
    _print(out, "zero_opd", yn(report.zero_opd))
    _print(out, "compensator_needed", yn(report.compensator_needed))
    _print(out, "degenerate", yn(report.degenerate))
    return 0


# --- argument wiring -----------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oamsim",
        description="Rail/polarization/OAM linear-optics simulator and crystal checker.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="apply a circuit file to a state file")
    p.add_argument("--circuit", required=True, help="circuit text file")
    p.add_argument("--state", required=True, help="state amplitude file")

    p = sub.add_parser("gate-check", help="verify a named gate construction")
    p.add_argument("--gate", required=True, choices=GATES)

    p = sub.add_parser("sort", help="routing table for a sorter tree")
    p.add_argument("--kind", required=True, choices=("mz", "pos"))
    p.add_argument("--n", required=True, type=int, help="modes to sort (power of two, <= 16)")

    p = sub.add_parser("resources", help="element counts for a sorter tree")
    p.add_argument("--kind", required=True, choices=("mz", "pos"))
    p.add_argument("--n", required=True, type=int, help="modes to sort (power of two, <= 16)")

    p = sub.add_parser("crystal", help="validate the selective-prism crystal geometry")
    p.add_argument("material", nargs="?", help="material name (built-in or from --material-db)")
    p.add_argument("--no", dest="n_o", type=float, help="ordinary refractive index")
    p.add_argument("--ne", dest="n_e", type=float, help="extraordinary refractive index")
    p.add_argument("--d", type=float, default=10.0, help="cross-section side in mm")
    p.add_argument("--beta", help="interface angle, e.g. 45deg (default: zero-OPD angle)")
    p.add_argument("--material-db", help="extra material records file")

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return cmd_simulate(args.circuit, args.state)
        if args.command == "gate-check":
            return cmd_gate_check(args.gate)
        if args.command == "sort":
            return cmd_sort(args.kind, args.n)
        if args.command == "resources":
            return cmd_resources(args.kind, args.n)
        if args.command == "crystal":
            return cmd_crystal(
                args.material, args.n_o, args.n_e, args.d, args.beta, args.material_db
            )
        raise ValueError(f"unknown command {args.command!r}")
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
