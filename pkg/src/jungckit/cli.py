"""Batch front-end: parse an experiment config, run it, emit CSV + report.

Config files are strict YAML key/value trees (unknown keys are errors).
Each run writes ``trace.csv`` and ``report.txt`` into the output directory;
the report has one check per line prefixed PASS, FAIL or INFO, and the
process exits 0 only when no FAIL line was emitted (2 for usage/config
problems).  Numbers are serialized with shortest round-trip decimals, so
identical configs produce byte-identical CSVs.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from . import diagnostics, engine, stability, venter
from .aitken import DEFAULT_FLOOR_SCALE, accelerate_sequence
from .errors import (
    ConfigParseError,
    ConfigValidationError,
    IndexOutOfRangeError,
    JungckitError,
    NotConvergingError,
    SequenceTooShortError,
)
from .model import GatePolicy, IterationTrace, Operator, Schedule, make_operator_pair
from .scan import ScanSpec, run_scan

SCENARIOS = ("jungck", "venter", "aitken-only", "stability-scan")

IDENTITY_TOL = 1e-9
EQUIVALENCE_TOL = 1e-6
NONNEG_SLACK = 1e-12


# ---------------------------------------------------------------------------
# config parsing


def _require_mapping(node: Any, where: str) -> dict:
    if not isinstance(node, dict):
        raise ConfigValidationError(f"{where}: expected a key/value mapping, got {type(node).__name__}")
    return node

def _check_keys(node: dict, allowed: set, where: str) -> None:
    unknown = set(node) - allowed
    if unknown:
        raise ConfigValidationError(f"{where}: unknown key(s) {sorted(unknown)}")

def _get_number(node: dict, key: str, where: str, default=None, required=False):
    if key not in node:
        if required:
            raise ConfigValidationError(f"{where}: missing required key '{key}'")
        return default
    v = node[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigValidationError(f"{where}.{key}: expected a number, got {v!r}")
    return float(v)

def _get_int(node: dict, key: str, where: str, default=None, required=False):
    if key not in node:
        if required:
            raise ConfigValidationError(f"{where}: missing required key '{key}'")
        return default
    v = node[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigValidationError(f"{where}.{key}: expected an integer, got {v!r}")
    return v


def parse_operator(node: Any, where: str) -> Operator:
    node = _require_mapping(node, where)
    if "matrix" in node:
        _check_keys(node, {"matrix"}, where)
        try:
            return Operator.from_matrix(node["matrix"])
        except (JungckitError, ValueError, TypeError) as exc:
            raise ConfigValidationError(f"{where}.matrix: {exc}") from exc
    _check_keys(node, {"name", "dim", "value"}, where)
    name = node.get("name")
    dim = _get_int(node, "dim", where, required=True)
    if dim is None or dim < 1:
        raise ConfigValidationError(f"{where}.dim: must be >= 1")
    if name == "identity":
        return Operator.identity(dim)
    if name == "zero":
        return Operator.zero(dim)
    if name == "scale":
        value = _get_number(node, "value", where, required=True)
        return Operator.scaled_identity(value, dim)
    raise ConfigValidationError(f"{where}.name: unknown built-in {name!r} (identity, zero, scale)")


def parse_schedule(node: Any, where: str, clamp=(0.0, 1.0), enforce_clamp=True) -> Schedule:
    node = _require_mapping(node, where)
    _check_keys(node, {"form", "value", "k", "p", "values", "clamp"}, where)
    form = node.get("form")
    if "clamp" in node:
        c = node["clamp"]
        if not (isinstance(c, list) and len(c) == 2):
            raise ConfigValidationError(f"{where}.clamp: expected [lo, hi]")
        clamp = (float(c[0]), float(c[1]))
    lo, hi = clamp

    def check_range(v, label):
        if enforce_clamp and not (lo <= v <= hi):
            raise ConfigValidationError(f"{where}.{label}: value {v} outside clamp range [{lo}, {hi}]")

    try:
        if form == "constant":
            value = _get_number(node, "value", where, required=True)
            check_range(value, "value")
            return Schedule.constant(value, clamp=clamp)
        if form == "one-minus-inv":
            return Schedule.one_minus_inv(k=_get_int(node, "k", where, default=2), clamp=clamp)
        if form == "inv":
            return Schedule.inv(k=_get_int(node, "k", where, default=2), clamp=clamp)
        if form == "inv-pow":
            return Schedule.inv_pow(
                k=_get_int(node, "k", where, default=2),
                p=_get_number(node, "p", where, default=2.0),
                clamp=clamp,
            )
        if form == "list":
            values = node.get("values")
            if not isinstance(values, list) or not values:
                raise ConfigValidationError(f"{where}.values: expected a non-empty list")
            for i, v in enumerate(values):
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise ConfigValidationError(f"{where}.values[{i}]: expected a number")
                check_range(float(v), f"values[{i}]")
            return Schedule.from_values([float(v) for v in values], clamp=clamp)
    except ValueError as exc:
        raise ConfigValidationError(f"{where}: {exc}") from exc
    raise ConfigValidationError(f"{where}.form: unknown form {form!r}")


def parse_gate(node: Any, where: str) -> GatePolicy:
    node = _require_mapping(node, where)
    _check_keys(node, {"mode", "tau", "values"}, where)
    mode = node.get("mode")
    try:
        if mode == "always-on":
            return GatePolicy.always_on()
        if mode == "always-off":
            return GatePolicy.always_off()
        if mode == "threshold":
            return GatePolicy.threshold(_get_number(node, "tau", where, required=True))
        if mode == "list":
            values = node.get("values")
            if not isinstance(values, list) or not values:
                raise ConfigValidationError(f"{where}.values: expected a non-empty list")
            return GatePolicy.from_values(values)
    except ValueError as exc:
        raise ConfigValidationError(f"{where}: {exc}") from exc
    raise ConfigValidationError(f"{where}.mode: unknown mode {mode!r}")


@dataclass
class StabilityOptions:
    horizon: int = 200
    tail_start: int = 0
    tail_tol: float = 0.01
    positivity: bool = False


@dataclass
class JungckScenario:
    cfg: engine.JungckConfig
    stability: Optional[StabilityOptions]


@dataclass
class VenterScenario:
    cfg: venter.VenterConfig
    eps: float


@dataclass
class AitkenScenario:
    values: np.ndarray          # raw sequence, one row per term
    gate: GatePolicy
    floor_scale: float
    geometric_limit: Optional[np.ndarray]  # set when the sequence is synthetic


@dataclass
class ExperimentConfig:
    scenario: str
    output: Optional[str]
    jungck: Optional[JungckScenario] = None
    venter: Optional[VenterScenario] = None
    aitken: Optional[AitkenScenario] = None
    scan: Optional[ScanSpec] = None

    def active(self):
        block = {
            "jungck": self.jungck,
            "venter": self.venter,
            "aitken-only": self.aitken,
            "stability-scan": self.scan,
        }[self.scenario]
        if block is None:
            raise ConfigValidationError(f"scenario '{self.scenario}' has no matching config block")
        return block


def _parse_jungck(node: dict) -> JungckScenario:
    where = "jungck"
    _check_keys(node, {
        "s", "t", "a", "b", "gate_z", "gate_y", "z0", "steps", "solve_tol",
        "floor_scale", "power_mode", "nonneg_domain", "stability",
    }, where)
    for key in ("s", "t", "a", "b", "z0", "steps"):
        if key not in node:
            raise ConfigValidationError(f"{where}: missing required key '{key}'")
    s_op = parse_operator(node["s"], f"{where}.s")
    t_op = parse_operator(node["t"], f"{where}.t")
    a = parse_schedule(node["a"], f"{where}.a")
    b = parse_schedule(node["b"], f"{where}.b")
    gate_z = parse_gate(node["gate_z"], f"{where}.gate_z") if "gate_z" in node else GatePolicy.always_on()
    gate_y = parse_gate(node["gate_y"], f"{where}.gate_y") if "gate_y" in node else GatePolicy.always_on()
    steps = _get_int(node, "steps", where, required=True)
    solve_tol = _get_number(node, "solve_tol", where, default=1e-10)
    floor_scale = _get_number(node, "floor_scale", where, default=DEFAULT_FLOOR_SCALE)
    power_mode = node.get("power_mode")
    if power_mode is not None and power_mode not in engine.POWER_MODES:
        raise ConfigValidationError(f"{where}.power_mode: unknown mode {power_mode!r}")
    nonneg = node.get("nonneg_domain", False)
    if not isinstance(nonneg, bool):
        raise ConfigValidationError(f"{where}.nonneg_domain: expected true/false")

    stability_opts = None
    if "stability" in node:
        sub = _require_mapping(node["stability"], f"{where}.stability")
        _check_keys(sub, {"horizon", "tail_start", "tail_tol", "positivity"}, f"{where}.stability")
        positivity = sub.get("positivity", False)
        if not isinstance(positivity, bool):
            raise ConfigValidationError(f"{where}.stability.positivity: expected true/false")
        stability_opts = StabilityOptions(
            horizon=_get_int(sub, "horizon", f"{where}.stability", default=200),
            tail_start=_get_int(sub, "tail_start", f"{where}.stability", default=0),
            tail_tol=_get_number(sub, "tail_tol", f"{where}.stability", default=0.01),
            positivity=positivity,
        )

    try:
        pair = make_operator_pair(s_op, t_op, tol=solve_tol)
        cfg = engine.JungckConfig(
            pair=pair, a=a, b=b, gates_z=gate_z, gates_y=gate_y,
            z0=np.atleast_1d(np.asarray(node["z0"], dtype=float)),
            steps=steps, floor_scale=floor_scale, power_mode=power_mode,
            nonneg_domain=nonneg,
        )
    except (JungckitError, ValueError, TypeError) as exc:
        raise ConfigValidationError(f"{where}: {exc}") from exc
    return JungckScenario(cfg=cfg, stability=stability_opts)


def _parse_venter(node: dict) -> VenterScenario:
    where = "venter"
    _check_keys(node, {"alpha", "gamma", "omega", "sigma", "x0", "steps", "eps"}, where)
    for key in ("alpha", "x0", "steps"):
        if key not in node:
            raise ConfigValidationError(f"{where}: missing required key '{key}'")
    alpha = parse_schedule(node["alpha"], f"{where}.alpha")
    zero = Schedule.constant(0.0, clamp=(0.0, math.inf))
    gamma = parse_schedule(node["gamma"], f"{where}.gamma", clamp=(0.0, math.inf)) if "gamma" in node else zero
    omega = parse_schedule(node["omega"], f"{where}.omega", clamp=(0.0, math.inf)) if "omega" in node else zero
    sigma = _get_number(node, "sigma", where, default=0.0)
    x0 = _get_number(node, "x0", where, required=True)
    steps = _get_int(node, "steps", where, required=True)
    eps = _get_number(node, "eps", where, default=1e-3)
    if sigma < 0:
        raise ConfigValidationError(f"{where}.sigma: must be >= 0, got {sigma}")
    if x0 < 0:
        raise ConfigValidationError(f"{where}.x0: must be >= 0, got {x0}")
    try:
        cfg = venter.VenterConfig(alpha=alpha, gamma=gamma, omega=omega, sigma=sigma, x0=x0, steps=steps)
    except (JungckitError, ValueError) as exc:
        raise ConfigValidationError(f"{where}: {exc}") from exc
    return VenterScenario(cfg=cfg, eps=eps)


def _parse_aitken(node: dict) -> AitkenScenario:
    where = "aitken"
    _check_keys(node, {"sequence", "gate", "floor_scale"}, where)
    seq_node = _require_mapping(node.get("sequence"), f"{where}.sequence")
    kind = seq_node.get("kind")
    geometric_limit = None
    if kind == "geometric":
        _check_keys(seq_node, {"kind", "limit", "coeff", "ratio", "length"}, f"{where}.sequence")
        limit = np.atleast_1d(np.asarray(seq_node.get("limit", 0.0), dtype=float))
        coeff = np.atleast_1d(np.asarray(seq_node.get("coeff", 1.0), dtype=float))
        ratio = np.atleast_1d(np.asarray(seq_node.get("ratio", 0.5), dtype=float))
        length = _get_int(seq_node, "length", f"{where}.sequence", default=30)
        if length < 3:
            raise ConfigValidationError(f"{where}.sequence.length: need >= 3 terms")
        if np.any(np.abs(ratio) >= 1):
            raise ConfigValidationError(f"{where}.sequence.ratio: need |ratio| < 1")
        d = max(limit.size, coeff.size, ratio.size)
        limit, coeff, ratio = (np.broadcast_to(v, (d,)).astype(float) for v in (limit, coeff, ratio))
        values = np.array([limit + coeff * ratio ** n for n in range(length)])
        geometric_limit = limit
    elif kind == "values":
        _check_keys(seq_node, {"kind", "values"}, f"{where}.sequence")
        raw = seq_node.get("values")
        if not isinstance(raw, list) or len(raw) < 3:
            raise ConfigValidationError(f"{where}.sequence.values: need a list of >= 3 terms")
        values = np.atleast_2d(np.asarray(raw, dtype=float))
        if values.shape[0] < 3:
            values = values.T
    else:
        raise ConfigValidationError(f"{where}.sequence.kind: unknown kind {kind!r} (geometric, values)")
    gate = parse_gate(node["gate"], f"{where}.gate") if "gate" in node else GatePolicy.always_on()
    floor_scale = _get_number(node, "floor_scale", where, default=DEFAULT_FLOOR_SCALE)
    return AitkenScenario(values=values, gate=gate, floor_scale=floor_scale, geometric_limit=geometric_limit)


def _parse_scan(node: dict) -> ScanSpec:
    where = "scan"
    _check_keys(node, {"count", "dim", "steps", "horizon", "seed", "mu_range", "t_norm_range", "tail_tol"}, where)

    def pair_of(key, default):
        if key not in node:
            return default
        v = node[key]
        if not (isinstance(v, list) and len(v) == 2):
            raise ConfigValidationError(f"{where}.{key}: expected [lo, hi]")
        return (float(v[0]), float(v[1]))

    try:
        return ScanSpec(
            count=_get_int(node, "count", where, default=100),
            dim=_get_int(node, "dim", where, default=5),
            steps=_get_int(node, "steps", where, default=300),
            horizon=_get_int(node, "horizon", where, default=300),
            seed=_get_int(node, "seed", where, default=12345),
            mu_range=pair_of("mu_range", (0.8, 2.5)),
            t_norm_range=pair_of("t_norm_range", (0.05, 0.9)),
            tail_tol=_get_number(node, "tail_tol", where, default=0.01),
        )
    except ValueError as exc:
        raise ConfigValidationError(f"{where}: {exc}") from exc


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse and validate a config document; unknown keys are errors."""
    try:
        doc = yaml.safe_load(io.StringIO(text))
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f" (line {mark.line + 1}, column {mark.column + 1})" if mark else ""
        raise ConfigParseError(f"config is not valid YAML{loc}: {exc}") from exc
    doc = _require_mapping(doc, "config")
    _check_keys(doc, {"scenario", "output", "jungck", "venter", "aitken", "scan"}, "config")
    scenario = doc.get("scenario")
    if scenario not in SCENARIOS:
        raise ConfigValidationError(f"config.scenario: expected one of {SCENARIOS}, got {scenario!r}")
    output = doc.get("output")
    if output is not None and not isinstance(output, str):
        raise ConfigValidationError("config.output: expected a path string")

    cfg = ExperimentConfig(scenario=scenario, output=output)
    if "jungck" in doc:
        cfg.jungck = _parse_jungck(_require_mapping(doc["jungck"], "jungck"))
    if "venter" in doc:
        cfg.venter = _parse_venter(_require_mapping(doc["venter"], "venter"))
    if "aitken" in doc:
        cfg.aitken = _parse_aitken(_require_mapping(doc["aitken"], "aitken"))
    if "scan" in doc:
        cfg.scan = _parse_scan(_require_mapping(doc["scan"], "scan"))
    cfg.active()  # the chosen scenario must have its block
    return cfg


def parse_config(path: str | Path) -> ExperimentConfig:
    return parse_config_text(Path(path).read_text())


# ---------------------------------------------------------------------------
# serialization


def fmt(x) -> str:
    """Shortest decimal that round-trips the float exactly."""
    return repr(float(x))


def _vector_headers(prefix: str, dim: int) -> list[str]:
    return [f"{prefix}[{i}]" for i in range(dim)]


def write_jungck_csv(trace: IterationTrace, path: Path) -> None:
    d = trace.dim
    header = (
        ["n"]
        + _vector_headers("z", d) + _vector_headers("y", d)
        + _vector_headers("Sz", d) + _vector_headers("Sy", d)
        + _vector_headers("ASz", d) + _vector_headers("ASy", d)
        + _vector_headers("gate_z", d) + _vector_headers("gate_y", d)
        + ["identity_residual"]
    )
    residuals = engine.identity_residuals(trace)
    with path.open("w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for n in range(trace.n_raw):
            row = [str(n)]
            for arr in (trace.z, trace.y, trace.sz, trace.sy):
                row.extend(fmt(v) for v in arr[n])
            if n < trace.n_accel:
                for arr in (trace.asz, trace.asy):
                    row.extend(fmt(v) for v in arr[n])
                for arr in (trace.gates_z, trace.gates_y):
                    row.extend(str(int(v)) for v in arr[n])
            else:
                row.extend([""] * (4 * d))
            row.append(fmt(residuals[n]) if n < len(residuals) else "")
            writer.writerow(row)


def read_jungck_csv(path: Path) -> dict:
    """Round-trip helper: columns back to lists (None for empty cells)."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    out: dict = {name: [] for name in header}
    for row in body:
        for name, cell in zip(header, row):
            if cell == "":
                out[name].append(None)
            elif name == "n" or name.startswith("gate_"):
                out[name].append(int(cell))
            else:
                out[name].append(float(cell))
    return out


def write_venter_csv(trace: venter.VenterTrace, path: Path) -> None:
    header = ["n", "x", "k_hat", "alpha", "gamma", "omega",
              "sum_alpha_x", "sum_gamma_x", "sum_omega", "sum_x"]
    n_steps = trace.steps
    with path.open("w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for n in range(n_steps + 1):
            row = [str(n), fmt(trace.x[n])]
            if n < n_steps:
                row += [fmt(trace.k_hat[n]), fmt(trace.alpha_vals[n]), fmt(trace.gamma_vals[n]),
                        fmt(trace.omega_vals[n]), fmt(trace.sum_alpha_x[n]), fmt(trace.sum_gamma_x[n]),
                        fmt(trace.sum_omega[n])]
            else:
                row += [""] * 7
            row.append(fmt(trace.sum_x[n]))
            writer.writerow(row)


def write_aitken_csv(values: np.ndarray, accel: np.ndarray, gates: np.ndarray, path: Path) -> None:
    d = values.shape[1]
    header = ["n"] + _vector_headers("x", d) + _vector_headers("Ax", d) + _vector_headers("gate", d)
    with path.open("w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for n in range(values.shape[0]):
            row = [str(n)] + [fmt(v) for v in values[n]]
            if n < accel.shape[0]:
                row += [fmt(v) for v in accel[n]]
                row += [str(int(g)) for g in gates[n]]
            else:
                row += [""] * (2 * d)
            writer.writerow(row)


def write_scan_csv(result, path: Path) -> None:
    header = ["index", "certified", "predicted", "simulation_agrees", "monotone_ok", "final_ratio"]
    with path.open("w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for o in result.outcomes:
            writer.writerow([
                str(o.index),
                "+".join(o.certified) if o.certified else "none",
                o.predicted,
                "" if o.simulation_agrees is None else str(o.simulation_agrees).lower(),
                "" if o.monotone_ok is None else str(o.monotone_ok).lower(),
                "" if o.final_ratio is None else fmt(o.final_ratio),
            ])


# ---------------------------------------------------------------------------
# scenario runners


class Report:
    """Ordered PASS/FAIL/INFO lines; exit status is 0 iff no FAIL."""

    def __init__(self):
        self.lines: list[tuple[str, str]] = []

    def add(self, status: str, text: str) -> None:
        self.lines.append((status, text))

    def ok(self, passed: bool, text: str) -> None:
        self.add("PASS" if passed else "FAIL", text)

    @property
    def failed(self) -> bool:
        return any(status == "FAIL" for status, _ in self.lines)

    def render(self) -> str:
        return "".join(f"{status} {text}\n" for status, text in self.lines)


def _norm(v) -> float:
    return float(np.linalg.norm(v))


def _run_jungck(scn: JungckScenario, outdir: Path, report: Report) -> None:
    cfg = scn.cfg
    trace = engine.run(cfg)
    write_jungck_csv(trace, outdir / "trace.csv")
    pair = cfg.pair
    report.add("INFO", f"jungck run: dim={cfg.dim} steps={cfg.steps} rows={trace.n_raw}")
    if pair.norms_available:
        report.add("INFO", f"operator data: min_modulus(s)={pair.s_min_modulus:.6g} "
                           f"norm(s)={pair.s_norm:.6g} norm(t)={pair.t_norm:.6g}")
    if trace.diverged:
        report.add("INFO", f"run diverged and was truncated: {trace.failure}")

    if trace.n_raw >= 2:
        residuals = engine.identity_residuals(trace)
        rel = residuals / (1.0 + np.linalg.norm(trace.sz[1:], axis=1))
        worst = float(np.max(rel))
        report.ok(worst <= IDENTITY_TOL, f"identity-residual: max relative {worst:.3e} (tol {IDENTITY_TOL:g})")
    else:
        report.add("INFO", "identity-residual: skipped, trace too short")

    if scn.stability is not None and not pair.norms_available:
        report.add("INFO", "certificates skipped: callback operators carry no norm data")
    if scn.stability is not None and pair.norms_available:
        opts = scn.stability
        horizon = max(opts.horizon, cfg.steps)
        try:
            sreport = stability.certify(cfg, horizon=horizon,
                                        tail_start=opts.tail_start, tail_tol=opts.tail_tol)
        except IndexOutOfRangeError:
            report.add("INFO", f"certificates skipped: schedules not evaluable through horizon {horizon}")
            sreport = None
        if sreport is not None:
            for name, res in sreport.properties.items():
                report.add("INFO", f"certificate {name}: applies={res.applies} margin={res.margin:.6g}")
            report.add("INFO", f"certificate prediction: {sreport.predicted} (horizon {sreport.horizon})")
            sreport = stability.cross_validate(sreport, trace)
            if sreport.simulation_agrees is None:
                report.add("INFO", "certificate cross-check: no certificate applies; nothing to check")
            else:
                report.ok(sreport.simulation_agrees,
                          "certificate cross-check: " + "; ".join(sreport.simulation_notes))
        if opts.positivity and sreport is not None:
            pos = stability.check_positivity_constraints(cfg, horizon=horizon,
                                                         tol=opts.tail_tol, trace=trace)
            report.ok(pos.b_in_range and pos.b_tends_to_one,
                      f"positivity constraint 1: b in (0,1] and tends to 1 "
                      f"(tail deviation {pos.b_tail_deviation:.3g})")
            report.ok(pos.a_in_range and pos.a_tail_limit is not None,
                      f"positivity constraint on a: in [0,1] with tail limit {pos.a_tail_limit}")
            report.ok(pos.s_inv_nonneg and pos.t_nonneg,
                      f"positivity constraint 3: min entry inv(s)={pos.min_s_inv_entry:.3g} "
                      f"t={pos.min_t_entry:.3g}")
            if pos.little_o_ratios is not None and len(pos.little_o_ratios):
                report.add("INFO", f"power-vs-iterate ratio ||t^n||/||y_n||: "
                                   f"first={pos.little_o_ratios[0]:.3e} last={pos.little_o_ratios[-1]:.3e} (no verdict)")
            for note in pos.notes:
                report.add("INFO", note)

    if cfg.nonneg_domain and trace.n_raw:
        low = float(np.min(trace.sz))
        report.ok(low >= -NONNEG_SLACK, f"nonnegative orthant: min Sz component {low:.3e}")

    try:
        sz_limit = diagnostics.estimate_limit(trace.sz)
        report.add("INFO", f"limit of Sz ({sz_limit.method}): {np.array2string(sz_limit.value, precision=8)}")
        ratios = diagnostics.acceleration_ratio(trace.sz, trace.asz, sz_limit.value)
        if ratios:
            mid = len(ratios) // 2
            report.add("INFO", f"acceleration ratios |ASz-L|/|Sz-L|: first={ratios[0]:.3e} "
                               f"mid={ratios[mid]:.3e} last={ratios[-1]:.3e} ({len(ratios)} reported)")
        else:
            report.add("INFO", "acceleration ratios: raw sequence already at its limit")
        if trace.n_accel >= 5:
            equivalent = diagnostics.sequences_equivalent(trace.sz, trace.asz, EQUIVALENCE_TOL)
            report.ok(equivalent, f"limit equivalence Sz vs ASz (tol {EQUIVALENCE_TOL:g})")
        residual_stream = diagnostics.limit_identity_residuals(trace)
        report.add("INFO", f"limit-identity residuals: first={residual_stream[0]:.3e} "
                           f"last={residual_stream[-1]:.3e} (no verdict)")
    except (NotConvergingError, SequenceTooShortError) as exc:
        report.add("INFO", f"limit diagnostics skipped: {exc}")


def _run_venter(scn: VenterScenario, outdir: Path, report: Report) -> None:
    cfg = scn.cfg
    trace = venter.venter_run(cfg)
    write_venter_csv(trace, outdir / "trace.csv")
    report.add("INFO", f"venter run: steps={cfg.steps} sigma={cfg.sigma:g} x0={cfg.x0:g}")
    k_hat = trace.k_hat_final
    report.add("INFO", f"cesaro mean K_hat at horizon: {k_hat!r}")
    if k_hat > venter.K_HAT_WARN:
        report.add("INFO", f"K_hat exceeds {venter.K_HAT_WARN}; contraction-style bounds are near-vacuous")

    if cfg.sigma == 0:
        verdict = venter.verify_summability(trace, cfg)
        report.ok(bool(verdict.passed),
                  f"telescoping identity: worst residual {verdict.value:.3e} (tol {verdict.threshold:.3e})")
        report.add("INFO", f"partial sums at horizon: sum(alpha*x)={verdict.info['sum_alpha_x']:.8g} "
                           f"sum(x)={verdict.info['sum_x']:.8g} (no verdict)")
    else:
        report.add("INFO", "telescoping identity: skipped (needs sigma = 0)")

    if cfg.sigma == 0 and not np.any(trace.gamma_vals != 0):
        verdict = venter.verify_property_i(trace, cfg, scn.eps)
        div = verdict.info["sum_alpha_diverges"]
        div_txt = {True: "diverges", False: "converges", None: "unknown"}[div]
        report.ok(bool(verdict.passed),
                  f"decay-to-zero: x_N={verdict.value:.3e} (eps {verdict.threshold:g}; alpha series {div_txt})")
        report.add("INFO", f"geometric-expansion identity residual: {verdict.info['expansion_residual']:.3e}")
    else:
        report.add("INFO", "decay-to-zero: skipped (needs sigma = 0 and gamma = 0)")

    if float(np.min(trace.alpha_vals - trace.gamma_vals)) > 0:
        verdict = venter.verify_property_iv(trace, cfg)
        report.ok(bool(verdict.passed),
                  f"uniform bound: sup x={verdict.value!r} bound={verdict.threshold!r} margin={verdict.margin:.3e}")
    else:
        report.add("INFO", "uniform bound: skipped (needs inf(alpha - gamma) > 0)")


def _run_aitken(scn: AitkenScenario, outdir: Path, report: Report) -> None:
    accel, gates = accelerate_sequence(scn.values, scn.gate, scn.floor_scale)
    write_aitken_csv(scn.values, accel, gates, outdir / "trace.csv")
    report.add("INFO", f"aitken run: {scn.values.shape[0]} terms, dim={scn.values.shape[1]}")
    if scn.geometric_limit is not None:
        lim = scn.geometric_limit
        tol = 1e-10 * (1.0 + _norm(lim))
        worst = float(np.max(np.linalg.norm(accel - lim[None, :], axis=1)))
        report.ok(worst <= tol, f"geometric exactness: worst |Ax - L| = {worst:.3e} (tol {tol:.3e})")
        ratios = diagnostics.acceleration_ratio(scn.values, accel, lim)
        if ratios:
            report.add("INFO", f"acceleration ratios: first={ratios[0]:.3e} last={ratios[-1]:.3e}")
    else:
        try:
            est = diagnostics.estimate_limit(scn.values)
            report.add("INFO", f"limit estimate ({est.method}): {np.array2string(est.value, precision=8)}")
            ratios = diagnostics.acceleration_ratio(scn.values, accel, est.value)
            if ratios:
                report.add("INFO", f"acceleration ratios: first={ratios[0]:.3e} last={ratios[-1]:.3e}")
        except (NotConvergingError, SequenceTooShortError) as exc:
            report.add("INFO", f"limit estimate skipped: {exc}")
    report.add("INFO", f"gates applied: {int(np.sum(gates))} of {gates.size} components")


def _run_scan(spec: ScanSpec, outdir: Path, report: Report) -> None:
    result = run_scan(spec)
    write_scan_csv(result, outdir / "trace.csv")
    counts = result.counts_by_property()
    report.add("INFO", f"scan: {spec.count} configs, dim={spec.dim}, steps={spec.steps}, seed={spec.seed}")
    report.add("INFO", "certified counts: " + " ".join(f"{k}={v}" for k, v in counts.items()))
    report.add("INFO", f"configs with any certificate: {result.certified_count}")
    violations = result.violations
    report.ok(not violations, f"certificate soundness: {len(violations)} violation(s)")
    for o in violations:
        report.add("INFO", f"violating config index {o.index}: certified={o.certified} notes={o.notes}")


def run_experiment(cfg: ExperimentConfig, output_dir: str | Path | None = None, quiet: bool = False) -> int:
    """Run the configured scenario; write trace.csv and report.txt.

    Returns the exit status: 0 when every enabled check passed, 1 when any
    FAIL line was emitted or the run errored.
    """
    outdir = Path(output_dir or cfg.output or "out")
    outdir.mkdir(parents=True, exist_ok=True)
    report = Report()
    try:
        block = cfg.active()
        if cfg.scenario == "jungck":
            _run_jungck(block, outdir, report)
        elif cfg.scenario == "venter":
            _run_venter(block, outdir, report)
        elif cfg.scenario == "aitken-only":
            _run_aitken(block, outdir, report)
        else:
            _run_scan(block, outdir, report)
    except JungckitError as exc:
        report.add("FAIL", f"run aborted: {exc}")
    (outdir / "report.txt").write_text(report.render())
    if not quiet:
        sys.stdout.write(report.render())
    return 1 if report.failed else 0


# ---------------------------------------------------------------------------
# entry point


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jungckit",
        description="Run two-map iteration experiments from a config file and "
                    "emit a CSV trace plus a PASS/FAIL report.",
    )
    parser.add_argument("--config", required=True, help="path to the YAML experiment config")
    parser.add_argument("--output", default=None, help="output directory (default: config's, else ./out)")
    parser.add_argument("--steps", type=int, default=None, help="override the scenario's step count")
    parser.add_argument("--tolerance", type=float, default=None,
                        help="override the scenario's main tolerance (jungck: solve_tol, "
                             "venter: eps, aitken-only: floor_scale, stability-scan: tail_tol)")
    parser.add_argument("--scenario", default=None, choices=SCENARIOS,
                        help="override the config's scenario (its block must be present)")
    parser.add_argument("--quiet", action="store_true", help="do not echo the report to stdout")
    return parser


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if args.scenario:
        cfg.scenario = args.scenario
    block = cfg.active()
    if args.steps is not None:
        if cfg.scenario == "jungck":
            old = block.cfg
            block.cfg = engine.JungckConfig(
                pair=old.pair, a=old.a, b=old.b, gates_z=old.gates_z, gates_y=old.gates_y,
                z0=old.z0, steps=args.steps, floor_scale=old.floor_scale,
                power_mode=old.power_mode, nonneg_domain=old.nonneg_domain,
            )
        elif cfg.scenario == "venter":
            old = block.cfg
            block.cfg = venter.VenterConfig(alpha=old.alpha, gamma=old.gamma, omega=old.omega,
                                            sigma=old.sigma, x0=old.x0, steps=args.steps)
        elif cfg.scenario == "stability-scan":
            cfg.scan = ScanSpec(**{**cfg.scan.__dict__, "steps": args.steps})
        else:
            raise ConfigValidationError("--steps does not apply to aitken-only (set sequence.length)")
    if args.tolerance is not None:
        if cfg.scenario == "jungck":
            old = block.cfg
            pair = make_operator_pair(old.pair.s, old.pair.t, tol=args.tolerance)
            block.cfg = engine.JungckConfig(
                pair=pair, a=old.a, b=old.b, gates_z=old.gates_z, gates_y=old.gates_y,
                z0=old.z0, steps=old.steps, floor_scale=old.floor_scale,
                power_mode=old.power_mode, nonneg_domain=old.nonneg_domain,
            )
        elif cfg.scenario == "venter":
            block.eps = args.tolerance
        elif cfg.scenario == "aitken-only":
            block.floor_scale = args.tolerance
        else:
            cfg.scan = ScanSpec(**{**cfg.scan.__dict__, "tail_tol": args.tolerance})
    return cfg


def main(argv=None) -> int:
    parser = build_arg_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        cfg = parse_config(args.config)
        cfg = _apply_overrides(cfg, args)
    except (ConfigParseError, ConfigValidationError) as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    except (JungckitError, ValueError) as exc:  # bad override combinations
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    except OSError as exc:
        sys.stderr.write(f"cannot read config: {exc}\n")
        return 2
    try:
        return run_experiment(cfg, output_dir=args.output, quiet=args.quiet)
    except JungckitError as exc:
        sys.stderr.write(f"run failed: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
