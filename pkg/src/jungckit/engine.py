"""The generalized two-map S-iteration engine.

One step at index n, seeded with z0 (t^0 is the identity):

    sy_n   = (1 - b_n) * sz_n + b_n * t^n(z_n)      y_n = solve(sy_n)
    sz_n+1 = (1 - a_n) * t^n(z_n) + a_n * t^n(y_n)  z_n+1 = solve(sz_n+1)

A run records n_raw = steps rows (the final row gets its y-half only) and
feeds both s-image sequences through the gated delta-squared corrector.
Non-finite intermediates halt the run; the partial trace is kept and
flagged instead of raised, because the stability sweeps deliberately
explore unstable regions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .aitken import DEFAULT_FLOOR_SCALE, accelerate_sequence
from .errors import (
    DimensionMismatchError,
    IndexOutOfRangeError,
    NonFiniteError,
    SolveError,
)
from .model import GatePolicy, IterationTrace, OperatorPair, Operator, Schedule, Vector, as_state

POWER_MODES = ("matrix-cached", "repeated-apply")


class PowerCache:
    """Incrementally cached powers of a matrix operator.

    Powers are built by one extra multiply per new exponent, so a run that
    asks for n = 0, 1, 2, ... costs one matrix product per step.  Requests
    are answered from the cache for any already-computed exponent.
    """

    def __init__(self, op: Operator):
        if not op.is_linear:
            raise NonFiniteError("matrix-cached powers need a matrix operator")
        self.op = op
        self._powers = [np.eye(op.dim)]

    def matrix(self, n: int) -> np.ndarray:
        if n < 0:
            raise IndexOutOfRangeError("powers are defined for n >= 0")
        with np.errstate(over="ignore", invalid="ignore"):
            while len(self._powers) <= n:
                nxt = self.op.matrix @ self._powers[-1]
                if not np.all(np.isfinite(nxt)):
                    raise NonFiniteError(f"power {len(self._powers)} of the update map overflowed")
                self._powers.append(nxt)
        return self._powers[n]

    def apply(self, n: int, x: Vector) -> Vector:
        with np.errstate(over="ignore", invalid="ignore"):
            out = self.matrix(n) @ x
        if not np.all(np.isfinite(out)):
            raise NonFiniteError(f"t^{n} x is non-finite")
        return out


def power_apply(
    t: Operator,
    n: int,
    x: Vector,
    mode: str = "matrix-cached",
    cache: PowerCache | None = None,
) -> Vector:
    """Apply the n-th power of ``t`` to ``x``; n = 0 returns x unchanged.

    ``matrix-cached`` multiplies a cached matrix power (pass a shared
    ``cache`` to amortize across calls); ``repeated-apply`` composes the
    map n times and is the only mode for callback operators.  Raises
    ``NonFiniteError`` as soon as an intermediate overflows.
    """
    if mode not in POWER_MODES:
        raise ValueError(f"unknown power mode {mode!r}")
    if n < 0:
        raise IndexOutOfRangeError("powers are defined for n >= 0")
    x = as_state(x, dim=t.dim)
    if n == 0:
        return x
    if mode == "matrix-cached":
        cache = cache if cache is not None else PowerCache(t)
        return cache.apply(n, x)
    out = x
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(n):
            out = t(out)
            if not np.all(np.isfinite(out)):
                raise NonFiniteError("repeated application of the update map overflowed")
    return out


@dataclass
class JungckConfig:
    """Everything one run needs: the map pair, schedules, gates and seed."""

    pair: OperatorPair
    a: Schedule
    b: Schedule
    gates_z: GatePolicy = field(default_factory=GatePolicy.always_on)
    gates_y: GatePolicy = field(default_factory=GatePolicy.always_on)
    z0: Vector = None
    steps: int = 50
    floor_scale: float = DEFAULT_FLOOR_SCALE
    power_mode: Optional[str] = None  # None -> pick by operator kind
    nonneg_domain: bool = False

    def __post_init__(self):
        if self.z0 is None:
            raise ValueError("z0 is required")
        self.z0 = as_state(self.z0, dim=self.pair.dim)
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.steps < 3 and not (self.gates_z.is_always_off and self.gates_y.is_always_off):
            raise ValueError("correction gates need steps >= 3 (two-term lookahead)")
        if self.floor_scale <= 0:
            raise ValueError("floor_scale must be positive")
        if self.power_mode is None:
            self.power_mode = "matrix-cached" if self.pair.t.is_linear else "repeated-apply"
        if self.power_mode not in POWER_MODES:
            raise ValueError(f"unknown power mode {self.power_mode!r}")
        if self.power_mode == "matrix-cached" and not self.pair.t.is_linear:
            raise ValueError("matrix-cached powers need a matrix update map")

    @property
    def dim(self) -> int:
        return self.pair.dim


def _tpow(cfg: JungckConfig, cache: Optional[PowerCache], n: int, x: Vector) -> Vector:
    if cfg.power_mode == "matrix-cached":
        return cache.apply(n, x)
    return power_apply(cfg.pair.t, n, x, mode="repeated-apply")


def _check_finite(name: str, v: Vector, n: int) -> Vector:
    if not np.all(np.isfinite(v)):
        raise NonFiniteError(f"{name} is non-finite at step {n}")
    return v


def jungck_step(
    cfg: JungckConfig,
    n: int,
    z_n: Vector,
    sz_n: Vector,
    cache: PowerCache | None = None,
) -> tuple[Vector, Vector, Vector, Vector]:
    """One full step at index n: returns (y_n, sy_n, z_next, sz_next)."""
    if cache is None and cfg.power_mode == "matrix-cached":
        cache = PowerCache(cfg.pair.t)
    a_n = cfg.a(n)
    b_n = cfg.b(n)
    with np.errstate(over="ignore", invalid="ignore"):
        w = _check_finite("t^n z_n", _tpow(cfg, cache, n, z_n), n)
        sy_n = _check_finite("sy_n", (1.0 - b_n) * sz_n + b_n * w, n)
        y_n = cfg.pair.solve(sy_n)
        v = _check_finite("t^n y_n", _tpow(cfg, cache, n, y_n), n)
        sz_next = _check_finite("sz_next", (1.0 - a_n) * w + a_n * v, n)
        z_next = cfg.pair.solve(sz_next)
    return y_n, sy_n, z_next, sz_next


def run(cfg: JungckConfig) -> IterationTrace:
    """Execute the scheme for cfg.steps raw indices and correct both s-image
    sequences.

    On overflow or solve failure the trace is truncated to the last complete
    row and flagged ``diverged`` with the failure message.
    """
    n_steps = cfg.steps
    a_vals = cfg.a.array(n_steps)
    b_vals = cfg.b.array(n_steps)

    cache = PowerCache(cfg.pair.t) if cfg.power_mode == "matrix-cached" else None
    z_rows = [cfg.z0]
    sz_rows: list[Vector] = []
    y_rows: list[Vector] = []
    sy_rows: list[Vector] = []
    tz_rows: list[Vector] = []
    ty_rows: list[Vector] = []

    diverged = False
    failure = None
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            sz_rows.append(_check_finite("s(z0)", cfg.pair.s(cfg.z0), 0))
            for n in range(n_steps):
                w = _check_finite("t^n z_n", _tpow(cfg, cache, n, z_rows[n]), n)
                sy_n = _check_finite("sy_n", (1.0 - b_vals[n]) * sz_rows[n] + b_vals[n] * w, n)
                y_n = cfg.pair.solve(sy_n)
                v = _check_finite("t^n y_n", _tpow(cfg, cache, n, y_n), n)
                tz_rows.append(w)
                sy_rows.append(sy_n)
                y_rows.append(y_n)
                ty_rows.append(v)
                if n == n_steps - 1:
                    break
                sz_next = _check_finite("sz_next", (1.0 - a_vals[n]) * w + a_vals[n] * v, n)
                z_next = cfg.pair.solve(sz_next)
                sz_rows.append(sz_next)
                z_rows.append(z_next)
    except (NonFiniteError, SolveError) as exc:
        diverged = True
        failure = str(exc)

    m = len(y_rows)  # complete rows carry all six quantities
    d = cfg.dim

    def stack(rows, count):
        if count == 0:
            return np.empty((0, d))
        return np.vstack(rows[:count])

    z = stack(z_rows, m)
    sz = stack(sz_rows, m)
    y = stack(y_rows, m)
    sy = stack(sy_rows, m)
    tz = stack(tz_rows, m)
    ty = stack(ty_rows, m)

    if m >= 3:
        asz, gz = accelerate_sequence(sz, cfg.gates_z, cfg.floor_scale)
        asy, gy = accelerate_sequence(sy, cfg.gates_y, cfg.floor_scale)
    else:
        asz = asy = np.empty((0, d))
        gz = gy = np.empty((0, d), dtype=np.int64)

    return IterationTrace(
        z=z, y=y, sz=sz, sy=sy, tz=tz, ty=ty,
        asz=asz, asy=asy, gates_z=gz, gates_y=gy,
        a_vals=a_vals[:m], b_vals=b_vals[:m],
        steps=n_steps, solve_tol=cfg.pair.solve_tol, floor_scale=cfg.floor_scale,
        diverged=diverged, failure=failure,
    )


def identity_residual(trace: IterationTrace, n: int) -> float:
    """Norm of the step identity that couples the two recursions at index n.

    The combination b_n*sz_{n+1} + (1-a_n)(1-b_n)*sz_n equals
    (1-a_n)*sy_n + a_n*b_n*t^n(y_n) exactly in real arithmetic, so the
    returned value is pure floating-point error.
    """
    if n < 0 or n + 1 >= trace.n_raw:
        raise IndexOutOfRangeError(f"need rows n and n+1 in the trace, got n={n} of {trace.n_raw}")
    a_n = trace.a_vals[n]
    b_n = trace.b_vals[n]
    lhs = b_n * trace.sz[n + 1] + (1.0 - a_n) * (1.0 - b_n) * trace.sz[n]
    rhs = (1.0 - a_n) * trace.sy[n] + a_n * b_n * trace.ty[n]
    return float(np.linalg.norm(lhs - rhs))


def identity_residuals(trace: IterationTrace) -> np.ndarray:
    """identity_residual at every index with a successor row."""
    count = max(trace.n_raw - 1, 0)
    return np.array([identity_residual(trace, n) for n in range(count)])
