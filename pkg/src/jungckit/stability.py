"""Sufficient boundedness/convergence certificates for matrix configurations.

The certificates bound the growth of the iteration through the minimum
modulus of the solved-against map and tail suprema of schedule-weighted
power norms.  They are sufficient, not necessary, and every limit-style
hypothesis is replaced by a finite-horizon surrogate, so results are
labeled with the horizon they were computed at.  ``cross_validate``
replays a simulated trace against what an applying certificate promises.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .engine import JungckConfig
from .errors import NormsUnavailableError, TraceMismatchError
from .model import IterationTrace, Schedule, spectral_norm

#: slack used when replaying certified bounds against simulation
CROSS_VALIDATE_SLACK = 1e-6


def power_norms(cfg: JungckConfig, horizon: int) -> np.ndarray:
    """Spectral norms of t^n for n = 0..horizon (inf once a power overflows)."""
    t = cfg.pair.t
    if not t.is_linear:
        raise NormsUnavailableError("power norms need a matrix update map")
    norms = np.empty(horizon + 1)
    m = np.eye(t.dim)
    finite = True
    for n in range(horizon + 1):
        if finite:
            norms[n] = spectral_norm(m)
            m = t.matrix @ m
            finite = bool(np.all(np.isfinite(m)))
        else:
            norms[n] = math.inf
    return norms


@dataclass(frozen=True)
class StabilityConstants:
    """Finite-horizon surrogates for the certificate constants.

    k1, k2 cap |a_n|*||t^n|| and |b_n|*||t^n|| over the tail; k1p, k2p cap
    |1-a_n|*||t^n|| and |1-b_n|.  m_bound caps the per-step y-vs-z
    amplification over the whole horizon.
    """

    k1: float
    k2: float
    k1p: float
    k2p: float
    m_bound: float
    horizon: int
    tail_start: int

    def __post_init__(self):
        if not (0 <= self.tail_start < self.horizon):
            raise ValueError("need 0 <= tail_start < horizon")


def compute_constants(cfg: JungckConfig, horizon: int, tail_start: int = 0) -> StabilityConstants:
    """Empirical tail suprema of the schedule-weighted power norms.

    Maxima over n in [tail_start, horizon] stand in for the limit-superior
    hypotheses; with tail_start 0 every certified inequality holds from the
    first step, which is what the soundness sweeps rely on.
    """
    if horizon < tail_start + 10:
        raise ValueError("horizon must be at least tail_start + 10")
    if not cfg.pair.norms_available:
        raise NormsUnavailableError("constants need matrix operators with cached norms")
    tn = power_norms(cfg, horizon)
    a = cfg.a.array(horizon + 1)
    b = cfg.b.array(horizon + 1)
    mu_inv = 1.0 / cfg.pair.s_min_modulus
    s_norm = cfg.pair.s_norm

    tail = slice(tail_start, horizon + 1)
    k1 = float(np.max(np.abs(a[tail]) * tn[tail]))
    k2 = float(np.max(np.abs(b[tail]) * tn[tail]))
    k1p = float(np.max(np.abs(1.0 - a[tail]) * tn[tail]))
    k2p = float(np.max(np.abs(1.0 - b[tail])))
    m_bound = float(np.max(mu_inv * (np.abs(1.0 - b) * s_norm + np.abs(b))))
    return StabilityConstants(
        k1=k1, k2=k2, k1p=k1p, k2p=k2p, m_bound=m_bound,
        horizon=horizon, tail_start=tail_start,
    )


@dataclass
class CertificateResult:
    """Outcome of one certificate: does it apply, and with how much slack."""

    name: str
    applies: bool
    margin: float
    details: dict = field(default_factory=dict)


def check_property_i(constants: StabilityConstants, mu_s: float) -> CertificateResult:
    """Tail-contraction certificate from the k-constants.

    Applies when k2p + k2/mu <= 1 and (k1p + k1*(k2p + k2/mu))/mu <= 1;
    the details also report the cruder sufficient pair that replaces the
    second bound with (k1p + k1)/mu <= 1.
    """
    mu_inv = 1.0 / mu_s
    y_factor = constants.k2p + mu_inv * constants.k2
    z_factor = mu_inv * (constants.k1p + constants.k1 * y_factor)
    simple = mu_inv * (constants.k1p + constants.k1)
    margin = min(1.0 - y_factor, 1.0 - z_factor)
    return CertificateResult(
        name="i",
        applies=(y_factor <= 1.0 and z_factor <= 1.0),
        margin=float(margin),
        details={
            "y_factor": float(y_factor),
            "z_factor": float(z_factor),
            "simple_pair_applies": bool(y_factor <= 1.0 and simple <= 1.0),
            "simple_z_factor": float(simple),
        },
    )


def check_property_ii_iii(cfg: JungckConfig, horizon: int) -> tuple[CertificateResult, CertificateResult]:
    """Uniform per-step certificates requiring ||t|| <= 1.

    The first applies when the blended per-step growth factor stays at or
    below 1 for every n up to the horizon; the second when the y-bound
    constant keeps |1-a_n| + |a_n|*M within the minimum modulus.
    """
    if not cfg.pair.norms_available:
        raise NormsUnavailableError("certificates need matrix operators")
    mu = cfg.pair.s_min_modulus
    mu_inv = 1.0 / mu
    s_norm = cfg.pair.s_norm
    t_norm = cfg.pair.t_norm
    a = cfg.a.array(horizon + 1)
    b = cfg.b.array(horizon + 1)

    y_amp = mu_inv * (np.abs(1.0 - b) * s_norm + np.abs(b))
    m_bound = float(np.max(y_amp))
    step_factor = mu_inv * (np.abs(1.0 - a) + mu_inv * np.abs(a) * (np.abs(1.0 - b) * s_norm + np.abs(b)))
    slack_ii = min(1.0 - t_norm, 1.0 - float(np.max(step_factor)))
    res_ii = CertificateResult(
        name="ii",
        applies=(t_norm <= 1.0 and float(np.max(step_factor)) <= 1.0),
        margin=float(slack_ii),
        details={"t_norm": float(t_norm), "max_step_factor": float(np.max(step_factor)), "m_bound": m_bound},
    )

    iii_lhs = np.abs(1.0 - a) + np.abs(a) * m_bound
    slack_iii = min(1.0 - t_norm, mu - float(np.max(iii_lhs)))
    res_iii = CertificateResult(
        name="iii",
        applies=(t_norm <= 1.0 and float(np.max(iii_lhs)) <= mu),
        margin=float(slack_iii),
        details={"t_norm": float(t_norm), "max_lhs": float(np.max(iii_lhs)), "m_bound": m_bound, "mu": float(mu)},
    )
    return res_ii, res_iii


def _tail_close_to_one(sched: Schedule, horizon: int, tol: float) -> tuple[bool, float]:
    lo = horizon // 2
    vals = np.array([sched(n) for n in range(lo, horizon + 1)])
    dev = float(np.max(np.abs(vals - 1.0)))
    return dev <= tol, dev


def check_property_iv_v(
    cfg: JungckConfig, horizon: int, tol: float = 0.01
) -> tuple[CertificateResult, CertificateResult]:
    """Vanishing-power certificates: ||t|| < 1 plus a schedule tending to 1.

    The limit hypothesis is replaced by "within tol of 1 over the back half
    of the horizon".  An applying certificate predicts convergence to zero.
    """
    if not cfg.pair.norms_available:
        raise NormsUnavailableError("certificates need matrix operators")
    t_norm = cfg.pair.t_norm
    contractive = t_norm < 1.0

    out = []
    for name, sched in (("iv", cfg.a), ("v", cfg.b)):
        ok, dev = _tail_close_to_one(sched, horizon, tol)
        out.append(
            CertificateResult(
                name=name,
                applies=(contractive and ok),
                margin=float(min(1.0 - t_norm, tol - dev)),
                details={"t_norm": float(t_norm), "tail_deviation": dev, "tail_tol": tol},
            )
        )
    return out[0], out[1]


@dataclass
class StabilityReport:
    """Certificate outcomes for one configuration, plus the simulation verdict.

    ``predicted`` is "converges-to-zero" only when a vanishing-power
    certificate applies, "bounded" when any per-step certificate applies,
    else "no-certificate".  ``simulation_agrees`` stays None until
    ``cross_validate`` runs (or when nothing applies: the certificates are
    sufficient, not necessary, so there is nothing to contradict).
    """

    cfg: JungckConfig
    constants: StabilityConstants
    properties: dict
    predicted: str
    horizon: int
    tail_tol: float
    simulation_agrees: Optional[bool] = None
    simulation_notes: list = field(default_factory=list)

    def applying(self) -> list[str]:
        return [k for k, v in self.properties.items() if v.applies]


def certify(
    cfg: JungckConfig,
    horizon: int = 200,
    tail_start: int = 0,
    tail_tol: float = 0.01,
) -> StabilityReport:
    """Run every certificate on a matrix configuration."""
    constants = compute_constants(cfg, horizon, tail_start)
    res_i = check_property_i(constants, cfg.pair.s_min_modulus)
    res_ii, res_iii = check_property_ii_iii(cfg, horizon)
    res_iv, res_v = check_property_iv_v(cfg, horizon, tail_tol)
    props = {r.name: r for r in (res_i, res_ii, res_iii, res_iv, res_v)}
    if res_iv.applies or res_v.applies:
        predicted = "converges-to-zero"
    elif res_i.applies or res_ii.applies or res_iii.applies:
        predicted = "bounded"
    else:
        predicted = "no-certificate"
    return StabilityReport(
        cfg=cfg, constants=constants, properties=props, predicted=predicted,
        horizon=horizon, tail_tol=tail_tol,
    )


def cross_validate(report: StabilityReport, trace: IterationTrace) -> StabilityReport:
    """Check a simulated trace against what the applying certificates imply.

    Bounded certificates promise sup_{n>=1} ||z_n|| <= ||z_1|| and the
    per-step y-vs-z amplification bound; vanishing-power certificates
    promise ||z_end|| < 1e-6 * ||z_0||.  When only the tail certificate
    applies and the constants were computed with a positive tail start,
    its promises are checked from the tail start on (they say nothing
    about earlier steps).  Sets ``simulation_agrees`` (None when no
    certificate applies) and returns the report.
    """
    cfg = report.cfg
    if trace.dim != cfg.dim or trace.steps != cfg.steps:
        raise TraceMismatchError("trace shape does not match the certified configuration")
    n = trace.n_raw
    if n and not (
        np.array_equal(trace.a_vals, cfg.a.array(n)) and np.array_equal(trace.b_vals, cfg.b.array(n))
    ):
        raise TraceMismatchError("trace schedules differ from the certified configuration")

    applying = report.applying()
    if not applying:
        report.simulation_agrees = None
        report.simulation_notes = ["no certificate applies; nothing to check"]
        return report

    zn = np.linalg.norm(trace.z, axis=1)
    yn = np.linalg.norm(trace.y, axis=1)
    checks: list[bool] = []
    notes: list[str] = []

    bounded = [p for p in applying if p in ("i", "ii", "iii")]
    if bounded and n >= 2:
        c = report.constants
        # (ii)/(iii) bind per step from n=0; (i) from the constants' tail start
        if "i" in bounded and c.tail_start == 0:
            start = 0
            amp = c.k2p + c.k2 / cfg.pair.s_min_modulus
        elif "ii" in bounded or "iii" in bounded:
            start = 0
            amp = c.m_bound
        else:
            start = c.tail_start
            amp = c.k2p + c.k2 / cfg.pair.s_min_modulus
        ref = max(start, 1)
        if ref < n:
            ok_z = bool(np.all(zn[ref:] <= zn[ref] * (1.0 + CROSS_VALIDATE_SLACK)))
            checks.append(ok_z)
            notes.append(f"sup ||z_n||, n>={ref}, vs ||z_{ref}||: {'ok' if ok_z else 'VIOLATED'}")
        ok_y = bool(np.all(yn[start:] <= zn[start:] * (amp + CROSS_VALIDATE_SLACK)))
        checks.append(ok_y)
        notes.append(f"||y_n|| <= {amp:.6g} * ||z_n|| from n={start}: {'ok' if ok_y else 'VIOLATED'}")

    if ("iv" in applying or "v" in applying) and n >= 1:
        ok_zero = bool(zn[-1] < 1e-6 * zn[0]) if zn[0] > 0 else bool(zn[-1] == 0.0)
        checks.append(ok_zero)
        notes.append(f"final ||z||/||z_0|| = {zn[-1] / zn[0] if zn[0] else 0.0:.3e}: {'ok' if ok_zero else 'VIOLATED'}")

    if trace.diverged:
        checks.append(False)
        notes.append("trace diverged under a certified configuration")

    report.simulation_agrees = all(checks) if checks else None
    report.simulation_notes = notes
    return report


@dataclass
class PositivityReport:
    """Checkable pieces of the global-stability constraint set.

    Range/limit demands on the schedules and entrywise nonnegativity of
    s^-1 and t are pass/fail; the remaining clauses (power-norm decay
    relative to iterate size, and the derived-schedule identity whose
    summability demands are mutually inconsistent) are reported as raw
    diagnostics without a verdict.
    """

    b_in_range: bool
    b_tends_to_one: bool
    b_tail_deviation: float
    a_in_range: bool
    a_tail_limit: Optional[float]  # 0.0 or 1.0 when the tail settles there
    s_inv_nonneg: bool
    t_nonneg: bool
    min_s_inv_entry: float
    min_t_entry: float
    little_o_ratios: Optional[np.ndarray] = None
    gamma_identity_preview: Optional[np.ndarray] = None
    notes: list = field(default_factory=list)

    @property
    def passes(self) -> bool:
        return (
            self.b_in_range and self.b_tends_to_one and self.a_in_range
            and self.a_tail_limit is not None and self.s_inv_nonneg and self.t_nonneg
        )


def derived_gamma_schedule(alpha: Schedule, b: Schedule, horizon: int) -> Schedule:
    """Explicit-list schedule gamma_n = (2 - alpha_n) / b_n over the horizon.

    Offered for experimentation only: its own summability requirements
    (a summable alpha that must also have divergent partial sums) cannot
    be met simultaneously, so nothing in the toolkit certifies with it.
    """
    vals = []
    for n in range(horizon + 1):
        b_n = b(n)
        if b_n == 0:
            raise ZeroDivisionError(f"b_n = 0 at n={n}; the identity needs b_n in (0, 1]")
        vals.append((2.0 - alpha(n)) / b_n)
    return Schedule.from_values(vals, clamp=(-math.inf, math.inf))


def check_positivity_constraints(
    cfg: JungckConfig,
    horizon: int,
    tol: float = 0.01,
    trace: IterationTrace | None = None,
    alpha: Schedule | None = None,
) -> PositivityReport:
    """Evaluate the global-stability constraint set at a finite horizon.

    Checks: b in (0, 1] tending to 1; a in [0, 1] with tail limit 0 or 1;
    entrywise nonnegativity of s^-1 and t (sufficient for every composite
    power to preserve the nonnegative orthant).  With a trace, also emits
    the ||t^n|| / ||y_n|| diagnostic stream; with an ``alpha`` schedule,
    previews the derived gamma identity values.
    """
    if not (cfg.pair.s.is_linear and cfg.pair.t.is_linear):
        raise NormsUnavailableError("positivity constraints need matrix operators")
    a = cfg.a.array(horizon + 1)
    b = cfg.b.array(horizon + 1)

    b_in_range = bool(np.all((b > 0.0) & (b <= 1.0)))
    _, b_dev = _tail_close_to_one(cfg.b, horizon, tol)
    a_in_range = bool(np.all((a >= 0.0) & (a <= 1.0)))
    tail = a[horizon // 2:]
    if np.max(np.abs(tail - 1.0)) <= tol:
        a_tail_limit: Optional[float] = 1.0
    elif np.max(np.abs(tail)) <= tol:
        a_tail_limit = 0.0
    else:
        a_tail_limit = None

    s_inv = np.linalg.inv(cfg.pair.s.matrix)
    min_s_inv = float(np.min(s_inv))
    min_t = float(np.min(cfg.pair.t.matrix))

    ratios = None
    if trace is not None and trace.n_raw:
        tn = power_norms(cfg, trace.n_raw - 1)
        yn = np.linalg.norm(trace.y, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(yn > 0, tn / yn, np.inf)

    preview = None
    notes = [
        "power-decay-vs-iterate clauses are diagnostics only (no verdict)",
        "derived-schedule clause demands a summable alpha with divergent partial sums; "
        "mutually inconsistent, reported without a verdict",
    ]
    if alpha is not None:
        gamma = derived_gamma_schedule(alpha, cfg.b, min(horizon, 9))
        preview = np.array(gamma.values)

    return PositivityReport(
        b_in_range=b_in_range,
        b_tends_to_one=(b_dev <= tol),
        b_tail_deviation=b_dev,
        a_in_range=a_in_range,
        a_tail_limit=a_tail_limit,
        s_inv_nonneg=(min_s_inv >= 0.0),
        t_nonneg=(min_t >= 0.0),
        min_s_inv_entry=min_s_inv,
        min_t_entry=min_t,
        little_o_ratios=ratios,
        gamma_identity_preview=preview,
        notes=notes,
    )
