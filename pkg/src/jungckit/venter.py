"""Nonnegative damped scalar recursion: simulator and verdict machinery.

The recursion

    x_{n+1} = (1 - alpha_n + gamma_n) * x_n + omega_n + sigma,   x_0 >= 0

is stated in the literature as an inequality; the simulator runs the
equality, which dominates every sequence satisfying the inequality, so
all verified bounds are exercised at their worst case.  The limit Cesaro
constant is replaced by its finite mean K_hat, and verdicts are labeled
with the horizon they were computed at.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import HypothesisViolatedError, ScheduleViolationError
from .model import Schedule

#: K_hat this close to 1 makes the contraction-style bounds vacuous
K_HAT_WARN = 0.99


@dataclass(frozen=True)
class VenterConfig:
    """Schedules and constants of one recursion run."""

    alpha: Schedule
    gamma: Schedule
    omega: Schedule
    sigma: float = 0.0
    x0: float = 1.0
    steps: int = 100

    def __post_init__(self):
        if self.sigma < 0:
            raise ScheduleViolationError("sigma must be >= 0")
        if self.x0 < 0:
            raise ScheduleViolationError("x0 must be >= 0")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")


@dataclass
class VenterTrace:
    """Simulated recursion with the running artifacts verification needs.

    ``x`` has steps+1 entries; the schedule values and cumulative sums are
    indexed by the step n they were consumed at.  ``k_hat[n]`` is the mean
    of (1 - alpha_i) over i <= n.
    """

    x: np.ndarray
    k_hat: np.ndarray
    alpha_vals: np.ndarray
    gamma_vals: np.ndarray
    omega_vals: np.ndarray
    sum_alpha_x: np.ndarray
    sum_gamma_x: np.ndarray
    sum_omega: np.ndarray
    sum_x: np.ndarray
    sigma: float

    @property
    def steps(self) -> int:
        return len(self.x) - 1

    @property
    def k_hat_final(self) -> float:
        return float(self.k_hat[-1])


def venter_run(cfg: VenterConfig) -> VenterTrace:
    """Run the equality recursion for cfg.steps steps.

    Every evaluated schedule value is checked for admissibility
    (alpha in (0, 1], gamma >= 0, omega >= 0); violations raise
    ``ScheduleViolationError``.
    """
    n_steps = cfg.steps
    alpha = cfg.alpha.array(n_steps)
    gamma = cfg.gamma.array(n_steps)
    omega = cfg.omega.array(n_steps)
    for name, vals, lo_open in (("alpha", alpha, True), ("gamma", gamma, False), ("omega", omega, False)):
        if lo_open:
            bad = (vals <= 0) | (vals > 1)
        else:
            bad = vals < 0
        if bad.any():
            n_bad = int(np.argmax(bad))
            raise ScheduleViolationError(f"{name}_n = {vals[n_bad]} at n={n_bad} is not admissible")

    x = np.empty(n_steps + 1)
    x[0] = cfg.x0
    for n in range(n_steps):
        x[n + 1] = (1.0 - alpha[n] + gamma[n]) * x[n] + omega[n] + cfg.sigma

    xs = x[:-1]
    return VenterTrace(
        x=x,
        k_hat=np.cumsum(1.0 - alpha) / np.arange(1, n_steps + 1),
        alpha_vals=alpha,
        gamma_vals=gamma,
        omega_vals=omega,
        sum_alpha_x=np.cumsum(alpha * xs),
        sum_gamma_x=np.cumsum(gamma * xs),
        sum_omega=np.cumsum(omega),
        sum_x=np.cumsum(x),
        sigma=cfg.sigma,
    )


@dataclass
class Verdict:
    """One verification outcome; ``passed`` is None for verdict-less diagnostics."""

    name: str
    passed: Optional[bool]
    value: float
    threshold: float
    margin: float
    info: dict = field(default_factory=dict)


def verify_property_i(trace: VenterTrace, cfg: VenterConfig, eps: float) -> Verdict:
    """Convergence-to-zero verdict for the undriven recursion.

    Requires sigma = 0 and gamma identically zero over the horizon.  The
    verdict passes when the final iterate is below ``eps``.  Divergence of
    the alpha partial sums is decided symbolically for the built-in
    schedule families (None = unknown) and reported alongside.  The info
    dict also carries the geometric-expansion identity residual evaluated
    with K_hat, which is pure floating-point error by construction.
    """
    if cfg.sigma != 0:
        raise HypothesisViolatedError("needs sigma = 0")
    if np.any(trace.gamma_vals != 0):
        raise HypothesisViolatedError("needs gamma identically 0")
    k = trace.k_hat_final
    # Horner evaluation of sum_i K^{N-1-i} * (omega_i - (K + alpha_i - 1) x_i)
    r = 0.0
    for n in range(trace.steps):
        r = k * r + (trace.omega_vals[n] - (k + trace.alpha_vals[n] - 1.0) * trace.x[n])
    expansion_residual = float(trace.x[-1] - k ** trace.steps * trace.x[0] - r)
    final = float(trace.x[-1])
    return Verdict(
        name="venter-i",
        passed=bool(final < eps),
        value=final,
        threshold=eps,
        margin=float(eps - final),
        info={
            "sum_alpha_diverges": cfg.alpha.series_diverges(),
            "expansion_residual": expansion_residual,
            "expansion_remainder": float(r),
            "k_hat": k,
        },
    )


def verify_summability(trace: VenterTrace, cfg: VenterConfig) -> Verdict:
    """Telescoping identity check, the strongest oracle of this module.

    For sigma = 0 the equality recursion gives, for every prefix length m,

        sum_{i<m} (alpha_i - gamma_i) x_i + x_m = x_0 + sum_{i<m} omega_i

    exactly in real arithmetic; the verdict passes when the worst residual
    stays within 1e-10 * (1 + x_0 + sum omega).
    """
    if cfg.sigma != 0:
        raise HypothesisViolatedError("needs sigma = 0")
    lhs = (trace.sum_alpha_x - trace.sum_gamma_x) + trace.x[1:]
    rhs = trace.x[0] + trace.sum_omega
    residuals = np.abs(lhs - rhs)
    worst = float(np.max(residuals)) if len(residuals) else 0.0
    scale = 1e-10 * (1.0 + trace.x[0] + float(trace.sum_omega[-1]))
    return Verdict(
        name="venter-summability",
        passed=bool(worst <= scale),
        value=worst,
        threshold=scale,
        margin=float(scale - worst),
        info={
            "sum_alpha_x": float(trace.sum_alpha_x[-1]),
            "sum_x": float(trace.sum_x[-1]),
        },
    )


def verify_property_iv(trace: VenterTrace, cfg: VenterConfig, slack: float = 1e-9) -> Verdict:
    """Uniform bound on the iterates when the damping dominates the drive.

    Requires inf(alpha_n - gamma_n) > 0 over the horizon.  Checks

        sup x_n <= ((1 - K_hat) x_0 + sigma + sup omega_n) / inf(alpha - gamma)

    up to ``slack``; the margin is the headroom left in the bound.
    """
    diff = trace.alpha_vals - trace.gamma_vals
    inf_diff = float(np.min(diff))
    if inf_diff <= 0:
        raise HypothesisViolatedError(f"needs inf(alpha - gamma) > 0, got {inf_diff}")
    sup_x = float(np.max(trace.x))
    sup_omega = float(np.max(trace.omega_vals))
    bound = (1.0 / inf_diff) * ((1.0 - trace.k_hat_final) * trace.x[0] + trace.sigma + sup_omega)
    return Verdict(
        name="venter-iv",
        passed=bool(sup_x <= bound + slack),
        value=sup_x,
        threshold=float(bound),
        margin=float(bound - sup_x),
        info={"inf_alpha_minus_gamma": inf_diff, "k_hat": trace.k_hat_final},
    )
