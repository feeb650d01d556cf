"""Limit estimation, rate measurement and sequence-equivalence checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .aitken import DEFAULT_FLOOR_SCALE, AitkenWindow, aitken_correct
from .errors import LengthMismatchError, NotConvergingError, SequenceTooShortError
from .model import IterationTrace, Vector

#: a final difference below this relative scale counts as numerically settled
SETTLE_SCALE = 1e-10
#: error norms below this relative scale are noise; no ratios reported there
RATIO_FLOOR_SCALE = 1e-13


@dataclass(frozen=True)
class LimitEstimate:
    value: Vector
    method: str  # "last-term" | "extrapolation"


def _as_rows(seq) -> np.ndarray:
    arr = np.asarray(seq, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    return arr


def estimate_limit(seq: Sequence[Vector] | np.ndarray) -> LimitEstimate:
    """Estimate the limit of a convergent sequence of vectors.

    A sequence whose final difference is negligible (1e-10 relative) is
    numerically settled and the last term is the estimate; otherwise the
    delta-squared extrapolation of the last three terms is used.  Settled
    traces therefore never validate the correction with itself.  Raises
    ``NotConvergingError`` when the differences have not shrunk at all over
    the last ten steps.
    """
    arr = _as_rows(seq)
    n = arr.shape[0]
    if n < 5:
        raise SequenceTooShortError(f"limit estimation needs >= 5 terms, got {n}")
    diffs = np.linalg.norm(np.diff(arr, axis=0), axis=1)
    scale = 1.0 + float(np.linalg.norm(arr[-1]))
    settled = diffs[-1] <= SETTLE_SCALE * scale

    if len(diffs) >= 10 and not settled:
        last = diffs[-10:]
        if np.all(last[1:] >= last[:-1] * (1.0 - 1e-12)):
            raise NotConvergingError("differences non-shrinking over the last 10 steps")

    if settled:
        return LimitEstimate(value=arr[-1].copy(), method="last-term")
    window = AitkenWindow.build(arr[-3], arr[-2], arr[-1], floor_scale=DEFAULT_FLOOR_SCALE)
    return LimitEstimate(value=aitken_correct(window), method="extrapolation")


def acceleration_ratio(
    raw: Sequence[Vector] | np.ndarray,
    accel: Sequence[Vector] | np.ndarray,
    limit: Vector | float,
    floor_scale: float = RATIO_FLOOR_SCALE,
) -> list[float]:
    """Error-contraction ratios ||accel_k - L|| / ||raw_k - L||.

    ``accel`` must be the two-term-lookahead correction of ``raw`` (length
    N-2, term k from window k..k+2).  Ratios stop at the first index where
    the raw error has already hit the limit floor; past it they would be
    quotient noise.
    """
    raw_arr = _as_rows(raw)
    acc_arr = _as_rows(accel)
    if acc_arr.shape[0] != raw_arr.shape[0] - 2:
        raise LengthMismatchError(
            f"corrected length {acc_arr.shape[0]} != raw length {raw_arr.shape[0]} - 2"
        )
    lim = np.atleast_1d(np.asarray(limit, dtype=float))
    floor = floor_scale * (1.0 + float(np.linalg.norm(lim)))
    ratios: list[float] = []
    for k in range(acc_arr.shape[0]):
        den = float(np.linalg.norm(raw_arr[k] - lim))
        if den <= floor:
            break
        ratios.append(float(np.linalg.norm(acc_arr[k] - lim)) / den)
    return ratios


def sequences_equivalent(a, b, tol: float) -> bool:
    """True when both sequences converge to the same limit within tol.

    Comparison scale is 1 + the larger limit norm, keeping the predicate
    symmetric in its arguments.
    """
    la = estimate_limit(a).value
    lb = estimate_limit(b).value
    scale = 1.0 + max(float(np.linalg.norm(la)), float(np.linalg.norm(lb)))
    return bool(np.linalg.norm(la - lb) <= tol * scale)


def limit_identity_residuals(trace: IterationTrace) -> np.ndarray:
    """Residual stream of the limit form of the step-coupling identity.

    Substitutes the estimated limits of both s-image sequences into
    [1 + a_n (b_n - 1)] L_z - (1 - a_n) L_y - a_n b_n t^n(y_n) and returns
    the norms per step.  For convergent traces the stream trends to zero;
    no verdict is attached because that conclusion needs the product
    a_n * b_n to stay away from zero.
    """
    l_z = estimate_limit(trace.sz).value
    l_y = estimate_limit(trace.sy).value
    a, b = trace.a_vals, trace.b_vals
    out = np.empty(trace.n_raw)
    for n in range(trace.n_raw):
        expr = (1.0 + a[n] * (b[n] - 1.0)) * l_z - (1.0 - a[n]) * l_y - a[n] * b[n] * trace.ty[n]
        out[n] = np.linalg.norm(expr)
    return out


@dataclass
class ConvergenceReport:
    """Rates and limits for one raw/corrected sequence pair."""

    estimated_limit: Vector
    limit_method: str
    error_norms: np.ndarray
    step_ratios: list
    accel_ratios: list
    equivalent: Optional[bool] = None
    notes: list = field(default_factory=list)


def build_convergence_report(
    raw,
    accel,
    equivalence_tol: float = 1e-6,
) -> ConvergenceReport:
    """Assemble limit, per-step rates and correction ratios for a sequence pair."""
    raw_arr = _as_rows(raw)
    est = estimate_limit(raw_arr)
    lim = est.value
    errors = np.linalg.norm(raw_arr - lim[None, :], axis=1)
    floor = RATIO_FLOOR_SCALE * (1.0 + float(np.linalg.norm(lim)))
    step_ratios = [
        float(errors[k + 1] / errors[k]) for k in range(len(errors) - 1) if errors[k] > floor
    ]
    accel_ratios = acceleration_ratio(raw_arr, accel, lim)
    equivalent = None
    notes = [f"limit via {est.method}"]
    try:
        equivalent = sequences_equivalent(raw_arr, accel, equivalence_tol)
    except (NotConvergingError, SequenceTooShortError) as exc:
        notes.append(f"equivalence not decidable: {exc}")
    return ConvergenceReport(
        estimated_limit=lim,
        limit_method=est.method,
        error_norms=errors,
        step_ratios=step_ratios,
        accel_ratios=accel_ratios,
        equivalent=equivalent,
        notes=notes,
    )
