"""Forward spectrum-shift prediction, the algebraic inverse estimator, the
insertion-location function h, and the sample-size validity condition."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .errors import (
    PoleHitError,
    SizeMismatchError,
    WindowTooWideError,
    ZeroGapError,
)
from .spectrum import (
    ExclusionWindow,
    POLE_GUARD,
    Spectrum,
    match_index,
    spectral_gap,
)

# Below this denominator the inverse correction would amplify the sample
# value by 20x or more; the estimator is outside its validity regime.
DENOM_FLOOR = 0.05

REPORT_HEADER = "index,sample,estimate,truth,raw_rel_err,recon_rel_err,valid"


def interior_indices(p: int) -> np.ndarray:
    """0-based indices in the interior band [5%, 95%] of a p-spectrum."""
    lo = math.ceil(0.05 * p)
    hi = math.floor(0.95 * p)
    return np.arange(lo - 1, hi)


def _guarded_sum(values: np.ndarray, z: float, skip: np.ndarray) -> float:
    """sum of v / (v - z) over non-skipped entries, with the pole guard."""
    keep = ~skip
    diff = values - z
    atom = (diff == 0.0) & keep
    keep &= ~atom
    close = keep & (np.abs(diff) < POLE_GUARD * np.abs(values))
    if np.any(close):
        raise PoleHitError(f"z={z} collides with value {values[close][0]}")
    return float(np.sum(values[keep] / diff[keep]))


def forward_shift(truth: Spectrum, sample: Spectrum, i: int, n: int) -> float:
    """Predicted shift of the i-th ground-truth eigenvalue, using the
    nearest sample eigenvalue as evaluation point:

        delta_i ~ -(sigma2_i / n) * sum_{j != i} sigma2_j / (sigma2_j - s*)
    """
    if truth.p != sample.p:
        raise SizeMismatchError("truth and sample spectra must have equal length")
    i_star = match_index(truth[i], sample)
    s_star = sample[i_star]
    skip = np.zeros(truth.p, dtype=bool)
    skip[i] = True
    total = _guarded_sum(truth.values, s_star, skip)
    return float(-(truth[i] / n) * total)


def large_c_forward(
    sigma2_i: float, sample: Spectrum, i: int, n: int, K: int
) -> float:
    """Truncated-window forward prediction with the sample spectrum standing
    in for the restricted one."""
    if 2 * K + 1 >= sample.p:
        raise WindowTooWideError(f"window K={K} covers the whole spectrum p={sample.p}")
    window = ExclusionWindow(center=i, half_width=K)
    skip = window.mask(sample.p)
    total = _guarded_sum(sample.values, sample[i], skip)
    return float(-(sigma2_i / n) * total)


@dataclass(frozen=True)
class IndexEstimate:
    index: int
    sample: float
    estimate: float
    truth: Optional[float]
    raw_rel_err: Optional[float]
    recon_rel_err: Optional[float]
    valid: bool


@dataclass(frozen=True)
class ReconstructionReport:
    rows: List[IndexEstimate]
    c: float
    K: int
    median_raw_rel_err: Optional[float] = None
    median_recon_rel_err: Optional[float] = None
    mean_raw_rel_err: Optional[float] = None
    mean_recon_rel_err: Optional[float] = None

    @property
    def estimates(self) -> np.ndarray:
        return np.array([r.estimate for r in self.rows])

    @property
    def valid_mask(self) -> np.ndarray:
        return np.array([r.valid for r in self.rows])

    def to_csv(self) -> str:
        lines = [REPORT_HEADER]
        for r in self.rows:
            truth = "" if r.truth is None else repr(r.truth)
            raw = "" if r.raw_rel_err is None else repr(r.raw_rel_err)
            rec = "" if r.recon_rel_err is None else repr(r.recon_rel_err)
            lines.append(
                f"{r.index},{r.sample!r},{r.estimate!r},{truth},{raw},{rec},{int(r.valid)}"
            )
        return "\n".join(lines) + "\n"

    def to_json(self, config_echo: Optional[dict] = None) -> str:
        return json.dumps(
            {
                "config": config_echo or {"c": self.c, "K": self.K},
                "aggregates": {
                    "median_raw_rel_err": self.median_raw_rel_err,
                    "median_recon_rel_err": self.median_recon_rel_err,
                    "mean_raw_rel_err": self.mean_raw_rel_err,
                    "mean_recon_rel_err": self.mean_recon_rel_err,
                },
                "rows": [
                    {
                        "index": r.index,
                        "sample": r.sample,
                        "estimate": r.estimate,
                        "truth": r.truth,
                        "raw_rel_err": r.raw_rel_err,
                        "recon_rel_err": r.recon_rel_err,
                        "valid": r.valid,
                    }
                    for r in self.rows
                ],
            },
            indent=2,
        )


def stieltjes_rhs(sample: Spectrum, i: int, form: str = "direct") -> float:
    """The relative-error right-hand side in its two algebraic forms.

    "direct":    -(1/p) sum_{j != i} s_j / (s_j - s_i)
    "transform": -1 - s_i * (1/p) sum_{j != i} 1 / (s_j - s_i) + 1/p

    The two agree to machine precision (the extra 1/p adjusts the leave-
    one-out convention of the empirical Stieltjes transform).
    """
    p = sample.p
    s_i = sample[i]
    skip = np.zeros(p, dtype=bool)
    skip[i] = True
    if form == "direct":
        return -_guarded_sum(sample.values, s_i, skip) / p
    if form == "transform":
        keep = ~skip
        diff = sample.values - s_i
        atom = (diff == 0.0) & keep
        keep &= ~atom
        close = keep & (np.abs(diff) < POLE_GUARD * np.abs(sample.values))
        if np.any(close):
            raise PoleHitError("pole in transform form")
        n_terms = int(np.sum(keep))
        return -(n_terms / p) - s_i * float(np.sum(1.0 / diff[keep])) / p
    raise ValueError(f"unknown form {form!r}")


def invert_spectrum(
    sample: Spectrum,
    c: float,
    K: int = 2,
    truth: Optional[Spectrum] = None,
) -> ReconstructionReport:
    """Reconstruct the population spectrum by algebraically inverting the
    forward approximation:

        sigma2_i = s_i / (1 - (1/n) sum_{j outside window} s_j / (s_j - s_i))

    Indices where the denominator drops to the floor, the sum degenerates,
    or the estimate goes negative are flagged invalid and fall back to the
    raw sample value.
    """
    p = sample.p
    if p < 3:
        raise SizeMismatchError("need p >= 3 to invert")
    if c <= 0:
        raise ValueError("c must be positive")
    n = c * p
    rows = []
    for i in range(p):
        window = ExclusionWindow(center=i, half_width=K)
        skip = window.mask(p)
        keep = ~skip
        diff = sample.values - sample[i]
        atoms = (diff == 0.0) & keep
        live = keep & ~atoms
        close = live & (np.abs(diff) < POLE_GUARD * np.abs(sample.values))
        live &= ~close
        s_i = sample[i]
        if not np.any(live):
            est, valid = s_i, False
        else:
            total = float(np.sum(sample.values[live] / diff[live]))
            denom = 1.0 - total / n
            if denom <= DENOM_FLOOR:
                est, valid = s_i, False
            else:
                est = s_i / denom
                valid = True
                if est < 0:
                    est, valid = 0.0, False
        t = truth[i] if truth is not None else None
        raw = abs(s_i - t) / t if t else None
        rec = abs(est - t) / t if t else None
        rows.append(
            IndexEstimate(
                index=i, sample=s_i, estimate=est, truth=t,
                raw_rel_err=raw, recon_rel_err=rec, valid=valid,
            )
        )
    report = ReconstructionReport(rows=rows, c=c, K=K)
    if truth is not None:
        inner = interior_indices(p)
        raw_errs = np.array([rows[j].raw_rel_err for j in inner])
        rec_errs = np.array([rows[j].recon_rel_err for j in inner])
        report = ReconstructionReport(
            rows=rows, c=c, K=K,
            median_raw_rel_err=float(np.median(raw_errs)),
            median_recon_rel_err=float(np.median(rec_errs)),
            mean_raw_rel_err=float(np.mean(raw_errs)),
            mean_recon_rel_err=float(np.mean(rec_errs)),
        )
    return report


def h_vector(
    sample: Spectrum,
    sigma2_i: float,
    restricted: Spectrum,
    c: float,
    K: int = 2,
):
    """Insertion-location function evaluated at every sample index:

        h_j = s_j - sigma2_i + (1/c)(sigma2_i/p) sum_{s outside window} nu_s / (nu_s - s_j)

    Returns (h values, sign-change index or None).  The sign-change index is
    where h first crosses from positive to negative scanning down the
    spectrum; it estimates where the inserted eigenvalue landed.
    """
    p = sample.p
    if restricted.p != p - 1:
        raise SizeMismatchError("restricted spectrum must be one shorter than sample")
    h = np.empty(p)
    for j in range(p):
        window = ExclusionWindow(center=j, half_width=K)
        skip = window.mask(restricted.p)
        total = _guarded_sum(restricted.values, sample[j], skip)
        h[j] = sample[j] - sigma2_i + (sigma2_i / (c * p)) * total
    crossing = None
    for j in range(1, p):
        if h[j - 1] >= 0 > h[j]:
            crossing = j
            break
    if crossing is None and h[0] < 0:
        crossing = 0
    return h, crossing


def rescaled_a(sigma2_hat: float, sigma2_true: float, c: float) -> float:
    """c * (sample eigenvalue - true eigenvalue), the O(1) rescaled shift."""
    if c <= 0:
        raise ValueError("c must be positive")
    return float(c * (sigma2_hat - sigma2_true))


@dataclass(frozen=True)
class ConditionCheck:
    i: int
    i_star: int
    rhs: float
    n_required: int
    satisfied: Optional[bool]
    C_universal: float
    epsilon: float


def kl_condition(
    truth: Spectrum,
    i: int,
    sample_hint: float,
    C_universal: float = 1.0,
    epsilon: float = 0.5,
    n: Optional[int] = None,
) -> ConditionCheck:
    """Sample-size condition derived from the spectral-norm bound on the
    covariance estimation error:

        sqrt(n) >= C * sigma_i / (eps * sqrt(gap_{i*}))
                     * sqrt(sum_{j != i} sigma2_j / |sigma2_j - hint|)

    sample_hint stands in for the matched sample eigenvalue; i* is the
    ground-truth index nearest the hint.
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if truth.p < 2:
        raise SizeMismatchError("need at least two eigenvalues")
    i_star = match_index(sample_hint, truth)
    gap = spectral_gap(truth, i_star)
    if gap <= 0:
        raise ZeroGapError(f"zero spectral gap at {i_star}")
    diff = np.abs(truth.values - sample_hint)
    keep = np.arange(truth.p) != i
    close = keep & (diff < POLE_GUARD * truth.values)
    if np.any(close):
        raise PoleHitError("sample hint collides with another ground-truth value")
    total = float(np.sum(truth.values[keep] / diff[keep]))
    rhs = C_universal * math.sqrt(truth[i]) / (epsilon * math.sqrt(gap)) * math.sqrt(total)
    n_required = math.ceil(rhs**2)
    satisfied = None if n is None else n >= rhs**2
    return ConditionCheck(
        i=i, i_star=i_star, rhs=rhs, n_required=n_required,
        satisfied=satisfied, C_universal=C_universal, epsilon=epsilon,
    )
