"""Seeded Gaussian data simulation, sample covariance, dense eigensolving and
the one-column-left-out perturbation construction."""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import (
    IndexOutOfRangeError,
    NotSymmetricError,
    ShapeMismatchError,
    UnknownStatisticError,
)
from .spectrum import Spectrum, SpectrumRole, sort_spectrum

DATA_MAGIC = b"SPRC"


@dataclass(frozen=True)
class ExperimentShape:
    """Dimension p, sample count n and their ratio c = n / p."""

    p: int
    n: int
    master_seed: int = 0

    def __post_init__(self):
        if self.p < 1 or self.n < 1:
            raise ValueError("p and n must be at least 1")

    @property
    def c(self) -> float:
        return self.n / self.p

    @classmethod
    def from_ratio(cls, p: int, c: float, master_seed: int = 0) -> "ExperimentShape":
        return cls(p=p, n=max(1, round(c * p)), master_seed=master_seed)


@dataclass(frozen=True)
class GroundTruthModel:
    """Menu of ground-truth covariance spectra (diagonal population models)."""

    kind: str
    params: tuple = ()

    @classmethod
    def identity(cls) -> "GroundTruthModel":
        return cls("identity")

    @classmethod
    def linear(cls, lo: float, hi: float) -> "GroundTruthModel":
        return cls("linear", (float(lo), float(hi)))

    @classmethod
    def geometric(cls, lo: float, hi: float) -> "GroundTruthModel":
        return cls("geometric", (float(lo), float(hi)))

    @classmethod
    def two_cluster(cls, v1: float, v2: float, fraction: float) -> "GroundTruthModel":
        return cls("two_cluster", (float(v1), float(v2), float(fraction)))

    @classmethod
    def explicit(cls, values: Sequence[float]) -> "GroundTruthModel":
        return cls("explicit", tuple(float(v) for v in values))

    def realize(self, p: int) -> Spectrum:
        if self.kind == "identity":
            vals = np.ones(p)
        elif self.kind == "linear":
            lo, hi = self.params
            vals = np.linspace(hi, lo, p)
        elif self.kind == "geometric":
            lo, hi = self.params
            vals = np.geomspace(hi, lo, p)
        elif self.kind == "two_cluster":
            v1, v2, frac = self.params
            k = max(1, min(p - 1, round(frac * p))) if p > 1 else p
            vals = np.concatenate([np.full(k, max(v1, v2)), np.full(p - k, min(v1, v2))])
        elif self.kind == "explicit":
            if len(self.params) != p:
                raise ShapeMismatchError(
                    f"explicit model has {len(self.params)} values, expected {p}"
                )
            vals = np.array(self.params)
        else:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if np.any(vals <= 0):
            raise ValueError("ground-truth variances must be positive")
        return sort_spectrum(vals, SpectrumRole.GROUND_TRUTH)


@dataclass(frozen=True)
class DataMatrix:
    """n x p Gaussian data with independent columns of variance sigma2_j."""

    entries: np.ndarray
    generating_shape: ExperimentShape

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=float)
        e.flags.writeable = False
        object.__setattr__(self, "entries", e)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def p(self) -> int:
        return self.entries.shape[1]

    def to_bytes(self) -> bytes:
        header = DATA_MAGIC + struct.pack("<II", self.n, self.p) + b"\x00" * 4
        return header + np.ascontiguousarray(self.entries, dtype="<f8").tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes, shape: Optional[ExperimentShape] = None) -> "DataMatrix":
        if blob[:4] != DATA_MAGIC:
            raise ValueError("bad magic, not a SPRC data blob")
        n, p = struct.unpack("<II", blob[4:12])
        data = np.frombuffer(blob[16:], dtype="<f8").reshape(n, p)
        return cls(data.copy(), shape or ExperimentShape(p=p, n=n))

    def to_csv(self) -> str:
        lines = [",".join(f"col{j}" for j in range(self.p))]
        for row in self.entries:
            lines.append(",".join(repr(float(v)) for v in row))
        return "\n".join(lines) + "\n"


def trial_rng(master_seed: int, trial: int = 0) -> np.random.Generator:
    """Counter-based generator keyed on (master_seed, trial): trials are
    independent streams regardless of execution order."""
    return np.random.Generator(np.random.Philox(key=[master_seed, trial]))


def gen_data_matrix(
    shape: ExperimentShape,
    model: GroundTruthModel,
    trial: int = 0,
    center: bool = False,
) -> DataMatrix:
    """Draw the n x p data matrix with N(0, sigma2_j) columns.

    The population mean is known to be zero, so columns are not centered
    unless explicitly requested.
    """
    truth = model.realize(shape.p)
    if truth.p != shape.p:
        raise ShapeMismatchError("model dimension does not match shape")
    rng = trial_rng(shape.master_seed, trial)
    z = rng.standard_normal((shape.n, shape.p))
    # truth is descending; column j gets the j-th largest variance
    x = z * np.sqrt(truth.values)[None, :]
    if center:
        x = x - x.mean(axis=0, keepdims=True)
    return DataMatrix(x, shape)


def sample_covariance(x: DataMatrix) -> np.ndarray:
    """X^T X / n, symmetrized exactly."""
    s = x.entries.T @ x.entries / x.n
    return (s + s.T) / 2.0


def eigh_descending(m: np.ndarray):
    """Raw descending eigendecomposition (eigenvalues may be negative)."""
    m = np.asarray(m, dtype=float)
    scale = np.max(np.abs(m)) if m.size else 0.0
    if scale and np.max(np.abs(m - m.T)) > 1e-12 * scale:
        raise NotSymmetricError("matrix is not symmetric to 1e-12 relative")
    w, v = np.linalg.eigh((m + m.T) / 2.0)
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def sym_eigen(m: np.ndarray, want_basis: bool = False, role: SpectrumRole = SpectrumRole.SAMPLE):
    """Descending eigendecomposition of a symmetric PSD matrix.

    Tiny negative eigenvalues (roundoff) are clamped to zero by
    sort_spectrum; genuinely negative ones raise NegativeEigenvalueError.
    Returns a Spectrum, or (Spectrum, basis) with basis columns aligned to
    the descending eigenvalues.
    """
    w, v = eigh_descending(m)
    spec = sort_spectrum(w, role)
    if want_basis:
        return spec, v
    return spec


@dataclass(frozen=True)
class PerturbationColumn:
    """i-th row/column of the sample covariance expressed in the principal
    basis of the one-column-zeroed (restricted) sample covariance."""

    i: int
    diag_entry: float
    off_entries: np.ndarray
    nu: Spectrum

    def __post_init__(self):
        off = np.asarray(self.off_entries, dtype=float)
        off.flags.writeable = False
        object.__setattr__(self, "off_entries", off)
        if off.size != self.nu.p:
            raise ShapeMismatchError("off_entries must align with nu")


def restricted_covariance_spectrum(x: DataMatrix, i: int) -> Spectrum:
    """Spectrum of the sample covariance with column i zeroed, structural zero
    removed (restricted role)."""
    s = sample_covariance(x)
    keep = np.arange(x.p) != i
    sub = s[np.ix_(keep, keep)]
    w = np.linalg.eigvalsh(sub)
    return sort_spectrum(np.clip(w, 0.0, None), SpectrumRole.RESTRICTED)


def perturbation_column(x: DataMatrix, i: int) -> PerturbationColumn:
    """Rotate the i-th covariance column into the restricted principal basis.

    The structural zero eigenpair (the i-th canonical vector) is removed by
    index: the restricted matrix is taken as the covariance with row and
    column i deleted, so only the p-1 informative eigenpairs appear.
    """
    if not 0 <= i < x.p:
        raise IndexOutOfRangeError(f"column {i} outside [0, {x.p})")
    if x.p < 2:
        raise IndexOutOfRangeError("need at least two columns")
    s = sample_covariance(x)
    keep = np.arange(x.p) != i
    sub = s[np.ix_(keep, keep)]
    w, v = np.linalg.eigh(sub)
    order = np.argsort(-w, kind="stable")
    # clip after ordering so off_entries stay aligned with nu index-wise
    nu = Spectrum(np.clip(w[order], 0.0, None), SpectrumRole.RESTRICTED)
    col = s[keep, i]
    off = v[:, order].T @ col
    return PerturbationColumn(i=i, diag_entry=float(s[i, i]), off_entries=off, nu=nu)


# -- Monte Carlo ensembles -------------------------------------------------


def _stat_top_eigenvalue(x: DataMatrix) -> np.ndarray:
    return np.array([sym_eigen(sample_covariance(x))[0]])


def _stat_trace(x: DataMatrix) -> np.ndarray:
    return np.array([np.trace(sample_covariance(x))])


def _stat_spectrum(x: DataMatrix) -> np.ndarray:
    return sym_eigen(sample_covariance(x)).values.copy()


STATISTICS: dict = {
    "top_eigenvalue": _stat_top_eigenvalue,
    "trace": _stat_trace,
    "spectrum": _stat_spectrum,
}

QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)


@dataclass(frozen=True)
class EnsembleRecord:
    shape: ExperimentShape
    model: GroundTruthModel
    trials: int
    statistic: str
    mean: np.ndarray
    sd: np.ndarray
    quantiles: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "config": {
                    "p": self.shape.p,
                    "n": self.shape.n,
                    "c": self.shape.c,
                    "master_seed": self.shape.master_seed,
                    "model": self.model.kind,
                    "model_params": list(self.model.params),
                },
                "trials": self.trials,
                "statistics": {
                    "name": self.statistic,
                    "mean": list(self.mean),
                    "sd": list(self.sd),
                    "quantiles": {str(q): list(v) for q, v in self.quantiles.items()},
                },
            },
            indent=2,
        )


def mc_ensemble(
    shape: ExperimentShape,
    model: GroundTruthModel,
    trials: int,
    statistic: Union[str, Callable[[DataMatrix], np.ndarray]] = "top_eigenvalue",
) -> EnsembleRecord:
    """Run independent seeded trials and reduce a named per-trial statistic.

    Per-trial streams are keyed on (master_seed, trial), so results do not
    depend on execution order or parallelism.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if callable(statistic):
        fn, name = statistic, getattr(statistic, "__name__", "custom")
    else:
        if statistic not in STATISTICS:
            raise UnknownStatisticError(f"unknown statistic {statistic!r}")
        fn, name = STATISTICS[statistic], statistic
    rows = np.array([fn(gen_data_matrix(shape, model, trial=t)) for t in range(trials)])
    qs = {q: np.quantile(rows, q, axis=0) for q in QUANTILES}
    sd = rows.std(axis=0, ddof=1) if trials > 1 else np.zeros(rows.shape[1])
    return EnsembleRecord(
        shape=shape,
        model=model,
        trials=trials,
        statistic=name,
        mean=rows.mean(axis=0),
        sd=sd,
        quantiles=qs,
    )
