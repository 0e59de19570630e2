"""Kolm-Pollak EDE and related distribution statistics.

Only the disamenity orientation is supported (aversion parameter ``epsilon < 0``,
so ``kappa = alpha * epsilon < 0``): larger values are worse and the EDE lies
between the weighted mean and the maximum.
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from .errors import DataError

# exponents above this are evaluated in log space
EXP_LIMIT = 700.0


class Distribution:
    """Weighted distribution of nonnegative values (meters) with weights (people)."""

    def __init__(self, values, weights=None):
        z = np.atleast_1d(np.asarray(values, dtype=float))
        p = np.ones_like(z) if weights is None else np.atleast_1d(np.asarray(weights, dtype=float))
        if z.shape != p.shape or z.ndim != 1:
            raise DataError("values and weights must be 1-d arrays of equal length")
        if len(z) == 0:
            raise DataError("empty distribution")
        if not np.isfinite(z).all() or (z < 0).any():
            raise DataError("distribution values must be finite and nonnegative")
        if not np.isfinite(p).all() or (p < 0).any():
            raise DataError("distribution weights must be finite and nonnegative")
        T = float(p.sum())
        if not T > 0:
            raise DataError("distribution has zero total weight")
        z.setflags(write=False)
        p.setflags(write=False)
        self.values = z
        self.weights = p
        self.T = T

    def __len__(self):
        return len(self.values)

    def __repr__(self):
        return f"Distribution(n={len(self)}, T={self.T:g})"

    @property
    def mean(self) -> float:
        return float(np.dot(self.weights, self.values) / self.T)

    @property
    def max(self) -> float:
        return float(self.values[self.weights > 0].max())


@dataclass(frozen=True)
class InequalityParams:
    epsilon: float
    alpha: float
    kappa: float

    def __post_init__(self):
        if not self.epsilon < 0:
            raise DataError("epsilon must be negative (disamenity orientation)")
        if not self.alpha > 0:
            raise DataError("alpha must be positive")
        if self.kappa != self.alpha * self.epsilon:
            raise DataError("kappa must equal alpha * epsilon")

    @classmethod
    def from_alpha(cls, alpha: float, epsilon: float) -> "InequalityParams":
        return cls(float(epsilon), float(alpha), float(alpha) * float(epsilon))

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class SummaryStats:
    mean: float
    max: float
    stdev: float
    kp_ede: float

    def to_dict(self, params: InequalityParams | None = None):
        d = asdict(self)
        if params is not None:
            d.update(params.to_dict())
        return d


def _check_kappa(kappa):
    if not kappa < 0:
        raise DataError(f"kappa must be negative, got {kappa}")


def alpha(dist: Distribution) -> float:
    """Normalization factor sum(p z) / sum(p z^2), in 1/meters."""
    num = float(np.dot(dist.weights, dist.values))
    den = float(np.dot(dist.weights, dist.values ** 2))
    if not den > 0:
        raise DataError("alpha undefined for an all-zero distribution")
    return num / den


def log_linear_proxy(dist: Distribution, kappa: float) -> float:
    """``log(sum p_r exp(-kappa z_r))``, safe for any exponent."""
    _check_kappa(kappa)
    w = dist.weights
    pos = w > 0
    return float(logsumexp(-kappa * dist.values[pos], b=w[pos]))


def linear_proxy(dist: Distribution, kappa: float) -> float:
    """Sum of ``p_r exp(-kappa z_r)``."""
    _check_kappa(kappa)
    expo = -kappa * dist.values
    if expo.max() <= EXP_LIMIT:
        return float(np.dot(dist.weights, np.exp(expo)))
    lp = log_linear_proxy(dist, kappa)
    if lp > math.log(np.finfo(float).max):
        raise OverflowError("linear proxy overflows double precision; "
                            "use log_linear_proxy, a smaller |epsilon|, or d_max sparsification")
    return math.exp(lp)


def kp_ede(dist: Distribution, kappa: float) -> float:
    """Population-weighted Kolm-Pollak EDE for ``kappa < 0`` (meters)."""
    _check_kappa(kappa)
    z, w = dist.values, dist.weights
    zmax = float(z[w > 0].max())
    # factor exp(-kappa * zmax) out of the sum; remaining exponents are <= 0
    s = float(np.dot(w, np.exp(-kappa * (z - zmax)))) / dist.T
    return zmax - math.log(s) / kappa


def kp_ede_auto(dist: Distribution, epsilon: float) -> tuple[float, InequalityParams]:
    """EDE with ``alpha`` computed from ``dist`` itself."""
    if not epsilon < 0:
        raise DataError("epsilon must be negative")
    params = InequalityParams.from_alpha(alpha(dist), epsilon)
    return kp_ede(dist, params.kappa), params


def ede_from_proxy(proxy: float, kappa: float, T: float) -> float:
    """Invert the linear proxy: ``-(1/kappa) ln(proxy / T)``."""
    _check_kappa(kappa)
    if not proxy > 0:
        raise DataError("proxy must be positive")
    return -math.log(proxy / T) / kappa


def ede_from_log_proxy(log_proxy: float, kappa: float, T: float) -> float:
    _check_kappa(kappa)
    return -(log_proxy - math.log(T)) / kappa


def epsilon_out(alpha_in: float, epsilon_0: float, alpha_out: float) -> float:
    """Aversion actually represented by a solution whose own alpha is ``alpha_out``."""
    if not epsilon_0 < 0:
        raise DataError("epsilon_0 must be negative")
    if alpha_in == 0 or alpha_out == 0:
        raise DataError("alpha values must be nonzero")
    return alpha_in * epsilon_0 / alpha_out


def weighted_stdev(dist: Distribution) -> float:
    """Standard deviation with frequency weights (divisor ``T - 1``)."""
    if dist.T <= 1:
        return 0.0
    mu = dist.mean
    ss = float(np.dot(dist.weights, (dist.values - mu) ** 2))
    return math.sqrt(ss / (dist.T - 1))


def summary(dist: Distribution, params: InequalityParams) -> SummaryStats:
    return SummaryStats(dist.mean, dist.max, weighted_stdev(dist), kp_ede(dist, params.kappa))


def load_distribution(path) -> Distribution:
    """Read a ``value_meters,weight`` CSV."""
    path = Path(path)
    values, weights = [], []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames or not {"value_meters", "weight"} <= set(reader.fieldnames):
            raise DataError(f"{path.name}: expected header value_meters,weight")
        for row in reader:
            try:
                values.append(float(row["value_meters"]))
                weights.append(float(row["weight"]))
            except (TypeError, ValueError):
                raise DataError(f"{path.name}: non-numeric row {row}") from None
    return Distribution(values, weights)


def write_distribution(dist: Distribution, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["value_meters", "weight"])
        for z, p in zip(dist.values, dist.weights):
            w.writerow([repr(float(z)), repr(float(p))])
