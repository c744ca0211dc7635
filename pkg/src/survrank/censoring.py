"""Right-censoring simulation, observed datasets, and the censoring curve.

The observed data for a subject is (x, u, delta) with u = min(T, C) and
delta = 1(C >= T); censoring is independent of the covariates. Every inverse
weighting formula downstream divides by powers of G(t) = P(C > t), estimated
here by the Kaplan-Meier product-limit applied to censoring events. The
estimate is floored at ``floor_eps`` (default 0.05) so weights stay bounded by
1/floor_eps^2 where the tail of G-hat is unreliable.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ExponentialCensoring",
    "UniformCensoring",
    "FixedCensoring",
    "Dataset",
    "CensoringCurve",
    "ExactCensoringCurve",
    "sample_censoring",
    "apply_censoring",
    "make_observed",
    "fit_km_censoring",
    "ipcw_weight",
    "calibrate_exponential_rate",
    "write_dataset_csv",
    "read_dataset_csv",
    "dataset_to_csv_text",
]

DEFAULT_FLOOR_EPS = 0.05


@dataclass(frozen=True)
class ExponentialCensoring:
    rate: float

    def __post_init__(self):
        if not (self.rate > 0):
            raise ValueError("censoring rate must be > 0")


@dataclass(frozen=True)
class UniformCensoring:
    high: float

    def __post_init__(self):
        if not (self.high > 0):
            raise ValueError("uniform censoring bound must be > 0")


@dataclass(frozen=True)
class FixedCensoring:
    """Administrative censoring at a deterministic time."""

    time: float

    def __post_init__(self):
        if not (self.time > 0):
            raise ValueError("fixed censoring time must be > 0")


def sample_censoring(cmodel, n: int, rng: np.random.Generator) -> np.ndarray:
    """Censoring time draws; ``cmodel=None`` means no censoring (+inf)."""
    if cmodel is None:
        return np.full(n, np.inf)
    if isinstance(cmodel, ExponentialCensoring):
        return rng.exponential(1.0 / cmodel.rate, size=n)
    if isinstance(cmodel, UniformCensoring):
        return rng.uniform(0.0, cmodel.high, size=n)
    if isinstance(cmodel, FixedCensoring):
        return np.full(n, cmodel.time)
    raise ValueError(f"unknown censoring model: {cmodel!r}")


def apply_censoring(times, cmodel, rng: np.random.Generator):
    """(u, delta) from event times and a censoring model; delta = 1(C >= T).

    Ties between event and censoring time count as events, matching the
    indicator as written.
    """
    t = np.asarray(times, dtype=float)
    if np.any(t <= 0):
        raise ValueError("event times must be > 0")
    c = sample_censoring(cmodel, t.size, rng)
    u = np.minimum(t, c)
    delta = (c >= t).astype(np.uint8)
    return u, delta


@dataclass(frozen=True)
class Dataset:
    """Observed rows (x, u, delta); immutable, validated at construction."""

    x: np.ndarray
    u: np.ndarray
    delta: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        u = np.asarray(self.u, dtype=float)
        delta = np.asarray(self.delta, dtype=np.uint8)
        if x.ndim != 2:
            raise ValueError("x must be a 2-D array of covariate rows")
        if x.shape[0] == 0:
            raise ValueError("dataset must have at least one row")
        if u.shape != (x.shape[0],) or delta.shape != (x.shape[0],):
            raise ValueError("u and delta must match the number of rows of x")
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(u)):
            raise ValueError("covariates and observed times must be finite")
        if np.any(u <= 0):
            raise ValueError("observed times must be > 0")
        if not np.all((delta == 0) | (delta == 1)):
            raise ValueError("delta must be 0/1")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "delta", delta)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    @property
    def censored_fraction(self) -> float:
        return float(1.0 - self.delta.mean())


def make_observed(X, times, cmodel, rng: np.random.Generator) -> Dataset:
    u, delta = apply_censoring(times, cmodel, rng)
    return Dataset(x=np.atleast_2d(X), u=u, delta=delta)


@dataclass(frozen=True)
class CensoringCurve:
    """Right-continuous step estimate of G(t) = P(C > t), floored below.

    ``values[i]`` is the (floored) estimate on [jump_times[i], jump_times[i+1]);
    the curve is 1 before the first jump.
    """

    jump_times: np.ndarray
    values: np.ndarray
    floor_eps: float = DEFAULT_FLOOR_EPS

    def __post_init__(self):
        jt = np.asarray(self.jump_times, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if jt.shape != vals.shape or jt.ndim != 1:
            raise ValueError("jump_times and values must be 1-D arrays of equal length")
        if np.any(np.diff(jt) <= 0):
            raise ValueError("jump_times must be strictly increasing")
        if not (self.floor_eps > 0):
            raise ValueError("floor_eps must be > 0")
        if np.any(np.diff(vals) > 1e-12):
            raise ValueError("values must be non-increasing")
        if vals.size and (vals[0] > 1.0 or vals[-1] < self.floor_eps - 1e-12):
            raise ValueError("values must lie in [floor_eps, 1]")
        object.__setattr__(self, "jump_times", jt)
        object.__setattr__(self, "values", np.maximum(vals, self.floor_eps))

    def evaluate(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("the censoring curve is defined for t >= 0")
        if self.jump_times.size == 0:  # no censoring events observed
            out = np.ones_like(t)
            return out if out.ndim else float(out)
        idx = np.searchsorted(self.jump_times, t, side="right")
        out = np.where(idx == 0, 1.0, self.values[np.maximum(idx - 1, 0)])
        return out if out.ndim else float(out)

    def at(self, t: float) -> float:
        return float(self.evaluate(t))


class ExactCensoringCurve:
    """Wraps a known closed-form G for tests and oracle comparisons."""

    def __init__(self, fn, floor_eps: float = 0.0):
        self.fn = fn
        self.floor_eps = floor_eps

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("the censoring curve is defined for t >= 0")
        vals = np.asarray(self.fn(t), dtype=float)
        if self.floor_eps > 0:
            vals = np.maximum(vals, self.floor_eps)
        return vals if vals.ndim else float(vals)

    def at(self, t: float) -> float:
        return float(self.evaluate(t))


def fit_km_censoring(dataset: Dataset, floor_eps: float = DEFAULT_FLOOR_EPS) -> CensoringCurve:
    """Product-limit estimate of P(C > t), treating censorings as the events.

    G-hat(t) = prod over censoring times u_i <= t of (1 - d_i / n_i), with tied
    times grouped; output is independent of input row order.
    """
    if dataset.n == 0:
        raise ValueError("cannot fit a censoring curve on an empty dataset")
    order = np.argsort(dataset.u, kind="stable")
    u = dataset.u[order]
    cens = (dataset.delta[order] == 0).astype(int)

    uniq, first = np.unique(u, return_index=True)
    # at-risk count just before each unique time; deaths here are censorings.
    n_at_risk = dataset.n - first
    d = np.add.reduceat(cens, first)

    keep = d > 0
    if not np.any(keep):
        return CensoringCurve(
            jump_times=np.asarray([]), values=np.asarray([]), floor_eps=floor_eps
        )
    factors = 1.0 - d[keep] / n_at_risk[keep]
    values = np.maximum(np.cumprod(factors), floor_eps)
    return CensoringCurve(jump_times=uniq[keep], values=values, floor_eps=floor_eps)


def ipcw_weight(curve, u, delta, power: int = 2):
    """delta / G-hat(u)^power; zero for censored rows, bounded by the curve floor."""
    if power not in (1, 2):
        raise ValueError("power must be 1 or 2")
    g = np.asarray(curve.evaluate(u), dtype=float)
    delta = np.asarray(delta, dtype=float)
    out = delta / g**power
    return out if out.ndim else float(out)


def calibrate_exponential_rate(times, target: float, tol: float = 1e-10) -> float:
    """Exponential censoring rate c with mean_i P(C < t_i) = target, by bisection.

    With C ~ Exp(c) independent of the sample, the expected censored fraction
    over the given event times is mean(1 - exp(-c * t)).
    """
    t = np.asarray(times, dtype=float)
    if not (0.0 < target < 1.0):
        raise ValueError("target censored fraction must lie in (0, 1)")

    def frac(c):
        return float(np.mean(-np.expm1(-c * t)))

    lo, hi = 0.0, 1.0
    while frac(hi) < target:
        hi *= 2.0
        if hi > 1e12:
            raise RuntimeError("failed to bracket the censoring rate")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if frac(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol * max(hi, 1.0):
            break
    return 0.5 * (lo + hi)


# --- CSV round trip: header x1,...,xd,u,delta ------------------------------


def dataset_to_csv_text(dataset: Dataset) -> str:
    buf = io.StringIO()
    cols = [f"x{i + 1}" for i in range(dataset.d)] + ["u", "delta"]
    buf.write(",".join(cols) + "\n")
    for i in range(dataset.n):
        row = [repr(float(v)) for v in dataset.x[i]]
        row.append(repr(float(dataset.u[i])))
        row.append(str(int(dataset.delta[i])))
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


def write_dataset_csv(dataset: Dataset, path) -> None:
    with open(path, "w") as fh:
        fh.write(dataset_to_csv_text(dataset))


def read_dataset_csv(path) -> Dataset:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if len(header) < 3 or header[-2:] != ["u", "delta"]:
            raise ValueError("expected header x1,...,xd,u,delta")
        d = len(header) - 2
        expected = [f"x{i + 1}" for i in range(d)]
        if header[:d] != expected:
            raise ValueError("expected covariate columns named x1,...,xd in order")
        rows = np.loadtxt(fh, delimiter=",", ndmin=2)
    if rows.shape[1] != d + 2:
        raise ValueError("row width does not match the header")
    return Dataset(x=rows[:, :d], u=rows[:, d], delta=rows[:, d + 1].astype(np.uint8))
