"""Shared domain types: decay laws, model parameters, grids and discrete states.

Everything here is immutable after construction (``FieldPair`` arrays are the
one exception: they belong to the solver run that owns them).
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DomainError, ValidationError


class CaseTag(Enum):
    """Symmetry-classification case of a decay law."""

    I_ARBITRARY = "I"
    II_CONSTANT = "II"
    III_POWER_LAW = "III"
    IV_EXPONENTIAL = "IV"


class DecayLaw:
    """Base for the kappa(t) family; concrete laws implement ``kappa``."""

    def kappa(self, t):
        raise NotImplementedError


def _require_finite(name, value):
    if not np.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class ConstantDecay(DecayLaw):
    """kappa(t) = kappa0 for all t."""

    kappa0: float

    def __post_init__(self):
        _require_finite("kappa0", self.kappa0)

    def kappa(self, t):
        return self.kappa0 * np.ones_like(np.asarray(t, dtype=float)) if np.ndim(t) else self.kappa0

    def cumulative(self, a, b):
        """Exact integral of kappa over [a, b]."""
        return self.kappa0 * (b - a)


@dataclass(frozen=True)
class PowerLawDecay(DecayLaw):
    """kappa(t) = mu / t, defined for t > 0 only."""

    mu: float

    def __post_init__(self):
        _require_finite("mu", self.mu)

    def kappa(self, t):
        if np.any(np.asarray(t) <= 0.0):
            raise DomainError(f"power-law decay is defined for t > 0, got t={t!r}")
        return self.mu / t

    def cumulative(self, a, b):
        if a <= 0.0 or b <= 0.0:
            raise DomainError("power-law decay is defined for t > 0")
        return self.mu * np.log(b / a)


@dataclass(frozen=True)
class ExponentialDecay(DecayLaw):
    """kappa(t) = kappa0 * exp(lam * t)."""

    kappa0: float
    lam: float

    def __post_init__(self):
        _require_finite("kappa0", self.kappa0)
        _require_finite("lam", self.lam)

    def kappa(self, t):
        return self.kappa0 * np.exp(self.lam * np.asarray(t, dtype=float)) if np.ndim(t) \
            else self.kappa0 * np.exp(self.lam * t)

    def cumulative(self, a, b):
        if self.lam == 0.0:
            return self.kappa0 * (b - a)
        return self.kappa0 * (np.exp(self.lam * b) - np.exp(self.lam * a)) / self.lam


@dataclass(frozen=True)
class TabulatedDecay(DecayLaw):
    """Piecewise-linear kappa through strictly increasing (t, kappa) samples.

    Evaluation outside the sample range is a DomainError; no extrapolation.
    """

    times: tuple
    values: tuple

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        values = tuple(float(k) for k in self.values)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        if len(times) != len(values):
            raise ValidationError("times and values must have equal length")
        if len(times) < 2:
            raise ValidationError("tabulated decay needs at least two samples")
        if not all(np.isfinite(times)) or not all(np.isfinite(values)):
            raise ValidationError("tabulated samples must be finite")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValidationError("tabulated times must be strictly increasing")

    def kappa(self, t):
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < self.times[0]) or np.any(t_arr > self.times[-1]):
            raise DomainError(
                f"t={t!r} outside tabulated range [{self.times[0]}, {self.times[-1]}]"
            )
        out = np.interp(t_arr, self.times, self.values)
        return out if np.ndim(t) else float(out)

    def _cum_at(self, t):
        # exact integral of the piecewise-linear interpolant from times[0]
        ts = np.asarray(self.times)
        ks = np.asarray(self.values)
        seg = getattr(self, "_seg", None)
        if seg is None:
            seg = np.concatenate(
                [[0.0], np.cumsum(0.5 * (ks[1:] + ks[:-1]) * np.diff(ts))]
            )
            object.__setattr__(self, "_seg", seg)
        i = int(np.searchsorted(ts, t, side="right")) - 1
        i = min(max(i, 0), ts.size - 2)
        dt = t - ts[i]
        slope = (ks[i + 1] - ks[i]) / (ts[i + 1] - ts[i])
        return float(seg[i] + ks[i] * dt + 0.5 * slope * dt * dt)

    def cumulative(self, a, b):
        self.kappa(a)
        self.kappa(b)
        return self._cum_at(b) - self._cum_at(a)


def evaluate_decay(law, t):
    """Evaluate kappa(t) for any decay law; domain errors propagate."""
    return law.kappa(t)


#: Admitted generator names per classification case, in table row order.
_GENERATORS = {
    CaseTag.I_ARBITRARY: ("X1",),
    CaseTag.II_CONSTANT: ("X1", "X2"),
    CaseTag.III_POWER_LAW: ("X1", "X3"),
    CaseTag.IV_EXPONENTIAL: ("X1", "X4"),
}


def classify(law):
    """Map a decay law onto its symmetry case and admitted generator names.

    The classification is a pure function of the variant: numeric values are
    validated at construction but never change the case.  An exponential law
    with lam = 0 still classifies as case IV.
    """
    if isinstance(law, ConstantDecay):
        tag = CaseTag.II_CONSTANT
    elif isinstance(law, PowerLawDecay):
        tag = CaseTag.III_POWER_LAW
    elif isinstance(law, ExponentialDecay):
        tag = CaseTag.IV_EXPONENTIAL
    elif isinstance(law, TabulatedDecay):
        tag = CaseTag.I_ARBITRARY
    else:
        raise ValidationError(f"unknown decay law {law!r}")
    return tag, _GENERATORS[tag]


@dataclass(frozen=True)
class Grid1D:
    """Uniform 1D grid with n cells and n+1 nodes including both endpoints."""

    x_lo: float
    x_hi: float
    n: int

    def __post_init__(self):
        if not (np.isfinite(self.x_lo) and np.isfinite(self.x_hi)):
            raise ValidationError("grid endpoints must be finite")
        if self.x_hi <= self.x_lo:
            raise ValidationError("grid needs x_lo < x_hi")
        if self.n < 8:
            raise ValidationError("grid needs at least 8 cells")

    @property
    def dx(self):
        return (self.x_hi - self.x_lo) / self.n

    def nodes(self):
        return np.linspace(self.x_lo, self.x_hi, self.n + 1)


class FieldPair:
    """Discrete (u, v) state sampled on the nodes of a Grid1D at time t."""

    __slots__ = ("u", "v", "t")

    def __init__(self, u, v, t=0.0):
        u = np.asarray(u, dtype=float).copy()
        v = np.asarray(v, dtype=float).copy()
        if u.shape != v.shape or u.ndim != 1:
            raise ValidationError("u and v must be 1D arrays of equal length")
        self.u = u
        self.v = v
        self.t = float(t)

    def is_valid(self):
        return bool(np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.v)))

    def copy(self):
        return FieldPair(self.u, self.v, self.t)

    def __repr__(self):
        return f"FieldPair(n={self.u.size - 1}, t={self.t:g})"


@dataclass(frozen=True)
class ModelParams:
    """Physical constants plus the limiter/decay selections of one model."""

    D: float
    tau: float
    limiter: object
    decay: DecayLaw

    def __post_init__(self):
        if not (np.isfinite(self.D) and self.D > 0.0):
            raise ValidationError(f"D must be positive, got {self.D!r}")
        if not (np.isfinite(self.tau) and self.tau > 0.0):
            raise ValidationError(f"tau must be positive, got {self.tau!r}")
        if self.limiter is None:
            raise ValidationError("limiter must be specified")
        if self.decay is None:
            raise ValidationError("decay law must be specified")

    @property
    def case(self):
        return classify(self.decay)[0]
