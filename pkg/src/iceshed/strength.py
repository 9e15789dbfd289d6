"""Temperature-dependent ice cohesion and adhesion strength.

Curves are configuration data. The shipped defaults are placeholder tables
to be recalibrated against measured strength data; they are not fitted to
any published curve.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class StrengthRangeError(ValueError):
    """Temperature outside the model's valid range (no extrapolation)."""


class CurveKind(str, enum.Enum):
    CONSTANT = "constant"
    POLYNOMIAL = "polynomial"
    TABLE = "table"


@dataclass(frozen=True)
class CurveSpec:
    """A strength curve ``S(T)`` in Pa with ``T`` in degrees Celsius.

    ``coefficients`` is a single value for ``constant``, ascending powers of
    ``T`` for ``polynomial`` (degree <= 4), and ``(T, S)`` pairs for
    ``table``, linearly interpolated between knots.
    """

    kind: CurveKind
    coefficients: tuple

    def __post_init__(self):
        kind = CurveKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is CurveKind.TABLE:
            pairs = tuple((float(t), float(v)) for t, v in self.coefficients)
            if len(pairs) < 2:
                raise ValueError("table curve needs at least two knots")
            if any(b[0] <= a[0] for a, b in zip(pairs, pairs[1:])):
                raise ValueError("table knots must be strictly increasing in T")
            object.__setattr__(self, "coefficients", pairs)
        else:
            coeffs = tuple(float(c) for c in np.ravel(self.coefficients))
            if kind is CurveKind.CONSTANT and len(coeffs) != 1:
                raise ValueError("constant curve takes exactly one value")
            if kind is CurveKind.POLYNOMIAL and not 1 <= len(coeffs) <= 5:
                raise ValueError("polynomial degree must be between 0 and 4")
            object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def constant(cls, value):
        return cls(CurveKind.CONSTANT, (value,))

    @classmethod
    def polynomial(cls, *coeffs):
        return cls(CurveKind.POLYNOMIAL, coeffs)

    @classmethod
    def table(cls, pairs):
        return cls(CurveKind.TABLE, tuple(pairs))

    def __call__(self, T):
        T = np.asarray(T, dtype=float)
        if self.kind is CurveKind.CONSTANT:
            out = np.full(T.shape, self.coefficients[0])
        elif self.kind is CurveKind.POLYNOMIAL:
            out = np.zeros(T.shape)
            for c in reversed(self.coefficients):
                out = out * T + c
        else:
            knots = np.array([p[0] for p in self.coefficients])
            vals = np.array([p[1] for p in self.coefficients])
            out = np.interp(T, knots, vals)
            # bit-exact at knots
            hit = np.searchsorted(knots, T)
            hit = np.clip(hit, 0, len(knots) - 1)
            exact = knots[hit] == T
            out = np.where(exact, vals[hit], out)
        return out if out.ndim else float(out)

    def flat(self) -> list:
        if self.kind is CurveKind.TABLE:
            return [x for pair in self.coefficients for x in pair]
        return list(self.coefficients)

    @classmethod
    def from_flat(cls, kind, values):
        kind = CurveKind(kind)
        values = [float(v) for v in values]
        if kind is CurveKind.TABLE:
            if len(values) % 2:
                raise ValueError("table coefficients come in (T, value) pairs")
            return cls(kind, tuple(zip(values[::2], values[1::2])))
        return cls(kind, tuple(values))


SCAN_POINTS = 1000


@dataclass(frozen=True)
class StrengthModel:
    """Cohesion and adhesion curves plus the temperature range they hold on.

    Construction scans both curves and rejects any that rise with
    temperature or reach zero inside ``valid_range``.
    """

    cohesion: CurveSpec
    adhesion: CurveSpec
    valid_range: tuple = (-16.0, -4.0)

    def __post_init__(self):
        lo, hi = map(float, self.valid_range)
        if not hi >= lo:
            raise ValueError("valid_range must be ordered")
        object.__setattr__(self, "valid_range", (lo, hi))
        grid = np.linspace(lo, hi, SCAN_POINTS)
        for name, curve in (("cohesion", self.cohesion), ("adhesion", self.adhesion)):
            vals = np.asarray(curve(grid))
            if np.any(vals <= 0):
                raise ValueError(f"{name} strength must be positive over {self.valid_range}")
            if np.any(np.diff(vals) > 0):
                raise ValueError(f"{name} strength must not increase with temperature")

    def _check(self, T):
        lo, hi = self.valid_range
        if not lo <= T <= hi:
            raise StrengthRangeError(f"T={T} degC outside valid range [{lo}, {hi}]")

    def cohesion_strength(self, T: float) -> float:
        self._check(T)
        return float(self.cohesion(T))

    def adhesion_strength(self, T: float) -> float:
        self._check(T)
        return float(self.adhesion(T))


def cohesion_strength(model: StrengthModel, T: float) -> float:
    """Ice cohesion strength sigma_c(T), Pa."""
    return model.cohesion_strength(T)


def adhesion_strength(model: StrengthModel, T: float) -> float:
    """Ice/blade adhesion shear strength tau_a(T), Pa."""
    return model.adhesion_strength(T)


def default_model() -> StrengthModel:
    """Placeholder tables over -16..-4 degC. Recalibrate before quantitative use."""
    return StrengthModel(
        cohesion=CurveSpec.table([(-16.0, 1.4e6), (-8.0, 1.1e6), (-4.0, 8e5)]),
        adhesion=CurveSpec.table([(-16.0, 4.5e5), (-8.0, 3.4e5), (-4.0, 2.0e5)]),
        valid_range=(-16.0, -4.0),
    )


def constant_model(sigma_c: float, tau_a: float, valid_range=(-60.0, 0.0)) -> StrengthModel:
    return StrengthModel(CurveSpec.constant(sigma_c), CurveSpec.constant(tau_a), valid_range)
