"""Rotationally symmetric extensions described by their Hawking mass profile.

A nondecreasing profile ``m(t) < t/2`` determines the metric
``u(t)^2 dt^2 + t^2 g_round`` with ``u = (1 - 2m/t)^(-1/2)`` and scalar
curvature ``Rbar = 4 m'(t) / t^2``.  These closed forms serve as exact oracles
for the PDE solvers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import minimize_scalar


class HorizonError(ValueError):
    """Evaluation at or inside the horizon ``t <= 2m``."""


class DomainError(ValueError):
    """Evaluation outside the domain of a profile."""


@dataclass(frozen=True)
class MassProfile:
    """Hawking mass as a function of the area radius.

    ``kind`` is ``"constant"`` (``params = (m,)``), ``"powerlaw_approach"``
    (``params = (m_inf, p)``, ``m(t) = m_inf (1 - t^-p)``) or ``"table"``
    (``params = (r, m)`` arrays, interpolated with a monotone cubic).
    """

    kind: str
    params: tuple
    r_min: float = 0.0

    def __post_init__(self):
        if self.kind == "constant":
            (m,) = self.params
            if m < 0:
                raise ValueError("constant mass must be nonnegative")
        elif self.kind == "powerlaw_approach":
            m_inf, p = self.params
            if m_inf < 0 or p <= 0:
                raise ValueError("powerlaw_approach needs m_inf >= 0 and p > 0")
            object.__setattr__(self, "r_min", 1.0)
        elif self.kind == "table":
            r, m = (np.asarray(x, dtype=float) for x in self.params)
            if r.ndim != 1 or r.shape != m.shape or r.size < 2:
                raise ValueError("table needs two equal-length arrays with at least two points")
            if np.any(np.diff(r) <= 0):
                raise ValueError("table radii must increase strictly")
            if np.any(np.diff(m) < 0):
                raise ValueError("table masses must be nondecreasing")
            object.__setattr__(self, "params", (r, m))
            object.__setattr__(self, "r_min", float(r[0]))
            object.__setattr__(self, "_interp", PchipInterpolator(r, m, extrapolate=False))
        else:
            raise ValueError(f"unknown profile kind {self.kind!r}")
        # profiles are only used from t = max(r_min, 1) outwards
        probe = np.geomspace(max(self.r_min, 1.0), 1e6, 400)
        if np.any(self.value(probe) >= probe / 2):
            raise ValueError("profile must stay below t/2 for t >= max(r_min, 1)")

    @classmethod
    def constant(cls, m: float, r_min: float = 0.0):
        return cls("constant", (float(m),), r_min)

    @classmethod
    def powerlaw_approach(cls, m_inf: float, p: float):
        return cls("powerlaw_approach", (float(m_inf), float(p)))

    @classmethod
    def table(cls, r: Sequence[float], m: Sequence[float]):
        return cls("table", (r, m))

    @property
    def limit(self) -> float:
        if self.kind == "constant":
            return self.params[0]
        if self.kind == "powerlaw_approach":
            return self.params[0]
        return float(self.params[1][-1])

    def _table_eval(self, t, nu):
        r, m = self.params
        t = np.asarray(t, dtype=float)
        out = np.asarray(self._interp(np.clip(t, r[0], r[-1]), nu), dtype=float)
        beyond = t > r[-1]
        if nu == 0:
            return np.where(beyond, m[-1], out)
        return np.where(beyond, 0.0, out)

    def value(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            return np.full_like(t, self.params[0])
        if self.kind == "powerlaw_approach":
            m_inf, p = self.params
            return m_inf * (1.0 - t ** (-p))
        return self._table_eval(t, 0)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            return np.zeros_like(t)
        if self.kind == "powerlaw_approach":
            m_inf, p = self.params
            return m_inf * p * t ** (-p - 1)
        return self._table_eval(t, 1)

    def second_derivative(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            return np.zeros_like(t)
        if self.kind == "powerlaw_approach":
            m_inf, p = self.params
            return -m_inf * p * (p + 1) * t ** (-p - 2)
        return self._table_eval(t, 2)

    def lapse(self, t):
        t = np.asarray(t, dtype=float)
        return 1.0 / np.sqrt(1.0 - 2.0 * self.value(t) / t)


@dataclass(frozen=True)
class RotSymMetric:
    """The extension ``u(t)^2 dt^2 + t^2 g_round`` generated by a mass profile."""

    profile: MassProfile

    def u(self, t):
        t = np.asarray(t, dtype=float)
        m = self.profile.value(t)
        if np.any(2.0 * m >= t):
            raise HorizonError("profile reaches the horizon")
        out = 1.0 / np.sqrt(1.0 - 2.0 * m / t)
        return float(out) if out.ndim == 0 else out

    def scalar_curvature(self, t):
        return scalar_from_profile(self.profile, t)


def _check_domain(p: MassProfile, t):
    lo = max(p.r_min, 1.0)
    if np.any(np.asarray(t) < lo):
        raise DomainError(f"profile is defined for t >= {lo}")


def scalar_from_profile(p: MassProfile, t):
    """Scalar curvature ``4 m'(t) / t^2`` of the extension with profile ``p``."""
    _check_domain(p, t)
    t = np.asarray(t, dtype=float)
    out = 4.0 * p.derivative(t) / t**2
    return float(out) if out.ndim == 0 else out


def schwarzschild_u(m: float, t):
    """Lapse ``(1 - 2m/t)^(-1/2)`` of the Schwarzschild leaves."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 2.0 * m):
        raise HorizonError(f"t must exceed the horizon radius 2m = {2 * m:g}")
    out = 1.0 / np.sqrt(1.0 - 2.0 * m / t)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ProfileDecayReport:
    verifiable: bool
    passes: bool
    weighted_sup: float
    holder_constant: float
    windows: tuple
    reason: str = ""


def _kinked(p: MassProfile) -> bool:
    """Look for isolated spikes in the second differences of the table data.

    A kink between two nodes shows up in at most two adjacent second
    differences, so each one is compared with those two cells away on both
    sides.  Smooth data change little over that distance.
    """
    r, m = p.params
    if r.size < 7:
        return False
    slopes = np.diff(m) / np.diff(r)
    curv = np.abs(np.diff(slopes) / (0.5 * (r[2:] - r[:-2])))
    scale = float(np.max(curv))
    if scale == 0.0:
        return False
    centre = curv[2:-2]
    neighbours = np.maximum(curv[:-4], curv[4:])
    return bool(np.any((centre > 10.0 * neighbours) & (centre > 1e-6 * scale)))


def check_profile_decay(p: MassProfile, alpha: float = 0.5, r_max: float = 1e4) -> ProfileDecayReport:
    """Measure ``r^2 sup_[r,4r] |m''|`` over dyadic ``r`` and the implied Holder bound.

    The weighted Holder norm of ``Rbar t^2`` on ``[r, 4r]`` is at most
    ``16 3^(1-alpha) r sup |m''|``, so a bounded ``r^2 sup |m''|`` yields the
    decay condition with constant ``16 3^(1-alpha) sup r^2 |m''|``.  Tables
    whose data show a kink cannot be differentiated twice and are reported as
    unverifiable.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"Holder exponent must lie in (0, 1), got {alpha}")
    if p.kind == "table" and _kinked(p):
        return ProfileDecayReport(False, False, math.nan, math.nan, (), "table data has a kink")
    windows = []
    r = max(p.r_min, 1.0)
    while r <= r_max:
        tau = np.linspace(r, 4 * r, 401)
        windows.append((r, float(r * r * np.max(np.abs(p.second_derivative(tau))))))
        r *= 2
    vals = np.array([v for _, v in windows])
    sup = float(vals.max())
    passes = bool(np.isfinite(sup) and vals[-1] <= vals[: max(1, len(vals) // 2)].max() * (1 + 1e-9))
    return ProfileDecayReport(True, passes, sup, 16.0 * 3.0 ** (1 - alpha) * sup, tuple(windows))


def c0_rotsym(p: MassProfile, t_max: float = 1e3, samples: int = 20001) -> float:
    """``sup_{1 <= t <= t_max} 2m(t) - 2m(1) - (t - 1)``, at least 0."""
    _check_domain(p, 1.0)
    t = np.concatenate(([1.0], np.geomspace(1.0, t_max, samples)))
    vals = 2.0 * p.value(t) - 2.0 * p.value(1.0) - (t - 1.0)
    i = int(np.argmax(vals))
    best = float(vals[i])
    # polish the sampled maximum on its bracket
    if 0 < i < t.size - 1 and best > 0:
        res = minimize_scalar(
            lambda x: -(2.0 * float(p.value(x)) - 2.0 * float(p.value(1.0)) - (x - 1.0)),
            bounds=(t[i - 1], t[i + 1]),
            method="bounded",
            options={"xatol": 1e-12},
        )
        best = max(best, -float(res.fun))
    return max(best, 0.0)


def prescribed_scalar_for(p: MassProfile):
    """Extension scalar curvature matching a power-law or constant profile."""
    from .extension_builder import PrescribedScalar

    if p.kind == "constant":
        return PrescribedScalar.zero()
    if p.kind == "powerlaw_approach":
        m_inf, q = p.params
        # 4 m'(t) / t^2 = 4 m_inf q t^(-q-3)
        return PrescribedScalar.rotsym_power(4.0 * m_inf * q, q + 3.0)
    raise ValueError("table profiles have no closed-form scalar curvature family")


def initial_mean_curvature(p: MassProfile) -> float:
    """Constant ``H`` on the unit sphere with Hawking mass ``m(1)``: ``H = 2 sqrt(1 - 2m(1))``."""
    _check_domain(p, 1.0)
    return 2.0 * math.sqrt(1.0 - 2.0 * float(p.value(1.0)))
