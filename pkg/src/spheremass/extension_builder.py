"""Asymptotically flat extensions ``u^2 dt^2 + t^2 g_t`` with prescribed scalar curvature.

The lapse ``u`` obeys

    t u_t = u^2 Lap u / 2 + t^2 |M|^2 u / 4 + u / 2 - (2K - t^2 Rbar) u^3 / 4

on the leaves ``t >= 1`` of the flow.  The solver evolves the mass aspect
``mu = (t/2)(1 - u^-2)`` instead of ``u``.  The two are equivalent while
``mu < t/2`` (that is, while ``u`` is positive), and the equation becomes

    mu_t = (1 - K)/2 + Lap u / (2u) + t^2 |M|^2 / (4 u^2) + t^2 Rbar / 4.

Schwarzschild data are then the constant solution ``mu = m`` and the leaf
Hawking mass is the area mean of ``mu``.  Time is ``s = ln t``.  The diffusion
``(u^2/2) Lap mu`` (with ``u^2`` lagged) is implicit and the rest explicit, in
the two-stage, second-order IMEX Runge-Kutta scheme ARS(2,2,2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded

from .asphericity import damping_exponent
from .modified_ricci_flow import FlowTrace, flow_state
from .sphere_geometry import (
    AxisymMetric,
    face_conductance,
    gauss_curvature,
    integrate,
    laplacian_matrix_bands,
)

_GAMMA = 1.0 - 1.0 / math.sqrt(2.0)
_DELTA = 1.0 - 1.0 / (2.0 * _GAMMA)
MAX_RETRIES = 12


class InadmissibleError(ValueError):
    """The mean curvature does not clear the admissibility threshold."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class BlowUpError(RuntimeError):
    """The lapse lost positivity (``mu`` reached ``t/2``)."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class NoLimitError(RuntimeError):
    """Leaf Hawking masses did not settle over the last decade of the run."""


# --- prescribed scalar curvature ------------------------------------------


@dataclass(frozen=True)
class PrescribedScalar:
    """Scalar curvature ``c t^-p psi(theta)`` of the extension.

    ``family`` is ``"zero"``, ``"rotsym_power"`` (``psi = 1``) or ``"separable"``.
    For the separable family ``angular`` holds polynomial coefficients in
    ``cos(theta)``, lowest degree first; ``(1, 0, 0.5)`` means
    ``1 + cos^2(theta)/2``.
    """

    family: str = "zero"
    c: float = 0.0
    p: float = 4.0
    angular: tuple = (1.0,)

    def __post_init__(self):
        if self.family not in ("zero", "rotsym_power", "separable"):
            raise ValueError(f"unknown scalar curvature family {self.family!r}")
        object.__setattr__(self, "angular", tuple(float(x) for x in self.angular))
        if self.family == "zero":
            object.__setattr__(self, "c", 0.0)
        if self.family == "rotsym_power":
            object.__setattr__(self, "angular", (1.0,))
        if self.family == "separable":
            probe = np.polynomial.polynomial.polyval(np.cos(np.linspace(0, np.pi, 2001)), self.angular)
            if np.any(probe < 0):
                raise ValueError("angular profile must be nonnegative")

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def rotsym_power(cls, c, p):
        return cls("rotsym_power", float(c), float(p))

    @classmethod
    def separable(cls, c, p, angular: Sequence[float]):
        return cls("separable", float(c), float(p), tuple(angular))

    @property
    def is_zero(self) -> bool:
        return self.family == "zero" or self.c == 0.0

    def profile(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        return np.polynomial.polynomial.polyval(np.cos(theta), self.angular) * np.ones_like(theta)

    def __call__(self, t, theta) -> np.ndarray:
        if self.is_zero:
            return np.zeros_like(np.asarray(theta, dtype=float))
        return self.c * float(t) ** (-self.p) * self.profile(theta)

    def sup(self, t, theta=None) -> float:
        """``Rbar_*(t)``, the sup over the sphere (over the grid when one is given)."""
        if self.is_zero:
            return 0.0
        lo, hi = self._profile_range(theta)
        return self.c * float(t) ** (-self.p) * (hi if self.c >= 0 else lo)

    def _profile_range(self, theta=None):
        if theta is None:
            theta = np.linspace(0.0, np.pi, 2001)
        prof = self.profile(theta)
        return float(np.min(prof)), float(np.max(prof))

    def weighted_tail(self, T: float, power: int = 2, theta=None) -> float:
        """``int_T^inf tau^power Rbar_*(tau) dtau`` in closed form (``inf`` if divergent)."""
        if self.is_zero:
            return 0.0
        if self.p <= power + 1:
            return math.inf
        return self.sup(1.0, theta) * T ** (power + 1 - self.p) / (self.p - power - 1)

    def decay_integral(self, theta=None) -> float:
        """``int_1^inf |Rbar|_* t^2 dt`` in closed form."""
        if self.is_zero:
            return 0.0
        if self.p <= 3:
            return math.inf
        lo, hi = self._profile_range(theta)
        return abs(self.c) * max(abs(lo), abs(hi)) / (self.p - 3)


# --- admissibility -----------------------------------------------------------


@dataclass(frozen=True)
class AdmissibilityReport:
    integral_decay_ok: bool
    integral_decay_value: float
    holder_decay_ok: bool
    holder_constant: float
    holder_samples: tuple
    C0: float
    H_threshold: float
    H_min: float
    admissible: bool
    mean_curvature_positive: bool | None = None

    def as_dict(self):
        return {
            "integral_decay_ok": self.integral_decay_ok,
            "integral_decay_value": self.integral_decay_value,
            "holder_decay_ok": self.holder_decay_ok,
            "holder_constant": self.holder_constant,
            "holder_samples": [list(x) for x in self.holder_samples],
            "C0": self.C0,
            "H_threshold": self.H_threshold,
            "H_min": self.H_min,
            "admissible": self.admissible,
            "mean_curvature_positive": self.mean_curvature_positive,
        }


def _holder_seminorm(g: Callable[[np.ndarray], np.ndarray], lo: float, hi: float, alpha: float, m: int = 257) -> float:
    """Weighted seminorm ``sup t2^alpha |g(t1) - g(t2)| / |t1 - t2|^alpha`` over ``[lo, hi]``."""
    tau = np.linspace(lo, hi, m)
    vals = g(tau)
    diff = np.abs(vals[:, None] - vals[None, :])
    dist = np.abs(tau[:, None] - tau[None, :]) ** alpha
    np.fill_diagonal(dist, np.inf)
    weight = np.maximum(tau[:, None], tau[None, :]) ** alpha
    return float(np.max(weight * diff / dist))


def holder_decay(Rbar: PrescribedScalar, alpha: float = 0.5, T: float = 256.0, theta=None):
    """Sampled ``t * ||Rbar t^2||_{C^alpha[t, 4t]}`` for ``t = 1, 2, 4, ..., T``.

    Returns ``(ok, constant, samples)``.  ``ok`` means the weighted norm does not
    grow across the dyadic windows.  ``constant`` is the largest sampled value.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"Holder exponent must lie in (0, 1), got {alpha}")
    if Rbar.is_zero:
        return True, 0.0, ()
    lo, hi = Rbar._profile_range(theta)
    amp = max(abs(lo), abs(hi))
    g = lambda tau: amp * abs(Rbar.c) * tau ** (2.0 - Rbar.p)  # noqa: E731
    samples = []
    t = 1.0
    while t <= T:
        samples.append((t, t * _holder_seminorm(g, t, 4 * t, alpha)))
        t *= 2
    weighted = np.array([v for _, v in samples])
    ok = bool(weighted[-1] <= weighted[: max(1, len(weighted) // 2)].max() * (1 + 1e-9))
    return ok, float(weighted.max()), tuple(samples)


def _curvature_fields(trace: FlowTrace) -> np.ndarray:
    out = np.empty_like(trace.shapes)
    for i, psi in enumerate(trace.shapes):
        metric = AxisymMetric.from_density_and_shape(trace.grid, trace.density, psi)
        out[i] = gauss_curvature(metric).values
    return out


def scalar_energy(trace: FlowTrace, Rbar: PrescribedScalar) -> float:
    """``C0 = sup_t int_1^t (tau^2 Rbar/2 - K)^* exp(Phi(tau)) dtau``, at least 0.

    The sup over the sphere is taken pointwise over the grid.  Beyond a truncated
    trace ``K = 1`` and ``Phi`` is frozen, so that part is done in closed form.
    """
    times = trace.times
    theta = trace.grid.theta
    phi = damping_exponent(trace)
    if Rbar.family == "separable":
        K = _curvature_fields(trace)
        prof = Rbar.profile(theta)
        excess = np.array(
            [np.max(0.5 * t * t * Rbar.c * t ** (-Rbar.p) * prof - k) for t, k in zip(times, K)]
        )
    else:
        rstar = np.array([Rbar.sup(t) for t in times])
        excess = 0.5 * times**2 * rstar - trace.K_star_series
    integrand = excess * np.exp(phi)
    cumulative = np.concatenate(([0.0], np.cumsum(0.5 * np.diff(times) * (integrand[1:] + integrand[:-1]))))
    best = float(max(np.max(cumulative), 0.0))
    # continuation past the last sample with K = 1 and |M| = 0
    T = times[-1]
    A = 0.5 * Rbar.sup(1.0, theta)  # (tau^2/2) Rbar_* = A tau^(2-p)
    if A > 0:
        p = Rbar.p
        t_star = max(T, A ** (1.0 / (p - 2.0))) if p > 2 else math.inf
        if math.isinf(t_star):
            return math.inf
        if abs(p - 3.0) < 1e-12:
            extra = A * math.log(t_star / T) - (t_star - T)
        else:
            extra = A / (3.0 - p) * (t_star ** (3.0 - p) - T ** (3.0 - p)) - (t_star - T)
        best = max(best, float(cumulative[-1] + extra * math.exp(phi[-1])))
    return best


def check_admissibility(
    trace: FlowTrace,
    Rbar: PrescribedScalar,
    H,
    alpha: float = 0.5,
    holder_T: float = 256.0,
) -> AdmissibilityReport:
    """Decay conditions on ``Rbar`` and the threshold ``H > 2 sqrt(C0)``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"Holder exponent must lie in (0, 1), got {alpha}")
    H_arr = np.atleast_1d(np.asarray(H, dtype=float))
    if np.any(H_arr <= 0):
        raise ValueError("mean curvature must be positive")
    theta = trace.grid.theta
    integral = Rbar.decay_integral(theta)
    hold_ok, hold_c, hold_samples = holder_decay(Rbar, alpha, holder_T, theta)
    C0 = scalar_energy(trace, Rbar) if math.isfinite(integral) else math.inf
    threshold = 2.0 * math.sqrt(C0)
    H_min = float(H_arr.min())
    return AdmissibilityReport(
        integral_decay_ok=math.isfinite(integral),
        integral_decay_value=integral,
        holder_decay_ok=hold_ok,
        holder_constant=hold_c,
        holder_samples=hold_samples,
        C0=C0,
        H_threshold=threshold,
        H_min=H_min,
        admissible=bool(math.isfinite(integral) and H_min > threshold),
    )


# --- leaf geometry along the flow -----------------------------------------------


@dataclass
class _Leaf:
    K: np.ndarray
    M_sq: np.ndarray
    bands: tuple
    conductance: np.ndarray


class _LeafCache:
    """Flow quantities at arbitrary times; constant (and round) past truncation."""

    def __init__(self, trace: FlowTrace):
        self.trace = trace
        self.rho = trace.density
        self.s = trace.grid.spacing
        self._memo: dict[float, _Leaf] = {}
        final = trace.metric_at(trace.end_time)
        n = trace.grid.n
        self._frozen = _Leaf(np.ones(n), np.zeros(n), laplacian_matrix_bands(final), face_conductance(final.h, final.w))

    def __call__(self, t: float) -> _Leaf:
        if self.trace.truncated and t >= self.trace.truncation_time:
            return self._frozen
        if t > self.trace.end_time * (1 + 1e-12):
            raise ValueError(
                f"trace ends at t={self.trace.end_time:g} without reaching roundness; cannot extend to t={t:g}"
            )
        leaf = self._memo.get(t)
        if leaf is None:
            metric = self.trace.metric_at(t)
            st = flow_state(metric, t)
            leaf = _Leaf(st.K.values, st.M_norm_sq, laplacian_matrix_bands(metric), face_conductance(metric.h, metric.w))
            if len(self._memo) > 8:
                self._memo.clear()
            self._memo[t] = leaf
        return leaf


def _lapse(mu, t):
    return 1.0 / np.sqrt(1.0 - 2.0 * mu / t)


def _apply(bands, x):
    lower, diag, upper = bands
    y = diag * x
    y[:-1] += upper * x[1:]
    y[1:] += lower * x[:-1]
    return y


@dataclass(frozen=True)
class ExtensionSolution:
    times: np.ndarray
    mass_aspect: np.ndarray = field(repr=False)
    density: np.ndarray = field(repr=False)
    spacing: float
    leaf_hawking: np.ndarray
    adm_estimate: float
    adm_tail_bound: float
    H: np.ndarray
    Rbar: PrescribedScalar
    admissibility: AdmissibilityReport
    hawking_rate: np.ndarray = field(repr=False)

    @property
    def u(self) -> np.ndarray:
        return _lapse(self.mass_aspect, self.times[:, None])

    def u_at(self, t: float) -> np.ndarray:
        """Lapse on the leaf ``t``; between output times ``mu`` is a cubic spline in ``ln t``."""
        if not self.times[0] <= t <= self.times[-1]:
            raise ValueError(f"t={t} lies outside [{self.times[0]}, {self.times[-1]}]")
        i = int(np.argmin(np.abs(self.times - t)))
        if math.isclose(self.times[i], t, rel_tol=1e-12):
            return _lapse(self.mass_aspect[i], self.times[i])
        # a local window is enough for the spline and keeps the cost O(n)
        lo, hi = max(0, i - 4), min(self.times.size, i + 5)
        spline = CubicSpline(np.log(self.times[lo:hi]), self.mass_aspect[lo:hi], axis=0)
        return _lapse(spline(math.log(t)), t)


def _leaf_terms(leaf: _Leaf, mu, t, Rbar_vals, s, rho):
    """Explicit right-hand side ``t * mu_t`` and the lapse."""
    u = _lapse(mu, t)
    lap_u = _apply(leaf.bands, u)
    rate = 0.5 * (1.0 - leaf.K) + 0.5 * lap_u / u + 0.25 * t * t * leaf.M_sq / (u * u) + 0.25 * t * t * Rbar_vals
    return t * rate, u


def hawking_rate_integrand(leaf: _Leaf, mu, t, Rbar_vals, s, rho) -> float:
    """Area mean of ``(|grad u|^2/u^2 + t^2 |M|^2 / (2u^2) + t^2 Rbar / 2) / 2``.

    The gradient term is a sum over cell faces, ``c (u_{j+1} - u_j)^2 / (s u_j u_{j+1})``,
    which is the discrete form of ``int |grad u|^2 / u^2``.
    """
    u = _lapse(mu, t)
    grad = 2.0 * np.pi * float(np.sum(leaf.conductance[1:-1] * np.diff(u) ** 2 / (s * u[:-1] * u[1:])))
    rest = 2.0 * np.pi * s * float(np.dot(rho, 0.5 * t * t * leaf.M_sq / (u * u) + 0.5 * t * t * Rbar_vals))
    return (grad + rest) / (8.0 * np.pi)


def _stage_operator(leaf: _Leaf, lag, t):
    """Bands of ``(u_lag^2 / 2) Lap`` with ``u_lag`` taken from the lagged aspect."""
    coef = 0.5 / (1.0 - 2.0 * lag / t)
    lower, diag, upper = leaf.bands
    return lower * coef[1:], diag * coef, upper * coef[:-1]


def _implicit_solve(bands, rhs, weight):
    lower, diag, upper = bands
    ab = np.zeros((3, diag.size))
    ab[0, 1:] = -weight * upper
    ab[1] = 1.0 - weight * diag
    ab[2, :-1] = -weight * lower
    return solve_banded((1, 1), ab, rhs)


def _imex_step(cache, mu, t0, ds, Rbar_of, s, rho):
    """One ARS(2,2,2) step in ``s = ln t``; returns ``None`` on positivity loss.

    Each stage splits the full rate ``F`` as ``A_i Y_i + (F(Y_i) - A_i Y_i)``, with
    ``A_i`` the lagged diffusion operator, so the scheme stays consistent while
    the operator changes between stages.
    """
    t1 = t0 * math.exp(_GAMMA * ds)
    t2 = t0 * math.exp(ds)

    def rate(y, t):
        return _leaf_terms(cache(t), y, t, Rbar_of(t), s, rho)[0]

    A1 = _stage_operator(cache(t0), mu, t0)
    E1 = rate(mu, t0) - _apply(A1, mu)

    A2 = _stage_operator(cache(t1), mu, t1)
    Y2 = _implicit_solve(A2, mu + ds * _GAMMA * E1, ds * _GAMMA)
    if not np.all(np.isfinite(Y2)) or np.any(Y2 >= 0.5 * t1):
        return None
    K2 = _apply(A2, Y2)
    E2 = rate(Y2, t1) - K2

    A3 = _stage_operator(cache(t2), Y2, t2)
    rhs = mu + ds * (_DELTA * E1 + (1.0 - _DELTA) * E2 + (1.0 - _GAMMA) * K2)
    Y3 = _implicit_solve(A3, rhs, ds * _GAMMA)
    if not np.all(np.isfinite(Y3)) or np.any(Y3 >= 0.5 * t2):
        return None
    return Y3


def _mean_profile(Rbar: PrescribedScalar, trace: FlowTrace) -> float:
    """Area mean of the angular factor; the flow preserves the area density."""
    metric = trace.metric_at(trace.times[0])
    return integrate(metric, Rbar.profile(trace.grid.theta)) / metric.area


def _mean_tail(Rbar: PrescribedScalar, mean_profile: float, t) -> np.ndarray:
    """``(1/4) int_t^inf tau^2 <Rbar>(tau) dtau`` in closed form."""
    t = np.asarray(t, dtype=float)
    if Rbar.is_zero:
        return np.zeros_like(t)
    return 0.25 * Rbar.c * mean_profile * t ** (3.0 - Rbar.p) / (Rbar.p - 3.0)


def solve_lapse(
    trace: FlowTrace,
    Rbar: PrescribedScalar,
    H,
    T: float,
    ds: float = 1e-3,
    alpha: float = 0.5,
    cauchy_tol: float = 1e-6,
) -> ExtensionSolution:
    """Integrate the lapse from ``u(1) = 2/H`` to ``t = T``.

    ``H`` is a positive constant or one value per grid cell.  Steps are uniform in
    ``ln t`` with size at most ``ds``.  A step that would push ``mu`` to ``t/2`` is
    redone with halved substeps, and :class:`BlowUpError` is raised after
    ``MAX_RETRIES`` halvings.
    """
    if T < 10:
        raise ValueError("the extension must reach at least t = 10")
    n = trace.grid.n
    H_arr = np.broadcast_to(np.asarray(H, dtype=float), (n,)).copy()
    report = check_admissibility(trace, Rbar, H_arr, alpha=alpha)
    if not report.admissible:
        raise InadmissibleError(
            f"H_min={report.H_min:.6g} does not exceed 2 sqrt(C0)={report.H_threshold:.6g}"
            if report.integral_decay_ok
            else "scalar curvature violates the integral decay condition",
            report,
        )
    theta = trace.grid.theta
    s = trace.grid.spacing
    rho = trace.density
    cache = _LeafCache(trace)
    Rbar_of = (lambda t: np.zeros(n)) if Rbar.is_zero else (lambda t: Rbar(t, theta))

    nsteps = max(1, int(math.ceil(math.log(T) / ds - 1e-9)))
    step = math.log(T) / nsteps
    times = np.exp(step * np.arange(nsteps + 1))
    times[-1] = T
    mu = np.empty((nsteps + 1, n))
    mu[0] = 0.5 * (1.0 - 0.25 * H_arr**2)
    for k in range(nsteps):
        t0, t1 = times[k], times[k + 1]
        y = _imex_step(cache, mu[k], t0, math.log(t1 / t0), Rbar_of, s, rho)
        sub = 1
        while y is None:
            sub *= 2
            if sub > 2**MAX_RETRIES:
                raise BlowUpError(f"lapse lost positivity near t={t0:.6g}", time=float(t0))
            y, tk = mu[k], t0
            for _ in range(sub):
                tn = tk * math.exp(math.log(t1 / t0) / sub)
                y = _imex_step(cache, y, tk, math.log(tn / tk), Rbar_of, s, rho)
                if y is None:
                    break
                tk = tn
        mu[k + 1] = y

    weights = 2.0 * np.pi * s * rho / (4.0 * np.pi)
    hawking = mu @ weights
    rates = np.array([hawking_rate_integrand(cache(t), m, t, Rbar_of(t), s, rho) for t, m in zip(times, mu)])
    mean_prof = _mean_profile(Rbar, trace) if not Rbar.is_zero else 0.0
    estimates = hawking + _mean_tail(Rbar, mean_prof, times)
    tail_bound = 0.25 * Rbar.weighted_tail(T, 2, theta)
    last_decade = times >= T / 10.0
    oscillation = float(np.ptp(estimates[last_decade]))
    if oscillation > tail_bound + cauchy_tol:
        raise NoLimitError(f"ADM estimates vary by {oscillation:.3e} over the last decade")
    positive = bool(np.all(np.isfinite(mu)) and np.all(mu < 0.5 * times[:, None]))
    return ExtensionSolution(
        times=times,
        mass_aspect=mu,
        density=rho.copy(),
        spacing=s,
        leaf_hawking=hawking,
        adm_estimate=float(estimates[-1]),
        adm_tail_bound=float(tail_bound),
        H=H_arr,
        Rbar=Rbar,
        admissibility=replace(report, mean_curvature_positive=positive),
        hawking_rate=rates,
    )


def leaf_mean_curvature(sol: ExtensionSolution, t: float) -> np.ndarray:
    """Mean curvature ``2 / (t u)`` of the leaf at radius ``t``."""
    return 2.0 / (t * sol.u_at(t))


def adm_mass(sol: ExtensionSolution) -> tuple[float, float]:
    """``(estimate, tail_bound)``: last leaf mass plus the closed-form mean tail of ``Rbar``."""
    return sol.adm_estimate, sol.adm_tail_bound
