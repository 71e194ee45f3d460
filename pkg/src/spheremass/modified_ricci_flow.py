"""Modified Ricci flow ``dg/dt = 2M`` for axisymmetric sphere metrics.

``M = (1 - K) g + Hess f`` is trace-free once ``f`` solves ``Lap f = 2K - 2``.
A trace-free velocity leaves the area density ``rho = sqrt(a b)`` unchanged
pointwise.  The flow is therefore evolved in the single shape variable
``psi = ln(w/h)``:

    d psi / dt = 2 M_phph / b,

with ``a = rho exp(-psi)`` and ``b = rho exp(psi)`` recovered exactly.  This
keeps ``a`` and ``b`` positive by construction and holds the area at ``4 pi``
to round-off.

The right-hand side is compiled with numba.  :func:`flow_state` builds the same
quantities with numpy for inspection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .sphere_geometry import (
    FOUR_PI,
    AxisymMetric,
    PolarGrid,
    ScalarField,
    face_conductance,
    face_fluxes,
    gauss_curvature,
    integrate,
    laplacian,
    normalize_area,
)

CFL_FACTOR = 0.2
DEFAULT_TRUNCATION = 1e-14
MAX_HALVINGS = 20


class InconsistentSourceError(ValueError):
    """The source of the potential equation does not integrate to zero."""


class StepSizeError(RuntimeError):
    """The step produced a non-finite or non-positive metric even after halving."""


class FlowDivergenceError(RuntimeError):
    """The flow moved away from the round metric instead of towards it."""


# --- compiled kernels -------------------------------------------------------


@njit(cache=True)
def _shape_rate(psi, rho, s, out):
    """Fill ``out`` with ``d psi/dt`` and return ``(min K, max |M|^2)``."""
    n = psi.shape[0]
    w = np.sqrt(rho) * np.exp(0.5 * psi)
    h = rho / w
    F = np.empty(n + 1)
    F[0] = 2.0 * w[0] / (s * h[0])
    for j in range(n - 1):
        F[j + 1] = (w[j + 1] - w[j]) / (s * 0.5 * (h[j] + h[j + 1]))
    F[n] = -2.0 * w[n - 1] / (s * h[n - 1])
    fac = 2.0 / (F[0] - F[n])
    K = np.empty(n)
    src = np.empty(n)
    for j in range(n):
        K[j] = -fac * (F[j + 1] - F[j]) / (s * rho[j])
        src[j] = s * rho[j] * (2.0 * K[j] - 2.0)
    # face gradients of the potential: the flux through a face equals the
    # source enclosed by it; accumulate from the nearer pole
    D = np.zeros(n + 1)
    half = n // 2
    P = 0.0
    for j in range(half - 1):
        P += src[j]
        D[j + 1] = P * (h[j] + h[j + 1]) / (w[j] + w[j + 1])
    Q = 0.0
    for j in range(n - 1, half, -1):
        Q -= src[j]
        D[j] = Q * (h[j - 1] + h[j]) / (w[j - 1] + w[j])
    mid = 0.5 * ((P + src[half - 1]) + (Q - src[half]))
    D[half] = mid * (h[half - 1] + h[half]) / (w[half - 1] + w[half])
    kmin = np.inf
    msup = 0.0
    for j in range(n):
        fp = 0.5 * (D[j] + D[j + 1])
        m = (1.0 - K[j]) + 0.5 * (F[j] + F[j + 1]) * fp / rho[j]
        out[j] = 2.0 * m
        if K[j] < kmin:
            kmin = K[j]
        if 2.0 * m * m > msup:
            msup = 2.0 * m * m
    return kmin, msup


@njit(cache=True)
def _advance(psi, rho, s, dt, nsteps):
    """Classical four-stage Runge-Kutta steps of the shape equation."""
    n = psi.shape[0]
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    y = psi.copy()
    for _ in range(nsteps):
        _shape_rate(y, rho, s, k1)
        _shape_rate(y + 0.5 * dt * k1, rho, s, k2)
        _shape_rate(y + 0.5 * dt * k2, rho, s, k3)
        _shape_rate(y + dt * k3, rho, s, k4)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y


def shape_rate(metric: AxisymMetric) -> np.ndarray:
    out = np.empty(metric.grid.n)
    _shape_rate(metric.psi, metric.rho, metric.grid.spacing, out)
    return out


# --- potential and M ----------------------------------------------------------


def _potential_face_gradients(metric: AxisymMetric, K: np.ndarray) -> np.ndarray:
    n = metric.grid.n
    s = metric.grid.spacing
    h, w = metric.h, metric.w
    src = s * metric.rho * (2.0 * K - 2.0)
    half = n // 2
    enclosed = np.zeros(n + 1)
    north = np.cumsum(src[: half - 1])
    south = -np.cumsum(src[::-1][: n - half - 1])[::-1]
    enclosed[1:half] = north
    enclosed[half + 1 : n] = south
    enclosed[half] = 0.5 * (np.sum(src[:half]) - np.sum(src[half:]))
    c = face_conductance(h, w)
    D = np.zeros(n + 1)
    D[1:-1] = enclosed[1:-1] / c[1:-1]
    return D


def solve_ricci_potential(
    metric: AxisymMetric, K, tol: float = 1e-8
) -> ScalarField:
    """Mean-zero solution ``f`` of ``Lap f = 2K - 2`` for the discrete Laplacian.

    The system is tridiagonal with a one-dimensional null space (the
    constants).  It is solved in O(n) by noting that the flux through each face
    equals the source enclosed between that face and a pole, which
    is exactly what the flux-form Laplacian states.  Raises
    :class:`InconsistentSourceError` when ``|int (2K - 2)|`` exceeds ``tol``
    times the area, which signals a metric whose area is not ``4 pi``.
    """
    K = K.values if isinstance(K, ScalarField) else np.asarray(K, dtype=float)
    source_total = integrate(metric, 2.0 * K - 2.0)
    if abs(source_total) > tol * metric.area:
        raise InconsistentSourceError(
            f"integral of 2K - 2 is {source_total:.3e}; the area must be 4 pi"
        )
    D = _potential_face_gradients(metric, K)
    f = np.concatenate(([0.0], np.cumsum(D[1:-1] * metric.grid.spacing)))
    f -= integrate(metric, f) / metric.area
    return ScalarField(metric.grid, f)


def m_tensor(metric: AxisymMetric, K, f) -> tuple[np.ndarray, np.ndarray]:
    """Components ``(M_thth, M_phph)`` of ``M = (1 - K) g + Hess f``.

    ``Hess_phph = (w w'/a) f'`` is evaluated with cell-centred gradients.
    ``Hess_thth`` follows from the discrete trace ``Lap f``.  This is the
    continuum identity ``f'' - (h'/h) f' = a (Lap f - Hess_phph / b)`` and it makes
    the discrete ``M`` trace-free whenever ``f`` solves the discrete equation.
    """
    K = K.values if isinstance(K, ScalarField) else np.asarray(K, dtype=float)
    fv = f.values if isinstance(f, ScalarField) else np.asarray(f, dtype=float)
    s = metric.grid.spacing
    D = np.zeros(metric.grid.n + 1)
    D[1:-1] = np.diff(fv) / s
    fprime = 0.5 * (D[:-1] + D[1:])
    F = face_fluxes(metric.h, metric.w, s)
    mphi = (1.0 - K) + 0.5 * (F[:-1] + F[1:]) * fprime / metric.rho
    lap_f = laplacian(metric, fv).values
    mth = 2.0 * (1.0 - K) + lap_f - mphi
    return metric.a * mth, metric.b * mphi


# --- states and stepping ----------------------------------------------------


@dataclass(frozen=True)
class FlowState:
    t: float
    metric: AxisymMetric
    K: ScalarField
    f: ScalarField
    M_thth: np.ndarray
    M_phph: np.ndarray

    @property
    def K_star(self) -> float:
        return float(np.min(self.K.values))

    @property
    def M_norm_sq(self) -> np.ndarray:
        return (self.M_thth / self.metric.a) ** 2 + (self.M_phph / self.metric.b) ** 2

    @property
    def M_sup_sq(self) -> float:
        return float(np.max(self.M_norm_sq))

    def trace_defect(self) -> float:
        """``max |2(1 - K) + Lap f|``, the discrete trace of ``M``."""
        lap_f = laplacian(self.metric, self.f).values
        return float(np.max(np.abs(2.0 * (1.0 - self.K.values) + lap_f)))


def flow_state(metric: AxisymMetric, t: float = 1.0) -> FlowState:
    K = gauss_curvature(metric)
    f = solve_ricci_potential(metric, K)
    mth, mph = m_tensor(metric, K, f)
    return FlowState(float(t), metric, K, f, mth, mph)


def max_stable_step(metric: AxisymMetric, cfl: float = CFL_FACTOR) -> float:
    """Explicit diffusion limit ``cfl * dtheta^2 * min(a)``."""
    return cfl * metric.grid.dtheta**2 * float(np.min(metric.a))


def _checked_advance(psi, rho, s, dt_total, nsub):
    """Advance by ``dt_total`` in ``nsub`` substeps, halving on failure."""
    for _ in range(MAX_HALVINGS + 1):
        new = _advance(psi, rho, s, dt_total / nsub, nsub)
        if np.all(np.isfinite(new)):
            return new, nsub
        nsub *= 2
    raise StepSizeError(f"step of size {dt_total:g} failed after {MAX_HALVINGS} halvings")


def flow_step(state: FlowState, dt: float) -> FlowState:
    """One explicit Runge-Kutta step of size ``dt``, followed by area renormalisation."""
    metric = state.metric
    limit = max_stable_step(metric)
    if not 0 < dt <= limit * (1 + 1e-12):
        raise ValueError(f"dt={dt:g} outside (0, {limit:g}] allowed by the diffusion limit")
    psi, _ = _checked_advance(metric.psi, metric.rho, metric.grid.spacing, dt, 1)
    new = normalize_area(AxisymMetric.from_density_and_shape(metric.grid, metric.rho, psi))
    return flow_state(new, state.t + dt)


# --- traces -----------------------------------------------------------------


@dataclass(frozen=True)
class ExponentialFit:
    """Least-squares fit ``y ~ C exp(-rate t)`` of a positive series."""

    rate: float
    prefactor: float
    residual: float
    t_start: float
    t_end: float

    def envelope(self, t):
        return self.prefactor * np.exp(-self.rate * np.asarray(t, dtype=float))


def exponential_fit(times, values, tail_fraction: float = 0.5) -> ExponentialFit | None:
    """Fit ``log y`` linearly over the last ``tail_fraction`` of the time span.

    The residual is ``||log y - fit|| / ||log y - mean(log y)||`` over the
    fitted samples.  Zero means a perfect exponential and one means the fit
    explains nothing.  Returns ``None`` when fewer than three positive samples
    are available.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.size < 3:
        return None
    t0 = times[-1] - tail_fraction * (times[-1] - times[0])
    mask = (times >= t0) & (values > 0)
    if np.count_nonzero(mask) < 3:
        return None
    t, ly = times[mask], np.log(values[mask])
    slope, intercept = np.polyfit(t, ly, 1)
    spread = np.linalg.norm(ly - ly.mean())
    resid = np.linalg.norm(ly - (slope * t + intercept))
    residual = float(resid / spread) if spread > 0 else 0.0
    return ExponentialFit(float(-slope), float(np.exp(intercept)), residual, float(t[0]), float(t[-1]))


@dataclass(frozen=True)
class FlowTrace:
    """Sampled history of a flow run.

    Besides the scalar series, the shape variable and its rate are stored at
    every sample so that later stages can rebuild the metric at any time by
    cubic Hermite interpolation.
    """

    times: np.ndarray
    K_star_series: np.ndarray
    M_sup_sq_series: np.ndarray
    area_error_series: np.ndarray
    final_state: FlowState
    decay_fit: ExponentialFit | None
    curvature_fit: ExponentialFit | None
    truncation_time: float | None
    density: np.ndarray
    shapes: np.ndarray = field(repr=False)
    shape_rates: np.ndarray = field(repr=False)

    @property
    def grid(self) -> PolarGrid:
        return self.final_state.metric.grid

    @property
    def end_time(self) -> float:
        return float(self.times[-1])

    @property
    def truncated(self) -> bool:
        return self.truncation_time is not None

    def shape_at(self, t: float) -> np.ndarray:
        """Shape variable at time ``t``; held at the last sample afterwards."""
        times = self.times
        if t >= times[-1]:
            return self.shapes[-1].copy()
        if t <= times[0]:
            return self.shapes[0].copy()
        i = int(np.searchsorted(times, t, side="right")) - 1
        dt = times[i + 1] - times[i]
        x = (t - times[i]) / dt
        h00 = (1 + 2 * x) * (1 - x) ** 2
        h10 = x * (1 - x) ** 2
        h01 = x * x * (3 - 2 * x)
        h11 = x * x * (x - 1)
        return (
            h00 * self.shapes[i]
            + h10 * dt * self.shape_rates[i]
            + h01 * self.shapes[i + 1]
            + h11 * dt * self.shape_rates[i + 1]
        )

    def metric_at(self, t: float) -> AxisymMetric:
        return AxisymMetric.from_density_and_shape(self.grid, self.density, self.shape_at(t))

    def to_rows(self):
        for row in zip(self.times, self.K_star_series, self.M_sup_sq_series, self.area_error_series):
            yield tuple(float(x) for x in row)


def run_flow(
    m0: AxisymMetric,
    t_end: float,
    sample_dt: float = 0.002,
    truncation_threshold: float = DEFAULT_TRUNCATION,
    cfl: float = CFL_FACTOR,
) -> FlowTrace:
    """Evolve ``m0`` from ``t = 1`` and sample every ``sample_dt``.

    The run stops early once ``max |M|^2`` falls below
    ``truncation_threshold`` (pass 0 to always reach ``t_end``).  Substeps
    obey the diffusion limit and are sized so that samples land exactly on
    ``1 + k sample_dt``.  :class:`FlowDivergenceError` is raised when
    ``max |M|^2`` climbs a decade above its running minimum.
    """
    if not t_end > 1.0:
        raise ValueError("t_end must exceed 1")
    if not sample_dt > 0:
        raise ValueError("sample_dt must be positive")
    if abs(m0.area - FOUR_PI) > 1e-10 * FOUR_PI:
        raise ValueError("initial metric must have area 4 pi; call normalize_area first")
    grid = m0.grid
    s = grid.spacing
    rho = m0.rho.copy()
    psi = m0.psi.copy()
    rate = np.empty(grid.n)

    nsamples = int(math.ceil((t_end - 1.0) / sample_dt - 1e-9))
    times, kstar, msup, area_err, shapes, rates = [], [], [], [], [], []

    def record(t, psi):
        k, mm = _shape_rate(psi, rho, s, rate)
        times.append(t)
        kstar.append(k)
        msup.append(mm)
        area_err.append(2.0 * np.pi * s * rho.sum() / FOUR_PI - 1.0)
        shapes.append(psi.copy())
        rates.append(rate.copy())
        return mm

    mm = record(1.0, psi)
    running_min = mm
    truncation_time = 1.0 if mm < truncation_threshold else None
    k = 0
    while truncation_time is None and k < nsamples:
        t_next = min(1.0 + (k + 1) * sample_dt, t_end)
        step = t_next - times[-1]
        a_min = float(np.min(rho * np.exp(-psi)))
        dt_max = cfl * grid.dtheta**2 * a_min
        nsub = max(1, int(math.ceil(step / dt_max)))
        psi, _ = _checked_advance(psi, rho, s, step, nsub)
        # keep the area exactly 4 pi against round-off drift in the density
        rho *= FOUR_PI / (2.0 * np.pi * s * rho.sum())
        mm = record(t_next, psi)
        k += 1
        if mm > 10.0 * running_min + 1e-12:
            raise FlowDivergenceError(
                f"max |M|^2 rose from {running_min:.3e} to {mm:.3e} by t={t_next:g}"
            )
        running_min = min(running_min, mm)
        if mm < truncation_threshold:
            truncation_time = t_next

    times_arr = np.asarray(times)
    kstar_arr = np.asarray(kstar)
    msup_arr = np.asarray(msup)
    final_metric = AxisymMetric.from_density_and_shape(grid, rho, psi)
    return FlowTrace(
        times=times_arr,
        K_star_series=kstar_arr,
        M_sup_sq_series=msup_arr,
        area_error_series=np.asarray(area_err),
        final_state=flow_state(final_metric, times_arr[-1]),
        decay_fit=exponential_fit(times_arr, msup_arr),
        curvature_fit=exponential_fit(times_arr, 1.0 - kstar_arr),
        truncation_time=truncation_time,
        density=rho.copy(),
        shapes=np.asarray(shapes),
        shape_rates=np.asarray(rates),
    )
