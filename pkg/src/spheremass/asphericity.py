"""Asphericity mass of a sphere metric from its flow trace.

With ``Phi(t) = int_1^t s |M|_*^2(s) / 2 ds`` the damping kernel is
``E(tau, t) = exp(Phi(tau) - Phi(t))`` and

    m_aS(t) = 1/2 int_1^t (1 - K_*(tau) E(tau, t)) dtau
            = (t - 1)/2 - exp(-Phi(t))/2 int_1^t K_*(tau) exp(Phi(tau)) dtau.

``Phi`` is the exact integral of the piecewise-linear interpolant of the
sampled integrand, which coincides with the trapezoidal rule at the samples.
After a truncated trace ends, the metric counts as round, so ``K_* = 1`` and
``|M| = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .modified_ricci_flow import FlowTrace


class CannotExtrapolateError(RuntimeError):
    """The trace does not decay, so the limit cannot be extrapolated."""


def _damping_integrand(trace: FlowTrace) -> np.ndarray:
    return 0.5 * trace.times * trace.M_sup_sq_series


def damping_exponent(trace: FlowTrace, t=None) -> np.ndarray:
    """``Phi`` at the sample times, or at the given times ``t``."""
    times = trace.times
    g = _damping_integrand(trace)
    phi = cumulative_trapezoid(g, times, initial=0.0)
    if t is None:
        return phi
    t = np.atleast_1d(np.asarray(t, dtype=float))
    i = np.clip(np.searchsorted(times, t, side="right") - 1, 0, times.size - 2) if times.size > 1 else None
    if i is None:
        return np.full_like(t, phi[-1])
    x = np.clip(t, times[0], times[-1]) - times[i]
    slope = (g[i + 1] - g[i]) / (times[i + 1] - times[i])
    out = phi[i] + x * (g[i] + 0.5 * slope * x)
    return np.where(t >= times[-1], phi[-1], out)


def kernel_E(trace: FlowTrace, tau: float, t: float) -> float:
    """Damping factor ``exp(-int_tau^t s |M|_*^2 / 2 ds)``, which lies in ``(0, 1]``."""
    if tau > t:
        raise ValueError(f"kernel needs tau <= t, got tau={tau}, t={t}")
    if tau < trace.times[0]:
        raise ValueError("tau precedes the start of the trace")
    if tau == t:
        return 1.0
    p = damping_exponent(trace, [tau, t])
    return float(np.exp(p[0] - p[1]))


def partial_series(trace: FlowTrace) -> np.ndarray:
    """``m_aS(t_i)`` at every sample time of the trace."""
    times = trace.times
    phi = damping_exponent(trace)
    # work relative to the current exponent to keep exp() bounded
    inner = cumulative_trapezoid(trace.K_star_series * np.exp(phi - phi[-1]), times, initial=0.0)
    return 0.5 * (times - times[0]) - 0.5 * np.exp(phi[-1] - phi) * inner


def cumulative_at(times, values, t) -> np.ndarray:
    """Integral from ``times[0]`` to each ``t`` of the piecewise-linear interpolant of ``values``.

    Times past the last sample are clamped to it.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    t = np.clip(np.atleast_1d(np.asarray(t, dtype=float)), times[0], times[-1])
    if times.size == 1:
        return np.zeros_like(t)
    cum = cumulative_trapezoid(values, times, initial=0.0)
    i = np.clip(np.searchsorted(times, t, side="right") - 1, 0, times.size - 2)
    x = t - times[i]
    slope = (values[i + 1] - values[i]) / (times[i + 1] - times[i])
    return cum[i] + x * (values[i] + 0.5 * slope * x)


def asphericity_partial_at(trace: FlowTrace, t) -> np.ndarray:
    """``m_aS(t)`` at each of the given times (all at or after the start of the trace)."""
    times = trace.times
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < times[0]):
        raise ValueError("t precedes the start of the trace")
    phi = damping_exponent(trace)
    weights = trace.K_star_series * np.exp(phi - phi[-1])
    inner = cumulative_at(times, weights, t)
    t_in = np.minimum(t, times[-1])
    # past the trace the integrand 1 - E vanishes, so the value is frozen
    return 0.5 * (t_in - times[0]) - 0.5 * np.exp(phi[-1] - damping_exponent(trace, t_in)) * inner


def asphericity_partial(trace: FlowTrace, t: float) -> float:
    """``m_aS(t)``; constant after the end of the trace."""
    return float(asphericity_partial_at(trace, [t])[0])


def _exp_tail(C: float, c: float, T: float) -> float:
    return C / c * np.exp(-c * T)


def _exp_tail_t2(C: float, c: float, T: float) -> float:
    return C * np.exp(-c * T) * (T * T / c + 2 * T / c**2 + 2 / c**3)


def tail_bound(trace: FlowTrace) -> float:
    """Bound on ``m_aS(inf) - m_aS(T)`` from the fitted decay envelopes.

    The growth rate of ``m_aS(t)`` is at most
    ``(1 - K_*(t))/2 + t^2 |M|_*^2(t) / 4``.  Both envelopes are exponentials,
    so the bound is integrated in closed form from the last sample to infinity.
    """
    T = trace.end_time
    kfit, mfit = trace.curvature_fit, trace.decay_fit
    gap = 1.0 - trace.K_star_series[-1]
    if kfit is None or mfit is None:
        # a trace truncated at its first sample counts as round from the start,
        # the same convention that sets K_* = 1 and |M| = 0 after truncation
        if trace.times.size == 1 and trace.truncated:
            return 0.0
        raise CannotExtrapolateError("not enough decaying samples to fit an envelope")
    if kfit.rate <= 0 or mfit.rate <= 0:
        raise CannotExtrapolateError(
            f"fitted decay rates must be positive, got {kfit.rate:.3g} and {mfit.rate:.3g}"
        )
    # anchor the envelopes at the last sample so the bound follows the data
    Ck = max(gap, 0.0) * np.exp(kfit.rate * T)
    Cm = trace.M_sup_sq_series[-1] * np.exp(mfit.rate * T)
    return float(0.5 * _exp_tail(Ck, kfit.rate, T) + 0.25 * _exp_tail_t2(Cm, mfit.rate, T))


@dataclass(frozen=True)
class AsphericityResult:
    partial_times: np.ndarray
    partial_values: np.ndarray
    limit: float | None
    tail_bound: float | None
    truncation_time: float | None

    @property
    def partial_series(self):
        return list(zip(self.partial_times.tolist(), self.partial_values.tolist()))


def asphericity_limit(trace: FlowTrace, require_truncation: bool = True) -> AsphericityResult:
    """Limit ``m_aS = m_aS(T) + bound/2``, with the bound reported alongside.

    Raises :class:`CannotExtrapolateError` when the envelopes cannot be fitted.
    The error carries the partial result in its ``partial`` attribute.
    """
    values = partial_series(trace)
    partial = AsphericityResult(trace.times.copy(), values, None, None, trace.truncation_time)
    if require_truncation and not trace.truncated:
        err = CannotExtrapolateError("trace ended before reaching its truncation threshold")
        err.partial = partial
        raise err
    try:
        bound = tail_bound(trace)
    except CannotExtrapolateError as err:
        err.partial = partial
        raise
    limit = float(values[-1]) + 0.5 * bound
    return AsphericityResult(trace.times.copy(), values, limit, bound, trace.truncation_time)
