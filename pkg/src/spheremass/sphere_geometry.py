"""Axisymmetric metrics on the 2-sphere and their finite-difference geometry.

A metric is stored as ``g = a(theta) dtheta^2 + b(theta) dphi^2`` sampled at the
cell centres ``theta_j = (j + 1/2) pi / n``.  The poles are never grid points;
stencils that reach past a pole use ghost cells in which ``h = sqrt(a)`` is
reflected evenly and ``w = sqrt(b)`` oddly.

All differences use the effective spacing ``s = 2 sin(dtheta / 2)`` instead of
``dtheta``.  Both are second-order accurate, but with ``s`` the discrete unit
sphere is exact: its area is ``4 pi``, its face fluxes are exactly
``cos(theta_{j+1/2})`` and its curvature is exactly one.  The round sphere is
therefore a fixed point of the discrete flow rather than an approximate one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

FOUR_PI = 4.0 * np.pi


class InvalidMetricError(ValueError):
    """Raised for metric components that are non-finite or non-positive."""


@dataclass(frozen=True)
class PolarGrid:
    """Cell-centred grid on ``(0, pi)`` with ``n`` cells."""

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 16 or self.n % 2:
            raise ValueError(f"grid size must be an even integer >= 16, got {self.n!r}")

    @property
    def dtheta(self) -> float:
        return np.pi / self.n

    @property
    def theta(self) -> np.ndarray:
        return (np.arange(self.n) + 0.5) * self.dtheta

    @property
    def theta_faces(self) -> np.ndarray:
        return np.arange(self.n + 1) * self.dtheta

    @property
    def spacing(self) -> float:
        """Effective spacing ``2 sin(dtheta/2)`` used by every stencil."""
        return 2.0 * np.sin(0.5 * self.dtheta)


@dataclass(frozen=True)
class ScalarField:
    grid: PolarGrid
    values: np.ndarray
    parity: str = "even"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} values, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("scalar field has non-finite values")
        if self.parity not in ("even", "odd"):
            raise ValueError(f"parity must be 'even' or 'odd', got {self.parity!r}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


@dataclass(frozen=True)
class AxisymMetric:
    """The metric ``a dtheta^2 + b dphi^2``; immutable after construction."""

    grid: PolarGrid
    a: np.ndarray
    b: np.ndarray
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        b = np.array(self.b, dtype=float)
        n = self.grid.n
        if a.shape != (n,) or b.shape != (n,):
            raise InvalidMetricError(f"components must have shape ({n},)")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise InvalidMetricError("metric components must be finite")
        if np.any(a <= 0) or np.any(b <= 0):
            raise InvalidMetricError("metric components must be positive")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    # derived profiles ---------------------------------------------------
    @property
    def h(self) -> np.ndarray:
        return np.sqrt(self.a)

    @property
    def w(self) -> np.ndarray:
        return np.sqrt(self.b)

    @property
    def rho(self) -> np.ndarray:
        """Area density ``sqrt(a b)``; the measure is ``rho dtheta dphi``."""
        return np.sqrt(self.a * self.b)

    @property
    def psi(self) -> np.ndarray:
        """Shape variable ``ln(w / h)``; together with ``rho`` it fixes the metric."""
        return 0.5 * np.log(self.b / self.a)

    @property
    def area(self) -> float:
        return 2.0 * np.pi * self.grid.spacing * float(np.sum(self.rho))

    def scaled(self, c: float) -> "AxisymMetric":
        return AxisymMetric(self.grid, c * self.a, c * self.b)

    # constructors -------------------------------------------------------
    @classmethod
    def from_density_and_shape(cls, grid: PolarGrid, rho, psi) -> "AxisymMetric":
        rho = np.asarray(rho, dtype=float)
        psi = np.asarray(psi, dtype=float)
        return cls(grid, rho * np.exp(-psi), rho * np.exp(psi))

    @classmethod
    def round(cls, n: int, radius: float = 1.0) -> "AxisymMetric":
        grid = PolarGrid(n)
        r2 = radius * radius
        return cls(grid, np.full(n, r2), r2 * np.sin(grid.theta) ** 2)

    @classmethod
    def ellipsoid(cls, n: int, axes: Sequence[float] = (1.0, 1.0, 0.8)) -> "AxisymMetric":
        """Induced metric of the spheroid with equatorial radius ``A`` and polar radius ``C``.

        The two equatorial axes must agree (the surface has to be axisymmetric).
        The parametrisation is ``(A sin t cos p, A sin t sin p, C cos t)``.
        """
        A, B, C = (float(x) for x in axes)
        if not np.isclose(A, B, rtol=1e-14, atol=0.0):
            raise ValueError(f"only spheroids are axisymmetric, got axes {axes!r}")
        if A <= 0 or C <= 0:
            raise InvalidMetricError(f"axes must be positive, got {axes!r}")
        grid = PolarGrid(n)
        th = grid.theta
        a = A * A * np.cos(th) ** 2 + C * C * np.sin(th) ** 2
        b = A * A * np.sin(th) ** 2
        return cls(grid, a, b)

    @classmethod
    def warped(cls, n: int, coefficients: Sequence[float]) -> "AxisymMetric":
        """Metric ``phi^2 (dtheta^2 + sin^2 dphi^2)`` with ``phi = sum c_k cos(k theta)``.

        ``phi`` equals ``sqrt(b) / sin(theta)``.  A cosine series is even about both
        poles, so the metric is smooth there for any coefficients with ``phi > 0``.
        """
        coefficients = np.asarray(coefficients, dtype=float)
        if coefficients.ndim != 1 or coefficients.size == 0:
            raise ValueError("warped family needs at least one Fourier coefficient")
        grid = PolarGrid(n)
        th = grid.theta
        phi = np.cos(np.outer(th, np.arange(coefficients.size))) @ coefficients
        if np.any(phi <= 0):
            raise InvalidMetricError("warping factor must stay positive")
        return cls(grid, phi**2, (phi * np.sin(th)) ** 2)


def ellipsoid_curvature(theta, axes=(1.0, 1.0, 0.8)) -> np.ndarray:
    """Closed-form Gauss curvature of the spheroid in the parametrisation above."""
    A, _, C = axes
    theta = np.asarray(theta, dtype=float)
    a = A * A * np.cos(theta) ** 2 + C * C * np.sin(theta) ** 2
    return C * C / (a * a)


def normalize_area(m: AxisymMetric) -> AxisymMetric:
    """Conformally rescale ``m`` by a constant so that its area is exactly ``4 pi``."""
    area = m.area
    if not np.isfinite(area) or area <= 0:
        raise InvalidMetricError(f"cannot normalise a metric with area {area!r}")
    return m.scaled(FOUR_PI / area)


# --- stencils -------------------------------------------------------------


def face_fluxes(h: np.ndarray, w: np.ndarray, s: float) -> np.ndarray:
    """Values of ``w' / h`` on the ``n + 1`` cell faces, pole faces included.

    At the pole faces the ghost cell carries ``-w`` and ``h``, so the difference
    becomes ``2 w_0 / s`` over ``h_0``.
    """
    n = h.shape[0]
    F = np.empty(n + 1)
    F[0] = 2.0 * w[0] / (s * h[0])
    F[1:n] = (w[1:] - w[:-1]) / (s * 0.5 * (h[1:] + h[:-1]))
    F[n] = -2.0 * w[-1] / (s * h[-1])
    return F


def face_conductance(h: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Coefficient ``w / h`` of the Laplacian on the faces; zero on the pole faces."""
    c = np.zeros(h.shape[0] + 1)
    c[1:-1] = (w[1:] + w[:-1]) / (h[1:] + h[:-1])
    return c


def _raw_curvature(m: AxisymMetric):
    s = m.grid.spacing
    F = face_fluxes(m.h, m.w, s)
    return -np.diff(F) / (s * m.rho), F


def gauss_curvature(m: AxisymMetric, exact_gauss_bonnet: bool = True) -> ScalarField:
    """Gauss curvature ``-(1/(h w)) (w'/h)'`` in conservative form.

    The integral of the unscaled stencil telescopes to ``2 pi (F_0 - F_n)``,
    which equals ``4 pi`` up to ``O(dtheta^2)``.  By default the field is
    multiplied by the constant that makes this exactly ``4 pi``.  The factor is
    ``1 + O(dtheta^2)``, so accuracy is unchanged, and the Poisson problem for
    the Ricci potential becomes exactly solvable.
    """
    K, F = _raw_curvature(m)
    if exact_gauss_bonnet:
        K = K * (2.0 / (F[0] - F[-1]))
    return ScalarField(m.grid, K)


def laplacian_matrix_bands(m: AxisymMetric) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(lower, diag, upper)`` of the tridiagonal Laplace-Beltrami matrix."""
    s = m.grid.spacing
    c = face_conductance(m.h, m.w)
    scale = 1.0 / (s * s * m.rho)
    lower = c[1:-1] * scale[1:]
    upper = c[1:-1] * scale[:-1]
    diag = -(c[:-1] + c[1:]) * scale
    return lower, diag, upper


def _laplacian_values(m: AxisymMetric, phi: np.ndarray) -> np.ndarray:
    s = m.grid.spacing
    c = face_conductance(m.h, m.w)
    flux = np.zeros(m.grid.n + 1)
    flux[1:-1] = c[1:-1] * np.diff(phi) / s
    return np.diff(flux) / (s * m.rho)


def laplacian(m: AxisymMetric, phi) -> ScalarField:
    """Laplace-Beltrami operator ``(1/(h w)) ((w/h) phi')'`` in flux form.

    It annihilates constants exactly and is self-adjoint for the weights of
    :func:`integrate`.
    """
    if isinstance(phi, ScalarField):
        if phi.parity != "even":
            raise ValueError("the Laplacian acts on even fields only")
        phi = phi.values
    phi = np.asarray(phi, dtype=float)
    return ScalarField(m.grid, _laplacian_values(m, phi))


def integrate(m: AxisymMetric, phi) -> float:
    """Quadrature of ``phi`` against the area measure: ``2 pi s sum phi_j rho_j``."""
    values = phi.values if isinstance(phi, ScalarField) else np.asarray(phi, dtype=float)
    return 2.0 * np.pi * m.grid.spacing * float(np.dot(values, m.rho))


def mean_value(m: AxisymMetric, phi) -> float:
    return integrate(m, phi) / m.area


def restrict(values: np.ndarray) -> np.ndarray:
    """Average pairs of fine cells onto the coarse grid with half as many cells."""
    values = np.asarray(values)
    return 0.5 * (values[0::2] + values[1::2])
