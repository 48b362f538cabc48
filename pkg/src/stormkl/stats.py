"""Boundary-corrected Gaussian KDE and percentile-bounded KL divergence."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from stormkl import kernels

KL_FLOOR = 1e-12
DEFAULT_N_POINTS = 512


class DegenerateDataError(ValueError):
    """Too few samples or zero spread for a bandwidth estimate."""


@dataclass(frozen=True, eq=False)
class DensityEstimate:
    support: np.ndarray
    density: np.ndarray
    bandwidth: float
    n_samples: int
    reflected: bool = True


@dataclass(frozen=True)
class IntegrationBounds:
    lower: float
    upper: float
    n_points: int = DEFAULT_N_POINTS

    def __post_init__(self):
        if not (np.isfinite(self.lower) and np.isfinite(self.upper)) or not self.lower < self.upper:
            raise ValueError(f"invalid integration bounds [{self.lower}, {self.upper}]")
        if self.n_points < 2:
            raise ValueError("n_points must be at least 2")

    def grid(self):
        return np.linspace(self.lower, self.upper, self.n_points)


def percentile(data, p):
    """Linear-interpolation percentile (p=0 gives the min, p=100 the max)."""
    data = np.asarray(data, dtype=np.float64)
    if data.size == 0:
        raise ValueError("percentile of empty data")
    if not 0.0 <= p <= 100.0:
        raise ValueError(f"percentile must be within [0, 100], got {p}")
    return float(np.percentile(data, p, method="linear"))


def silverman_bandwidth(data):
    """0.9 * min(sd, IQR/1.34) * n^(-1/5), sd with the n-1 divisor."""
    data = np.asarray(data, dtype=np.float64)
    n = data.size
    if n < 2:
        raise DegenerateDataError(f"need at least 2 samples for a bandwidth, got {n}")
    sd = data.std(ddof=1)
    q75, q25 = np.percentile(data, [75.0, 25.0])
    spread = min(sd, (q75 - q25) / 1.34)
    if not spread > 0:
        raise DegenerateDataError("zero spread in data, bandwidth would be 0")
    return 0.9 * spread * n ** -0.2


def _evaluate(data, support, h, reflect):
    data = np.ascontiguousarray(data, dtype=np.float64)
    support = np.ascontiguousarray(support, dtype=np.float64)
    if data.size == 0:
        raise DegenerateDataError("no samples")
    if not h > 0:
        raise ValueError(f"bandwidth must be positive, got {h}")
    return kernels.kde_sum(data, support, float(h), bool(reflect))


def kde_reflected(data, support, h):
    """Gaussian KDE with the samples mirrored about zero.

    f(x) = 1/(n h) * sum_i [K((x - x_i)/h) + K((x + x_i)/h)] for x >= 0,
    which is the plain KDE of {x_i, -x_i} doubled on the half-line.
    """
    data = np.asarray(data, dtype=np.float64)
    support = np.asarray(support, dtype=np.float64)
    if np.any(data < 0):
        raise ValueError("reflected KDE needs non-negative data")
    dens = _evaluate(data, support, h, True)
    dens[support < 0] = 0.0
    return DensityEstimate(support, dens, float(h), data.size, True)


def kde_plain(data, support, h):
    data = np.asarray(data, dtype=np.float64)
    support = np.asarray(support, dtype=np.float64)
    return DensityEstimate(support, _evaluate(data, support, h, False), float(h), data.size, False)


def fit_density(data, support, reflect=True):
    """KDE with the Silverman bandwidth computed on the unmirrored samples."""
    h = silverman_bandwidth(data)
    return kde_reflected(data, support, h) if reflect else kde_plain(data, support, h)


def integration_bounds(reference, lower_pct=0.0, upper_pct=99.0, n_points=DEFAULT_N_POINTS):
    return IntegrationBounds(percentile(reference, lower_pct),
                             percentile(reference, upper_pct), int(n_points))


def kl_integrand(f, g, floor=KL_FLOOR):
    f = np.asarray(f, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    out = np.zeros_like(f)
    live = f > floor
    out[live] = f[live] * np.log(f[live] / np.maximum(g[live], floor))
    return out


def kl_divergence(f, g, bounds):
    """Trapezoidal D_KL(f || g) on the uniform grid of ``bounds``.

    Both estimates must have been evaluated on ``bounds.grid()``.
    """
    if not isinstance(bounds, IntegrationBounds):
        raise TypeError("bounds must be an IntegrationBounds")
    x = bounds.grid()
    for name, est in (("f", f), ("g", g)):
        if est.support.shape != x.shape or not np.allclose(est.support, x, rtol=1e-12, atol=0.0):
            raise ValueError(f"{name} was not evaluated on the integration grid")
    return float(np.trapezoid(kl_integrand(f.density, g.density), x))
