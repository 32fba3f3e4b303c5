"""Mittag-Leffler and one-sided stable limit laws.

Scale convention: Z has Laplace transform E exp(-t Z) = exp(-Gamma(1+g) t^g),
and Y = Z^(-g) is the unit-mean Mittag-Leffler law of order g with
E Y^p = p! Gamma(1+g)^p / Gamma(1+p g).  Sampling goes through Kanter's
uniform+exponential representation of the standard law W with
E exp(-t W) = exp(-t^g); CDFs through the single-integral representation
P[W <= x] = (1/pi) Int_0^pi exp(-A(u) x^(-g/(1-g))) du.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq
from scipy.special import gamma as Gamma
from scipy.special import gammaln

from .errors import InsufficientData, InvalidGamma, NumericalAccuracyLoss

CDF_ACCURACY_TARGET = 1e-6


def ml_moment(gamma: float, p: int) -> float:
    """E(Y_g^p) = p! Gamma(1+g)^p / Gamma(1+p g)."""
    if not (0.0 <= gamma <= 1.0):
        raise InvalidGamma(f"gamma={gamma} not in [0,1]")
    if p < 0:
        raise ValueError("moment order must be >= 0")
    return math.exp(
        gammaln(p + 1) + p * gammaln(1.0 + gamma) - gammaln(1.0 + p * gamma)
    )


@dataclass(frozen=True)
class LilConstants:
    gamma: float
    K: float
    C: float


def lil_constants(gamma: float) -> LilConstants:
    """K = Gamma(1+g)/(g^g (1-g)^(1-g)) and C = K^(-1/g)."""
    if not (0.0 < gamma < 1.0):
        raise InvalidGamma(f"gamma={gamma} not in (0,1)")
    K = Gamma(1.0 + gamma) / (
        gamma**gamma * (1.0 - gamma) ** (1.0 - gamma)
    )
    return LilConstants(gamma=gamma, K=K, C=K ** (-1.0 / gamma))


def _kanter_A(theta, gamma):
    g = gamma
    s1 = np.sin(g * theta)
    s2 = np.sin((1.0 - g) * theta)
    s3 = np.sin(theta)
    return s1 ** (g / (1.0 - g)) * s2 / s3 ** (1.0 / (1.0 - g))


def sample_standard_stable(rng: np.random.Generator, gamma: float, size):
    """W with E exp(-tW) = exp(-t^g), via Kanter's representation."""
    theta = rng.uniform(0.0, np.pi, size)
    E = rng.standard_exponential(size)
    A = _kanter_A(theta, gamma)
    return (A / E) ** ((1.0 - gamma) / gamma)


def stable_sample(rng: np.random.Generator, gamma: float, size=None):
    """Z = Gamma(1+g)^(1/g) W; degenerate Z = 1 at g = 1."""
    if gamma == 1.0:
        return np.ones(size) if size is not None else 1.0
    if not (0.0 < gamma < 1.0):
        raise InvalidGamma(f"gamma={gamma} not in (0,1]")
    scalar = size is None
    W = sample_standard_stable(rng, gamma, 1 if scalar else size)
    Z = Gamma(1.0 + gamma) ** (1.0 / gamma) * W
    return float(Z[0]) if scalar else Z


def ml_sample(rng: np.random.Generator, gamma: float, size=None):
    """Y = Gamma(1+g)^(-1) W^(-g); exponential at g = 0, constant 1 at g = 1."""
    if gamma == 1.0:
        return np.ones(size) if size is not None else 1.0
    if gamma == 0.0:
        out = rng.standard_exponential(size if size is not None else 1)
        return float(out[0]) if size is None else out
    if not (0.0 < gamma < 1.0):
        raise InvalidGamma(f"gamma={gamma} not in [0,1]")
    scalar = size is None
    W = sample_standard_stable(rng, gamma, 1 if scalar else size)
    Y = W ** (-gamma) / Gamma(1.0 + gamma)
    return float(Y[0]) if scalar else Y


@lru_cache(maxsize=32)
def _w_cdf_table(gamma: float):
    """Monotone interpolant of P[W <= x] on a wide log grid."""
    nodes, weights = np.polynomial.legendre.leggauss(400)
    theta = 0.5 * np.pi * (nodes + 1.0)
    wts = 0.5 * weights  # weights for the (1/pi) Int_0^pi average
    A = _kanter_A(theta, gamma)
    # grid wide enough that both tails are below the accuracy target
    lo = math.log10(max(1e-300, 1e-4 ** (1.0 / gamma)))
    hi = math.log10(1e12 ** (1.0 / gamma))
    x = np.logspace(lo - 2.0, hi + 2.0, 4000)
    v = x ** (-gamma / (1.0 - gamma))
    F = np.exp(-np.outer(v, A)) @ wts
    F = np.clip(F, 0.0, 1.0)
    # enforce monotonicity before interpolating (roundoff in the far tails)
    F = np.maximum.accumulate(F)
    keep = np.concatenate([[True], np.diff(F) > 0])
    return PchipInterpolator(np.log(x[keep]), F[keep], extrapolate=False), \
        float(x[keep][0]), float(x[keep][-1])


def _w_cdf(gamma: float, x):
    interp, xlo, xhi = _w_cdf_table(gamma)
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    low = x <= xlo
    high = x >= xhi
    mid = ~(low | high)
    out[low] = 0.0
    out[high] = 1.0
    if mid.any():
        out[mid] = np.clip(interp(np.log(x[mid])), 0.0, 1.0)
    return out


def stable_cdf(gamma: float, x):
    """P[Z <= x] for the positive g-stable law (degenerate step at g = 1)."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("stable_cdf defined on x >= 0")
    if gamma == 1.0:
        return (x >= 1.0).astype(float)
    if not (0.0 < gamma < 1.0):
        raise InvalidGamma(f"gamma={gamma} not in (0,1]")
    scale = Gamma(1.0 + gamma) ** (1.0 / gamma)
    return _w_cdf(gamma, x / scale)


def ml_cdf(gamma: float, y):
    """P[Y <= y] via the identity Y = Z^(-g)."""
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise ValueError("ml_cdf defined on y >= 0")
    if gamma == 1.0:
        return (y >= 1.0).astype(float)
    if gamma == 0.0:
        return -np.expm1(-y)
    if not (0.0 < gamma < 1.0):
        raise InvalidGamma(f"gamma={gamma} not in [0,1]")
    out = np.zeros_like(y)
    pos = y > 0
    out[pos] = 1.0 - stable_cdf(gamma, y[pos] ** (-1.0 / gamma))
    return out


def stable_laplace(gamma: float, t):
    """E exp(-t Z) = exp(-Gamma(1+g) t^g)."""
    t = np.asarray(t, dtype=float)
    return np.exp(-Gamma(1.0 + gamma) * t**gamma)


def stable_median(gamma: float) -> float:
    interp, xlo, xhi = _w_cdf_table(gamma)
    scale = Gamma(1.0 + gamma) ** (1.0 / gamma)
    w = brentq(lambda u: float(interp(math.log(u))) - 0.5, xlo * 1.001,
               xhi * 0.999, xtol=1e-12, rtol=1e-12)
    return scale * w


def cdf_selfcheck(gamma: float, t_grid=(0.5, 1.0, 2.0)) -> float:
    """Max |quadrature Laplace transform - exact| over t_grid; raises
    NumericalAccuracyLoss above the accuracy target."""
    interp, xlo, xhi = _w_cdf_table(gamma)
    xs = np.logspace(math.log10(xlo), math.log10(xhi), 200000)
    F = _w_cdf(gamma, xs)
    worst = 0.0
    for t in t_grid:
        lt = float(np.sum(np.exp(-t * 0.5 * (xs[1:] + xs[:-1]))
                          * np.diff(F)))
        worst = max(worst, abs(lt - math.exp(-(t**gamma))))
    if worst > 50 * CDF_ACCURACY_TARGET:
        raise NumericalAccuracyLoss(
            f"stable CDF quadrature check failed: {worst:.2e}")
    return worst


class MittagLefflerDist:
    """Unit-mean Mittag-Leffler law of order gamma in [0, 1]."""

    def __init__(self, gamma: float):
        if not (0.0 <= gamma <= 1.0):
            raise InvalidGamma(f"gamma={gamma} not in [0,1]")
        self.gamma = float(gamma)

    def moment(self, p: int) -> float:
        return ml_moment(self.gamma, p)

    def cdf(self, y):
        return ml_cdf(self.gamma, y)

    def sample(self, rng, size=None):
        return ml_sample(rng, self.gamma, size)


class PositiveStableDist:
    """Positive gamma-stable law, gamma in (0, 1]."""

    def __init__(self, gamma: float):
        if not (0.0 < gamma <= 1.0):
            raise InvalidGamma(f"gamma={gamma} not in (0,1]")
        self.gamma = float(gamma)

    def cdf(self, x):
        return stable_cdf(self.gamma, x)

    def sample(self, rng, size=None):
        return stable_sample(rng, self.gamma, size)

    def laplace(self, t):
        return stable_laplace(self.gamma, t)

    def median(self) -> float:
        if self.gamma == 1.0:
            return 1.0
        return stable_median(self.gamma)


def ks_distance(sorted_sample: np.ndarray, cdf) -> float:
    """Two-sided sup |empirical - cdf| over the sample points."""
    x = np.asarray(sorted_sample, dtype=float)
    n = x.shape[0]
    if n < 1:
        raise InsufficientData("empty sample")
    if np.any(np.diff(x) < 0):
        raise ValueError("sample must be sorted ascending")
    F = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(np.max(np.maximum(i / n - F, F - (i - 1) / n)))


def ks_two_sample_threshold(n: int, m: int, alpha: float = 0.01) -> float:
    c = math.sqrt(-0.5 * math.log(alpha / 2.0))
    return c * math.sqrt((n + m) / (n * m))


def dkw_band(n: int, alpha: float = 0.01) -> float:
    """DKW confidence band half-width: sqrt(log(2/alpha) / (2n))."""
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * n))
