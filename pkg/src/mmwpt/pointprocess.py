"""Random geometry: PPP and Thomas-cluster samplers, plus the conditional
distance laws of cluster members seen from a user in the same cluster."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate, stats

from .exceptions import DegenerateTruncationError, DomainError
from .channel import AntennaArray
from .specfun import bessel_i0_scaled

# ncx2 tails are trusted down to this survival probability; below it the
# log-survival function is integrated directly
_SF_FLOOR = 1e-100


@dataclass(frozen=True)
class TierConfig:
    """One Thomas-cluster tier of power beacons (and co-located user clusters).

    Intensities are per square metre, scatters in metres, power in watts.
    """

    parent_intensity: float = 1e-3
    pb_scatter: float = 10.0
    eu_scatter: float = 10.0
    mean_pb_count: float = 5.0
    mean_eu_count: float = 5.0
    pb_power: float = 0.1

    def __post_init__(self):
        if self.parent_intensity < 0 or self.mean_pb_count < 0 or self.mean_eu_count < 0:
            raise DomainError("intensities and mean counts must be non-negative")
        if not (self.pb_scatter > 0 and self.eu_scatter > 0):
            raise DomainError("cluster scatters must be positive")
        if not self.pb_power > 0:
            raise DomainError("PB power must be positive")


@dataclass(frozen=True)
class TypicalCluster:
    """The typical user's own cluster, centred at the origin.

    The user sits at (eu_distance, 0); ``pb_offsets`` are PB positions
    relative to the cluster centre.
    """

    eu_distance: float
    pb_offsets: np.ndarray

    @property
    def pb_count(self) -> int:
        return len(self.pb_offsets)

    @property
    def eu_position(self) -> np.ndarray:
        return np.array([self.eu_distance, 0.0])

    def pb_distances(self) -> np.ndarray:
        return np.hypot(self.pb_offsets[:, 0] - self.eu_distance, self.pb_offsets[:, 1])


def sample_ppp_disk(intensity: float, center, radius: float, rng: np.random.Generator) -> np.ndarray:
    """Homogeneous PPP restricted to a disk; returns an (n, 2) array."""
    if intensity < 0 or radius <= 0:
        raise DomainError("need intensity >= 0 and radius > 0")
    n = rng.poisson(intensity * np.pi * radius ** 2)
    rad = radius * np.sqrt(rng.random(n))
    ang = rng.uniform(0.0, 2.0 * np.pi, n)
    return np.column_stack((center[0] + rad * np.cos(ang), center[1] + rad * np.sin(ang)))


def sample_cluster(mean_count: float, scatter: float, center, rng: np.random.Generator) -> np.ndarray:
    """Poisson number of isotropic Gaussian daughters around ``center``."""
    if mean_count < 0 or scatter <= 0:
        raise DomainError("need mean_count >= 0 and scatter > 0")
    n = rng.poisson(mean_count)
    return np.asarray(center, dtype=float) + rng.normal(0.0, scatter, size=(n, 2))


def sample_typical_cluster(tier: TierConfig, rng: np.random.Generator) -> TypicalCluster:
    v0 = rng.rayleigh(tier.eu_scatter)
    pbs = sample_cluster(tier.mean_pb_count, tier.pb_scatter, (0.0, 0.0), rng)
    return TypicalCluster(float(v0), pbs)


def rayleigh_pdf(v, sigma: float):
    v = np.asarray(v, dtype=float)
    return v / sigma ** 2 * np.exp(-0.5 * (v / sigma) ** 2)


def rician_logpdf(r, v0, sigma: float):
    r = np.asarray(r, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    if np.any(r < 0) or np.any(v0 < 0) or not sigma > 0:
        raise DomainError("need r >= 0, v0 >= 0, sigma > 0")
    s2 = sigma * sigma
    with np.errstate(divide="ignore"):
        return (np.log(r) - np.log(s2) - 0.5 * (r - v0) ** 2 / s2
                + np.log(bessel_i0_scaled(r * v0 / s2)))


def rician_pdf(r, v0, sigma: float):
    """Distance density from a Gaussian-scattered point (scatter ``sigma``
    around a centre at distance ``v0``) to the observer.  Broadcasts."""
    out = np.exp(rician_logpdf(r, v0, sigma))
    return out if out.ndim else float(out)


def rician_cdf(r, v0, sigma: float):
    r = np.asarray(r, dtype=float)
    out = stats.ncx2.cdf((r / sigma) ** 2, 2, (np.asarray(v0, dtype=float) / sigma) ** 2)
    return out if np.ndim(out) else float(out)


def _logsf_quad(r: float, v0: float, sigma: float) -> float:
    # log int_r^inf f = log f(r) + log int_r^inf f(t)/f(r) dt
    if not np.isfinite(r):
        return -np.inf
    lf = float(rician_logpdf(r, v0, sigma))
    if not np.isfinite(lf):
        return -np.inf
    # beyond the mode the density falls off like exp(-(r - v0)(t - r) / sigma^2)
    width = 80.0 * min(sigma, sigma * sigma / max(r - v0, 1e-300))
    s2 = sigma * sigma
    log_i0_r = np.log(bessel_i0_scaled(r * v0 / s2))

    def ratio(t):
        # f(t) / f(r) without subtracting two large log-densities
        return np.exp(np.log(t / r) - (t - r) * (t + r - 2.0 * v0) / (2.0 * s2)
                      + np.log(bessel_i0_scaled(t * v0 / s2)) - log_i0_r)

    tail, _ = integrate.quad(ratio, r, r + width, epsabs=0.0, epsrel=1e-12, limit=200)
    return lf + np.log(tail) if tail > 0 else -np.inf


def rician_logsf(r, v0, sigma: float):
    """log(1 - rician_cdf), accurate deep into the upper tail."""
    r, v0 = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(v0, dtype=float))
    shape = r.shape
    r, v0 = r.ravel(), v0.ravel()
    with np.errstate(divide="ignore"):
        out = np.array(stats.ncx2.logsf((r / sigma) ** 2, 2, (v0 / sigma) ** 2), dtype=float)
    bad = (~np.isfinite(out) | (out < np.log(_SF_FLOOR))) & (r > v0)
    for i in np.flatnonzero(bad):
        out[i] = _logsf_quad(r[i], v0[i], sigma)
    out = out.reshape(shape)
    return out if out.ndim else float(out)


def nearest_pdf(r, v0, count: int, sigma: float):
    """Density of the minimum of ``count`` i.i.d. Rician distances."""
    if count < 1:
        raise DomainError("nearest-distance law needs count >= 1")
    logf = rician_logpdf(r, v0, sigma)
    if count == 1:
        out = np.exp(logf)
    else:
        out = np.exp(np.log(count) + (count - 1) * rician_logsf(r, v0, sigma) + logf)
    return out if np.ndim(out) else float(out)


def nonassoc_pdf(r, v0, s_b: float, sigma: float):
    """Rician density truncated to r > s_b (distance of a non-nearest member)."""
    r = np.asarray(r, dtype=float)
    log_mass = rician_logsf(s_b, v0, sigma) if s_b > 0 else 0.0
    if not np.all(np.isfinite(log_mass)):
        raise DegenerateTruncationError(f"no Rician mass beyond s_b={s_b}")
    out = np.where(r > s_b, np.exp(rician_logpdf(r, v0, sigma) - log_mass), 0.0)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class MacroConfig:
    """Macro base-station tier: PPP intensity (per m^2), power (W), array."""

    intensity: float
    power: float
    array: AntennaArray

    def __post_init__(self):
        if self.intensity < 0:
            raise DomainError("MBS intensity must be non-negative")
        if not self.power > 0:
            raise DomainError("MBS power must be positive")
