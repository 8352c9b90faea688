"""Link-level physics: blockage path loss, Nakagami shape, cosine array gain
and the logistic rectifier model."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.special import expit, logit

from .exceptions import DomainError, UnreachableThresholdError

LOBE_MODES = ("pi_n", "one_over_n")


def dbm_to_watts(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def watts_to_dbm(watts):
    return 10.0 * np.log10(np.asarray(watts, dtype=float)) + 30.0


@dataclass(frozen=True)
class BlockageChannel:
    """Three-state (LOS / NLOS / outage) distance-deterministic channel.

    The NLOS intercept is derived so that the path loss is continuous at
    ``r_min``; the LOS intercept is fixed at 1.
    """

    alpha_los: float = 2.0
    alpha_nlos: float = 4.0
    m_los: float = 3.0
    m_nlos: float = 2.0
    r_min: float = 100.0
    r_max: float = 200.0

    def __post_init__(self):
        if not 1.0 < self.r_min < self.r_max:
            raise DomainError(f"need 1 < r_min < r_max, got r_min={self.r_min}, r_max={self.r_max}")
        if self.alpha_los <= 0 or self.alpha_nlos <= 0:
            raise DomainError("path-loss exponents must be positive")
        if self.m_los < 0.5 or self.m_nlos < 0.5:
            raise DomainError("Nakagami shapes must be >= 0.5")

    @property
    def beta_los(self) -> float:
        return 1.0

    @property
    def beta_nlos(self) -> float:
        return self.r_min ** (self.alpha_nlos - self.alpha_los)

    @property
    def breakpoints(self) -> tuple[float, float, float]:
        return (1.0, self.r_min, self.r_max)


def path_loss(r, ch: BlockageChannel):
    r = np.asarray(r, dtype=float)
    safe = np.maximum(r, 1.0)
    out = np.where(
        r < 1.0, 1.0,
        np.where(r < ch.r_min, ch.beta_los * safe ** -ch.alpha_los,
                 np.where(r < ch.r_max, ch.beta_nlos * safe ** -ch.alpha_nlos, 0.0)))
    return out if out.ndim else float(out)


def _shape(r, ch: BlockageChannel):
    # shape with a placeholder of 1 in outage, for vectorised formulas that
    # multiply by path_loss == 0 there anyway
    r = np.asarray(r, dtype=float)
    return np.where(r < ch.r_min, ch.m_los, np.where(r < ch.r_max, ch.m_nlos, 1.0))


def nakagami_shape(r, ch: BlockageChannel):
    """Nakagami shape m(r); undefined (DomainError) in the outage state."""
    r = np.asarray(r, dtype=float)
    if np.any(r >= ch.r_max):
        raise DomainError(f"no fading defined at r >= r_max={ch.r_max}")
    if np.any(r < 0):
        raise DomainError("distance must be non-negative")
    out = _shape(r, ch)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class AntennaArray:
    """Uniform linear array with a cosine main lobe.

    ``lobe_hit_probability`` is the chance that a randomly oriented
    interferer points its main lobe at the receiver.
    """

    size: int
    lobe_hit_probability: float = field(default=None)

    def __post_init__(self):
        if self.size < 1:
            raise DomainError(f"array size must be >= 1, got {self.size}")
        if self.lobe_hit_probability is None:
            object.__setattr__(self, "lobe_hit_probability", 1.0 / (math.pi * self.size))
        if not 0.0 < self.lobe_hit_probability <= 1.0:
            raise DomainError(f"lobe hit probability must be in (0, 1], got {self.lobe_hit_probability}")

    @classmethod
    def from_mode(cls, size: int, mode: str = "pi_n") -> "AntennaArray":
        if mode == "pi_n":
            return cls(size, 1.0 / (math.pi * size))
        if mode == "one_over_n":
            return cls(size, 1.0 / size)
        raise DomainError(f"unknown lobe_prob_mode {mode!r}; expected one of {LOBE_MODES}")


def antenna_gain(u, arr: AntennaArray):
    """Gain N cos^2(pi u / 2) inside the main lobe |u| <= 1, zero outside.

    ``u`` is the normalised angle rescaled by the array size, so the main
    lobe always spans [-1, 1].
    """
    u = np.asarray(u, dtype=float)
    out = np.where(np.abs(u) <= 1.0, arr.size * np.cos(0.5 * np.pi * u) ** 2, 0.0)
    return out if out.ndim else float(out)


def sample_interferer_gain(arr: AntennaArray, rng: np.random.Generator, size=None):
    """Random gain seen from a non-aligned transmitter.

    Both uniforms are always drawn so the number of variates consumed does
    not depend on the array parameters (keeps common-random-number couplings
    aligned).
    """
    hit = rng.random(size)
    u = rng.uniform(-1.0, 1.0, size)
    return np.where(hit < arr.lobe_hit_probability, antenna_gain(u, arr), 0.0)


@dataclass(frozen=True)
class Harvester:
    """Logistic rectifier: saturation ``p_max``, sensitivity ``p_th`` (watts),
    fitting constants ``c1`` (1/W) and ``c2``."""

    p_max: float = 4.927e-3
    p_th: float = 0.064e-3
    c1: float = 274.0
    c2: float = 0.29

    def __post_init__(self):
        if not self.p_max > 0:
            raise DomainError("p_max must be positive")
        if self.p_th < 0:
            raise DomainError("p_th must be non-negative")
        if not self.c1 > 0:
            raise DomainError("c1 must be positive")

    @property
    def _e_th(self) -> float:
        return math.exp(-self.c1 * self.p_th + self.c2)

    @property
    def _sig_th(self) -> float:
        return float(expit(self.c1 * self.p_th - self.c2))


def harvest_dc(p_rf, h: Harvester):
    """DC output power for RF input ``p_rf`` (watts)."""
    p_rf = np.asarray(p_rf, dtype=float)
    e = h._e_th
    # P_max/E * ((1+E)/(1+exp(c2 - c1 p)) - 1), rewritten with the logistic
    out = h.p_max * (1.0 + e) / e * (expit(h.c1 * p_rf - h.c2) - h._sig_th)
    out = np.maximum(out, 0.0)
    return out if out.ndim else float(out)


def harvest_inverse(gamma: float, h: Harvester) -> float:
    """RF input power at which the rectifier delivers ``gamma`` watts DC."""
    if not gamma > 0:
        raise DomainError(f"DC target must be positive, got {gamma}")
    if gamma >= h.p_max:
        raise UnreachableThresholdError(
            f"threshold {gamma:g} W is not below the saturation power {h.p_max:g} W")
    e = h._e_th
    q = gamma * e / (h.p_max * (1.0 + e)) + h._sig_th
    if 0.0 < q < 1.0:
        p = (h.c2 + float(logit(q))) / h.c1
        if math.isfinite(p) and p > h.p_th:
            return p
    # closed form degenerate (q rounded to 1): bracket and bisect
    hi = max(h.p_th, 1e-12) * 2.0
    while harvest_dc(hi, h) <= gamma:
        hi *= 2.0
        if hi > 1e12:
            raise UnreachableThresholdError(f"threshold {gamma:g} W not reachable numerically")
    return optimize.brentq(lambda p: harvest_dc(p, h) - gamma, h.p_th, hi, xtol=1e-300, rtol=1e-15)
