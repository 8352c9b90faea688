"""Quadrature evaluation of the energy-coverage probability.

The coverage probability P(P_dc > gamma) is approximated through a
generalized-exponential surrogate for the constant 1, which turns it into an
alternating binomial sum of Laplace transforms of the received RF power:

    P ~= sum_n (-1)^n C(L, n) E[exp(-s_n P_rf)],   s_n = a n / Theta^{-1}(gamma).

Each Laplace transform factorises into an inter-cluster term, a macro-tier
term and a typical-cluster term (associated link plus intra-cluster
interference).  All radial integrals are truncated at ``r_max``, beyond which
the path loss is exactly zero, so every "1 - chi" deficit is a finite
integral and the tail mass is handled in closed form.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as sp_integrate
from scipy import stats
from scipy.special import comb

from .channel import _shape, harvest_inverse, path_loss
from .exceptions import DegenerateTruncationError, DomainError, QuadratureError, UnreachableThresholdError
from .pointprocess import TierConfig, rayleigh_pdf, rician_cdf, rician_logpdf, rician_logsf, rician_pdf
from .quadrature import W_DIFF, W_KRONROD, integrate, panel_nodes, split_edges, tail_integrals
from .scenario import GEApproximation, ScenarioConfig  # noqa: F401  (re-exported)
from .specfun import hyp2f1_half, hyp3f2_xi_series

log = logging.getLogger(__name__)

_V0_CHUNK = 96


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-5
    abs_tol: float = 1e-9
    v0_cutoff_sigmas: float = 8.0
    inter_cutoff: float | None = None
    count_tail_mass: float = 1e-10
    max_panels: int = 4000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise DomainError("quadrature tolerances must be positive")
        if not self.v0_cutoff_sigmas > 0 or (self.inter_cutoff is not None and not self.inter_cutoff > 0):
            raise DomainError("cutoffs must be positive")
        if not 0 < self.count_tail_mass < 1:
            raise DomainError("count_tail_mass must be in (0, 1)")

    def breakpoints(self, scn: ScenarioConfig) -> tuple:
        return scn.channel.breakpoints

    def inter_cutoff_for(self, scn: ScenarioConfig) -> float:
        if self.inter_cutoff is not None:
            return self.inter_cutoff
        return scn.channel.r_max + 8.0 * max(t.pb_scatter for t in scn.tiers)


DEFAULT_QUAD = QuadratureSpec()


# ---------------------------------------------------------------- kernels


def _fading_deficit(s, r, power: float, gain: float, scn: ScenarioConfig) -> np.ndarray:
    """1 - E_{G,h}[exp(-s P G h l(r))] / rho, i.e. 1 - 2F1(1/2, m; 1; -s P N l / m).

    Shape (S, R); zero beyond r_max.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    r = np.asarray(r, dtype=float)
    ch = scn.channel
    ell = path_loss(r, ch)
    out = np.zeros((s.size, r.size))
    for mask, m in ((r < ch.r_min, ch.m_los), ((r >= ch.r_min) & (r < ch.r_max), ch.m_nlos)):
        if mask.any():
            x = s[:, None] * (power * gain / m) * ell[mask][None, :]
            out[:, mask] = 1.0 - hyp2f1_half(m, x)
    return out


def _assoc_deficit(s, r, scn: ScenarioConfig) -> np.ndarray:
    """1 - (m / (m + s P_b N_b l(r)))^m, shape (S, R)."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    r = np.asarray(r, dtype=float)
    ch = scn.channel
    m = _shape(r, ch)
    x = s[:, None] * scn.typical.pb_power * scn.pb_array.size * path_loss(r, ch)[None, :] / m
    return -np.expm1(-m * np.log1p(x))


def assoc_factor(s, r, scn: ScenarioConfig):
    """Laplace factor of the boresight-aligned associated link at distance r."""
    if np.any(np.asarray(s) < 0) or np.any(np.asarray(r) < 0):
        raise DomainError("need s >= 0 and r >= 0")
    out = 1.0 - _assoc_deficit(np.ravel(s), np.ravel(r), scn)
    shape = np.broadcast(np.asarray(s), np.asarray(r)).shape
    if np.ndim(s) == 0:
        out = out[0].reshape(np.shape(r))
    return float(out) if not shape else out


# ---------------------------------------------------------------- radial integrals


def _radial(kernel: np.ndarray | callable, v0, sigma: float, scn: ScenarioConfig, tol: float,
            lo: float = 0.0) -> np.ndarray:
    """int_lo^{r_max} kernel(r) f(r | v0) dr for many kernels and v0 at once.

    ``kernel`` maps r (R,) -> (K, R).  Returns (K, V).
    """
    ch = scn.channel
    v0 = np.atleast_1d(np.asarray(v0, dtype=float))
    edges = [lo] + [b for b in (1.0, ch.r_min) if b > lo] + [ch.r_max]
    out = []
    for start in range(0, v0.size, _V0_CHUNK):
        vv = v0[start:start + _V0_CHUNK]

        def func(r, vv=vv):
            dens = rician_pdf(r[None, :], vv[:, None], sigma)
            return kernel(r)[:, None, :] * dens[None, :, :]

        res = integrate(func, edges, rel_tol=tol, abs_tol=tol, max_width=sigma / 2.0)
        out.append(res.value)
    return np.concatenate(out, axis=1)


def _deficit(s, v0, tier: TierConfig, scn: ScenarioConfig, tol: float) -> np.ndarray:
    """1 - chi(s | v0) for the given tier; shape (S, V)."""
    gain = scn.pb_array.size
    return _radial(lambda r: _fading_deficit(s, r, tier.pb_power, gain, scn), v0, tier.pb_scatter, scn, tol)


def chi(s, v0, tier: TierConfig, scn: ScenarioConfig, quad: QuadratureSpec = DEFAULT_QUAD):
    """Lobe-and-fading averaged Laplace factor of one cluster PB, averaged
    over its Rician distance to a user at distance ``v0`` from the centre."""
    if np.any(np.asarray(s) < 0):
        raise DomainError("s must be non-negative")
    out = 1.0 - _deficit(np.ravel(s), v0, tier, scn, quad.abs_tol / 10)
    return _squeeze(out, s, v0)


def _squeeze(out, s, v0):
    if np.ndim(s) == 0:
        out = out[0]
        return float(out[0]) if np.ndim(v0) == 0 else out
    return out[:, 0] if np.ndim(v0) == 0 else out


def _intra_mean(scn: ScenarioConfig) -> float:
    c = scn.typical.mean_pb_count - 1.0
    if c < 0:
        warnings.warn(f"mean PB count {scn.typical.mean_pb_count} < 1; "
                      "non-associated mean clamped to 0", RuntimeWarning, stacklevel=3)
        return 0.0
    return c


def laplace_intra_ra(s, v0, scn: ScenarioConfig, quad: QuadratureSpec = DEFAULT_QUAD):
    """Laplace transform of intra-cluster interference (random association)."""
    if np.any(np.asarray(s) < 0):
        raise DomainError("s must be non-negative")
    c = _intra_mean(scn)
    d = _deficit(np.ravel(s), v0, scn.typical, scn, quad.abs_tol / 10)
    return _squeeze(np.exp(-c * scn.pb_array.lobe_hit_probability * d), s, v0)


def chi_prime(s: float, v0: float, s_b: float, scn: ScenarioConfig,
              quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """chi averaged over the Rician law truncated to r > s_b."""
    if s < 0 or s_b < 0:
        raise DomainError("need s >= 0 and s_b >= 0")
    ch = scn.channel
    if s_b >= ch.r_max or s == 0:
        return 1.0
    tier = scn.typical
    sigma = tier.pb_scatter
    log_mass = float(rician_logsf(s_b, v0, sigma)) if s_b > 0 else 0.0
    if not math.isfinite(log_mass):
        raise DegenerateTruncationError(f"no Rician mass beyond s_b={s_b} (v0={v0})")
    gain = scn.pb_array.size

    def func(r):
        k = _fading_deficit(s, r, tier.pb_power, gain, scn)[0]
        return k * np.exp(rician_logpdf(r, v0, sigma) - log_mass)

    edges = [s_b] + [b for b in (1.0, ch.r_min) if b > s_b] + [ch.r_max]
    res = integrate(func, edges, rel_tol=quad.abs_tol / 10, abs_tol=quad.abs_tol / 10, max_width=sigma / 2)
    return float(1.0 - res.value)


def laplace_intra_na(s: float, v0: float, s_b: float, count: int, scn: ScenarioConfig,
                     quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Laplace transform of intra-cluster interference given the nearest
    distance ``s_b`` and the cluster size ``count`` (nearest association)."""
    if count < 1:
        raise DomainError("count must be >= 1")
    if count == 1 or s == 0:
        return 1.0
    cp = chi_prime(s, v0, s_b, scn, quad)
    return (1.0 - scn.pb_array.lobe_hit_probability * (1.0 - cp)) ** (count - 1)


# ---------------------------------------------------------------- inter-cluster and macro tier


def _inter_exponent(s: np.ndarray, scn: ScenarioConfig, quad: QuadratureSpec, tol: float):
    """Sum over tiers of 2 pi lambda_i int (1 - exp(-C_i rho (1 - chi_i))) v0 dv0.

    Returns (exponent (S,), tail_bound, worst quadrature error).
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    rho = scn.pb_array.lobe_hit_probability
    cut = quad.inter_cutoff_for(scn)
    r_max = scn.channel.r_max
    total = np.zeros(s.size)
    tail = 0.0
    worst = 0.0
    for tier in scn.tiers:
        if tier.parent_intensity == 0 or tier.mean_pb_count == 0:
            continue
        c = tier.mean_pb_count * rho

        def func(v0, tier=tier, c=c):
            d = _deficit(s, v0, tier, scn, tol / 10)
            return -np.expm1(-c * d) * v0[None, :]

        res = integrate(func, [0.0, r_max, cut], rel_tol=tol, abs_tol=tol,
                        max_width=tier.pb_scatter, max_panels=quad.max_panels)
        total += 2.0 * np.pi * tier.parent_intensity * res.value
        worst = max(worst, res.worst_error)
        # 1 - exp(-x) <= x and 1 - chi <= F(r_max | v0)
        t, _ = sp_integrate.quad(lambda v: rician_cdf(r_max, v, tier.pb_scatter) * v,
                                 cut, cut + 40.0 * tier.pb_scatter, limit=200)
        tail += 2.0 * np.pi * tier.parent_intensity * c * t
    return total, tail, worst


def laplace_inter(s, scn: ScenarioConfig, quad: QuadratureSpec = DEFAULT_QUAD):
    """Laplace transform of the power from PBs in all other clusters."""
    if np.any(np.asarray(s) < 0):
        raise DomainError("s must be non-negative")
    expo, _, _ = _inter_exponent(np.ravel(s), scn, quad, quad.abs_tol)
    out = np.exp(-expo)
    return float(out[0]) if np.ndim(s) == 0 else out


def mbs_integral(s, scn: ScenarioConfig, quad: QuadratureSpec = DEFAULT_QUAD):
    """int_0^inf (1 - 2F1(1/2, m; 1; -s P_m N_m l(r) / m)) r dr by quadrature."""
    if np.any(np.asarray(s) < 0):
        raise DomainError("s must be non-negative")
    ch = scn.channel
    mac = scn.macro
    res = integrate(lambda r: _fading_deficit(np.ravel(s), r, mac.power, mac.array.size, scn) * r[None, :],
                    [0.0, 1.0, ch.r_min, ch.r_max], rel_tol=quad.abs_tol, abs_tol=quad.abs_tol,
                    max_width=10.0)
    return float(res.value[0]) if np.ndim(s) == 0 else res.value


def mbs_integral_closed_form(s: float, scn: ScenarioConfig) -> float:
    """Same quantity via 3F2 antiderivatives; only valid while every series
    argument stays inside the unit disk (small s)."""
    ch = scn.channel
    mac = scn.macro
    spn = s * mac.power * mac.array.size

    def xi(u, alpha, beta, m):
        return -0.5 * u * u * hyp3f2_xi_series(m, alpha, spn * beta * u ** -alpha / m)

    return (0.5 * ch.r_max ** 2 - 0.5 * hyp2f1_half(ch.m_los, spn / ch.m_los)
            + xi(ch.r_min, ch.alpha_los, ch.beta_los, ch.m_los)
            - xi(1.0, ch.alpha_los, ch.beta_los, ch.m_los)
            + xi(ch.r_max, ch.alpha_nlos, ch.beta_nlos, ch.m_nlos)
            - xi(ch.r_min, ch.alpha_nlos, ch.beta_nlos, ch.m_nlos))


def laplace_mbs(s, scn: ScenarioConfig, quad: QuadratureSpec = DEFAULT_QUAD):
    """Laplace transform of the macro-tier power."""
    mac = scn.macro
    if mac.intensity == 0:
        return 1.0 if np.ndim(s) == 0 else np.ones(np.size(s))
    return np.exp(-2.0 * np.pi * mac.intensity * mac.array.lobe_hit_probability * mbs_integral(s, scn, quad))


# ---------------------------------------------------------------- coverage


@dataclass
class AnalyticResult:
    probability: float
    strategy: str
    terms: list = field(default_factory=list)  # E[exp(-s_n P_rf)] for n = 0..L
    rf_threshold: float | None = None
    diagnostics: dict = field(default_factory=dict)


def _s_grid(scn: ScenarioConfig):
    ge = scn.ge
    p_rf = harvest_inverse(scn.energy_threshold, scn.harvester)
    n = np.arange(1, ge.order + 1)
    return ge.normalizer * n / p_rf, p_rf


def _binomial_sum(terms, L: int) -> float:
    signed = [(-1) ** n * float(comb(L, n, exact=True)) * t for n, t in enumerate(terms)]
    return math.fsum(signed)


def _tolerances(scn: ScenarioConfig, quad: QuadratureSpec):
    # the alternating sum amplifies term errors by up to 2^L
    term_tol = min(quad.abs_tol, quad.rel_tol / 2.0 ** scn.ge.order)
    return term_tol, term_tol / 10.0


def _outer_v0(func, scn: ScenarioConfig, quad: QuadratureSpec, tol: float):
    sigma_u = scn.typical.eu_scatter
    cut = quad.v0_cutoff_sigmas * sigma_u
    return integrate(lambda v0: func(v0) * rayleigh_pdf(v0, sigma_u)[None, :], [0.0, cut],
                     rel_tol=tol, abs_tol=tol, max_width=min(sigma_u, scn.typical.pb_scatter) / 2.0,
                     max_panels=quad.max_panels)


def _shared_factors(s, scn, quad, tol):
    expo, tail, err = _inter_exponent(s, scn, quad, tol)
    l_mbs = laplace_mbs(s, scn, quad)
    return np.exp(-expo) * l_mbs, {"inter_tail_bound": tail, "inter_worst_error": err}


def _ra_terms(s, scn: ScenarioConfig, quad: QuadratureSpec, tol_outer: float, tol_inner: float):
    tier = scn.typical
    c = _intra_mean(scn) * scn.pb_array.lobe_hit_probability
    gain = scn.pb_array.size
    nk = s.size

    def kernel(r):
        return np.concatenate((_fading_deficit(s, r, tier.pb_power, gain, scn), _assoc_deficit(s, r, scn)))

    def func(v0):
        both = _radial(kernel, v0, tier.pb_scatter, scn, tol_inner)
        d, a = both[:nk], both[nk:]
        return np.exp(-c * d) * (1.0 - a)

    return _outer_v0(func, scn, quad, tol_outer)


def _poisson_weights(mean: float, tail_mass: float) -> np.ndarray:
    """P(C = c) for c = 0..C* with P(C > C*) < tail_mass."""
    c_star = max(int(stats.poisson.isf(tail_mass, mean)), 0)
    while stats.poisson.sf(c_star, mean) >= tail_mass:
        c_star += 1
    while c_star > 0 and stats.poisson.sf(c_star - 1, mean) < tail_mass:
        c_star -= 1
    return stats.poisson.pmf(np.arange(c_star + 1), mean)


def _na_inner(s, v0, scn: ScenarioConfig, weights: np.ndarray, tol: float) -> np.ndarray:
    """Typical-cluster factor for nearest association, summed over C >= 1.

    With g(r) = P(R > r) - rho int_r^{r_max} (1 - 2F1) f, the product of the
    order-statistic density and the (C-1) truncated intra factors collapses
    to C g(r)^{C-1} f(r), which stays finite where the truncated law itself
    degenerates.  Returns shape (S, V).
    """
    tier = scn.typical
    ch = scn.channel
    sigma = tier.pb_scatter
    rho = scn.pb_array.lobe_hit_probability
    gain = scn.pb_array.size
    if weights.size < 2:
        return np.zeros((s.size, v0.size))
    poly = weights[1:] * np.arange(1, weights.size)  # coefficients of g^(C-1)
    width = sigma / 2.0
    for _ in range(8):
        edges = split_edges([0.0, 1.0, ch.r_min, ch.r_max], width)
        x, half = panel_nodes(edges[:-1], edges[1:])
        r = x.ravel()
        dens = rician_pdf(r[None, :], v0[:, None], sigma).reshape(v0.size, *x.shape)  # (V, P, 15)
        k = _fading_deficit(s, r, tier.pb_power, gain, scn).reshape(s.size, *x.shape)
        assoc = 1.0 - _assoc_deficit(s, r, scn).reshape(s.size, *x.shape)
        sf_rmax = np.exp(rician_logsf(ch.r_max, v0, sigma))  # (V,)
        g = sf_rmax[None, :, None, None] + tail_integrals(
            (1.0 - rho * k)[:, None] * dens[None], half)  # (S, V, P, 15)
        acc = np.full_like(g, poly[-1])
        for c in poly[-2::-1]:
            acc = acc * g + c
        vals = assoc[:, None] * acc * dens[None]
        body = (vals * W_KRONROD).sum(-1) * half
        err = np.abs((vals * W_DIFF).sum(-1) * half).sum(-1)
        if np.all(err <= tol):
            tail = sum(w * sf_rmax ** c for c, w in enumerate(weights) if c >= 1)
            return body.sum(-1) + tail[None, :]
        width /= 2.0
    raise QuadratureError(f"nearest-association inner integral did not converge (error {err.max():.3g})",
                          error=float(err.max()))


def _na_terms(s, scn: ScenarioConfig, quad: QuadratureSpec, tol_outer: float, tol_inner: float):
    weights = _poisson_weights(scn.typical.mean_pb_count, quad.count_tail_mass)

    def func(v0):
        return np.concatenate([_na_inner(s, v0[i:i + 32], scn, weights, tol_inner)
                               for i in range(0, v0.size, 32)], axis=1)

    return _outer_v0(func, scn, quad, tol_outer), weights


def analyze(scn: ScenarioConfig, quad: QuadratureSpec = DEFAULT_QUAD) -> AnalyticResult:
    """Coverage probability for the scenario's association strategy with diagnostics."""
    try:
        s, p_rf = _s_grid(scn)
    except UnreachableThresholdError:
        return AnalyticResult(0.0, scn.strategy, [], None, {"unreachable_threshold": True})
    tol_outer, tol_inner = _tolerances(scn, quad)
    shared, diag = _shared_factors(s, scn, quad, tol_outer)
    if scn.strategy == "random":
        res = _ra_terms(s, scn, quad, tol_outer, tol_inner)
    else:
        res, weights = _na_terms(s, scn, quad, tol_outer, tol_inner)
        diag["count_truncation"] = int(weights.size - 1)
    terms = [1.0] + list(shared * res.value)
    diag.update(v0_worst_error=res.worst_error, v0_worst_panel=res.worst_panel,
                v0_panels=res.n_panels, term_tolerance=tol_outer)
    p = _binomial_sum(terms, scn.ge.order)
    log.debug("coverage %s: raw sum %.12g", scn.strategy, p)
    return AnalyticResult(min(max(p, 0.0), 1.0), scn.strategy, terms, p_rf, diag)


def coverage_ra(scn: ScenarioConfig, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    if scn.strategy != "random":
        scn = scn.replace(strategy="random")
    return analyze(scn, quad).probability


def coverage_na(scn: ScenarioConfig, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    if scn.strategy != "nearest":
        scn = scn.replace(strategy="nearest")
    return analyze(scn, quad).probability


def coverage(scn: ScenarioConfig, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    return analyze(scn, quad).probability
