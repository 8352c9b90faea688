"""Monte Carlo ground truth for the energy-coverage probability.

Every trial owns an independent random stream derived from ``(seed, trial)``,
so estimates do not depend on how trials are distributed over workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .analytic import DEFAULT_QUAD, QuadratureSpec
from .channel import _shape, harvest_dc, path_loss, sample_interferer_gain
from .exceptions import DomainError
from .pointprocess import TypicalCluster, sample_ppp_disk, sample_typical_cluster
from .scenario import ScenarioConfig

WINDOW_SIGMAS = 6.0
_Z95 = float(stats.norm.ppf(0.975))
_COMPONENTS = ("p_asso", "p_intra", "p_inter", "p_mbs", "p_rf", "p_dc")


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(trial,))))


@dataclass
class Realization:
    typical: TypicalCluster
    associated_index: int | None
    other_pbs: list  # per tier: (n, 2) PB positions of all non-typical clusters
    other_centers: list  # per tier: (n, 2) parent positions
    mbs_points: np.ndarray
    rng_trace: tuple = ()


@dataclass(frozen=True)
class PowerBreakdown:
    p_asso: float = 0.0
    p_intra: float = 0.0
    p_inter: float = 0.0
    p_mbs: float = 0.0
    p_rf: float = 0.0
    p_dc: float = 0.0

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, k) for k in _COMPONENTS)


@dataclass
class CoverageEstimate:
    probability: float
    ci_low: float
    ci_high: float
    trials: int
    seed: int
    covered: int
    mean_breakdown: PowerBreakdown = field(default_factory=PowerBreakdown)
    window: dict = field(default_factory=dict)

    @property
    def std_error(self) -> float:
        p = self.probability
        return math.sqrt(p * (1.0 - p) / self.trials)


def wilson_interval(k: int, n: int, z: float = _Z95) -> tuple[float, float]:
    if n <= 0:
        raise DomainError("need at least one trial")
    p = k / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if k == 0 else max(0.0, centre - half)
    hi = 1.0 if k == n else min(1.0, centre + half)
    return lo, hi


def window_radii(scn: ScenarioConfig, quad: QuadratureSpec = DEFAULT_QUAD) -> dict:
    cut = quad.inter_cutoff_for(scn)
    return {"mbs_radius_m": scn.channel.r_max,
            "parent_radius_m": [cut + WINDOW_SIGMAS * t.pb_scatter for t in scn.tiers]}


def generate_realization(scn: ScenarioConfig, rng: np.random.Generator,
                         quad: QuadratureSpec = DEFAULT_QUAD, trace: tuple = ()) -> Realization:
    """Sample the network around the typical user.

    The typical cluster sits at the origin; other parents of every tier
    (including the typical tier, by the reduced Palm property) form a PPP on
    a disk around the user large enough that distant parents can still have
    daughters inside ``r_max``.
    """
    typical = sample_typical_cluster(scn.typical, rng)
    eu = typical.eu_position
    radii = window_radii(scn, quad)
    centers, pbs = [], []
    for tier, radius in zip(scn.tiers, radii["parent_radius_m"]):
        parents = sample_ppp_disk(tier.parent_intensity, eu, radius, rng)
        counts = rng.poisson(tier.mean_pb_count, len(parents))
        offsets = rng.normal(0.0, tier.pb_scatter, size=(int(counts.sum()), 2))
        centers.append(parents)
        pbs.append(np.repeat(parents, counts, axis=0) + offsets)
    mbs = sample_ppp_disk(scn.macro.intensity, eu, radii["mbs_radius_m"], rng)
    if typical.pb_count == 0:
        idx = None
    elif scn.strategy == "nearest":
        idx = int(np.argmin(typical.pb_distances()))
    else:
        idx = int(rng.integers(typical.pb_count))
    return Realization(typical, idx, pbs, centers, mbs, trace)


def _link_power(d, power: float, arr, scn: ScenarioConfig, rng) -> float:
    d = d[d < scn.channel.r_max]
    if d.size == 0:
        return 0.0
    gain = sample_interferer_gain(arr, rng, d.size)
    m = _shape(d, scn.channel)
    h = rng.gamma(m, 1.0 / m)
    return float(np.sum(power * gain * h * path_loss(d, scn.channel)))


def received_power(real: Realization, scn: ScenarioConfig, rng: np.random.Generator) -> PowerBreakdown:
    """Draw fading and antenna orientations and accumulate the four RF components."""
    ch = scn.channel
    eu = real.typical.eu_position
    dist = real.typical.pb_distances()
    tier_j = scn.typical
    p_asso = 0.0
    if real.associated_index is not None:
        d0 = dist[real.associated_index]
        if d0 < ch.r_max:
            m0 = float(_shape(d0, ch))
            h0 = rng.gamma(m0, 1.0 / m0)
            p_asso = tier_j.pb_power * scn.pb_array.size * h0 * float(path_loss(d0, ch))
        dist = np.delete(dist, real.associated_index)
    p_intra = _link_power(dist, tier_j.pb_power, scn.pb_array, scn, rng)
    p_inter = 0.0
    for tier, pts in zip(scn.tiers, real.other_pbs):
        d = np.hypot(pts[:, 0] - eu[0], pts[:, 1] - eu[1])
        p_inter += _link_power(d, tier.pb_power, scn.pb_array, scn, rng)
    d = np.hypot(real.mbs_points[:, 0] - eu[0], real.mbs_points[:, 1] - eu[1])
    p_mbs = _link_power(d, scn.macro.power, scn.macro.array, scn, rng)
    p_rf = p_asso + p_intra + p_inter + p_mbs
    return PowerBreakdown(p_asso, p_intra, p_inter, p_mbs, p_rf, float(harvest_dc(p_rf, scn.harvester)))


def run_trial(scn: ScenarioConfig, seed: int, trial: int,
              quad: QuadratureSpec = DEFAULT_QUAD) -> tuple[bool, PowerBreakdown]:
    rng = trial_rng(seed, trial)
    real = generate_realization(scn, rng, quad, (seed, trial))
    pb = received_power(real, scn, rng)
    # an empty typical cluster has no associated PB and is never covered
    covered = real.associated_index is not None and pb.p_dc > scn.energy_threshold
    return covered, pb


def _run_chunk(args):
    scn, seed, start, stop, quad = args
    cov = np.zeros(stop - start, dtype=bool)
    comp = np.zeros((stop - start, len(_COMPONENTS)))
    for i, t in enumerate(range(start, stop)):
        c, pb = run_trial(scn, seed, t, quad)
        cov[i] = c
        comp[i] = pb.as_tuple()
    return cov, comp


def simulate_trials(scn: ScenarioConfig, trials: int, seed: int, workers: int = 1,
                    quad: QuadratureSpec = DEFAULT_QUAD, chunk: int = 500):
    """Per-trial coverage flags (trials,) and power components (trials, 6),
    in trial order regardless of ``workers``."""
    if trials < 1:
        raise DomainError("trials must be >= 1")
    jobs = [(scn, seed, a, min(a + chunk, trials), quad) for a in range(0, trials, chunk)]
    if workers <= 1 or len(jobs) == 1:
        parts = [_run_chunk(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_run_chunk, jobs))
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def estimate_coverage(scn: ScenarioConfig, trials: int, seed: int, workers: int = 1,
                      quad: QuadratureSpec = DEFAULT_QUAD) -> CoverageEstimate:
    """Fraction of trials whose DC output exceeds the energy threshold, with a
    95% Wilson interval."""
    cov, comp = simulate_trials(scn, trials, seed, workers, quad)
    k = int(cov.sum())
    lo, hi = wilson_interval(k, trials)
    means = PowerBreakdown(*(math.fsum(comp[:, i]) / trials for i in range(len(_COMPONENTS))))
    return CoverageEstimate(k / trials, lo, hi, trials, seed, k, means, window_radii(scn, quad))


def laplace_estimate(samples: np.ndarray, s: float) -> tuple[float, float]:
    """Sample mean of exp(-s X) and its standard error."""
    v = np.exp(-s * np.asarray(samples, dtype=float))
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))
