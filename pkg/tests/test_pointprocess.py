import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate, stats

from mmwpt.exceptions import DegenerateTruncationError, DomainError
from mmwpt.pointprocess import (TierConfig, nearest_pdf, nonassoc_pdf, rayleigh_pdf, rician_cdf,
                                rician_logpdf, rician_logsf, rician_pdf, sample_cluster,
                                sample_ppp_disk, sample_typical_cluster)

SIGMA = 10.0


def _quad_all(f, a=0.0, b=np.inf):
    return integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-12, limit=400)[0]


def test_ppp_empty_and_mean(rng):
    assert sample_ppp_disk(0.0, (0, 0), 100.0, rng).shape == (0, 2)
    lam, rad = 200e-6, 200.0
    counts = np.array([len(sample_ppp_disk(lam, (5.0, -3.0), rad, rng)) for _ in range(10 ** 4)])
    mean = lam * math.pi * rad ** 2
    assert abs(counts.mean() - mean) < 3 * math.sqrt(mean / counts.size)


def test_ppp_uniform_on_annuli(rng):
    pts = np.concatenate([sample_ppp_disk(1e-3, (0, 0), 100.0, rng) for _ in range(300)])
    r = np.hypot(pts[:, 0], pts[:, 1])
    edges = 100.0 * np.sqrt(np.linspace(0, 1, 11))  # equal-area annuli
    obs, _ = np.histogram(r, edges)
    _, p = stats.chisquare(obs)
    assert p > 0.01


def test_cluster_rayleigh_radial_ks(rng):
    assert sample_cluster(0.0, SIGMA, (0, 0), rng).shape == (0, 2)
    pts = np.concatenate([sample_cluster(50.0, SIGMA, (0, 0), rng) for _ in range(2000)])
    assert pts.shape[0] > 10 ** 5 * 0.9
    r = np.hypot(pts[:, 0], pts[:, 1])
    assert stats.kstest(r, stats.rayleigh(scale=SIGMA).cdf).pvalue > 0.01


def test_cluster_count_mean(rng):
    counts = np.array([len(sample_cluster(5.0, SIGMA, (1.0, 2.0), rng)) for _ in range(10 ** 4)])
    assert abs(counts.mean() - 5.0) < 3 * math.sqrt(5.0 / counts.size)


def test_typical_cluster_eu_distance_and_counts(rng):
    tier = TierConfig()
    cl = [sample_typical_cluster(tier, rng) for _ in range(10 ** 4)]
    v0 = np.array([c.eu_distance for c in cl])
    mean = tier.eu_scatter * math.sqrt(math.pi / 2)
    sd = tier.eu_scatter * math.sqrt((4 - math.pi) / 2)
    assert abs(v0.mean() - mean) < 3 * sd / math.sqrt(v0.size)
    counts = np.array([c.pb_count for c in cl])
    kmax = 12
    obs = np.bincount(np.minimum(counts, kmax), minlength=kmax + 1)
    probs = stats.poisson.pmf(np.arange(kmax + 1), tier.mean_pb_count)
    probs[-1] = stats.poisson.sf(kmax - 1, tier.mean_pb_count)
    _, p = stats.chisquare(obs, probs * counts.size)
    assert p > 0.01


def test_rician_distance_ks(rng):
    v0 = 12.0
    offs = rng.normal(0.0, SIGMA, size=(10 ** 5, 2))
    d = np.hypot(offs[:, 0] - v0, offs[:, 1])
    assert stats.kstest(d, lambda r: rician_cdf(r, v0, SIGMA)).pvalue > 0.01


def test_rician_reduces_to_rayleigh():
    r = np.linspace(0.1, 60, 50)
    assert_allclose(rician_pdf(r, 0.0, SIGMA), rayleigh_pdf(r, SIGMA), rtol=1e-13)


@pytest.mark.parametrize("v0", [0.0, SIGMA, 5 * SIGMA])
def test_rician_normalized(v0):
    assert abs(_quad_all(lambda r: rician_pdf(r, v0, SIGMA)) - 1.0) <= 1e-8


def test_rician_scipy_rice_agrees():
    r = np.linspace(0.5, 80, 40)
    assert_allclose(rician_pdf(r, 20.0, SIGMA), stats.rice.pdf(r, 20.0 / SIGMA, scale=SIGMA), rtol=1e-10)


def test_rician_no_overflow_far_from_centre():
    val = rician_pdf(100 * SIGMA, 100 * SIGMA, SIGMA)
    assert math.isfinite(val) and val > 0
    # large-argument limit: approximately normal with sd sigma
    assert_allclose(val, 1 / (SIGMA * math.sqrt(2 * math.pi)), rtol=1e-2)


def test_rician_cdf_limits_and_derivative():
    assert rician_cdf(0.0, 7.0, SIGMA) == 0.0
    assert rician_cdf(1e4, 7.0, SIGMA) == pytest.approx(1.0, abs=1e-15)
    h = 1e-4
    for r in (SIGMA, 2 * SIGMA):
        fd = (rician_cdf(r + h, 7.0, SIGMA) - rician_cdf(r - h, 7.0, SIGMA)) / (2 * h)
        assert abs(fd - rician_pdf(r, 7.0, SIGMA)) <= 1e-6


def test_rician_logsf_deep_tail():
    # quadrature of the density in log space as oracle
    for r, v0 in [(200.0, 0.0), (220.0, 30.0), (150.0, 10.0)]:
        lf = rician_logpdf(r, v0, SIGMA)
        tail = _quad_all(lambda t: math.exp(rician_logpdf(t, v0, SIGMA) - lf), r)
        assert_allclose(rician_logsf(r, v0, SIGMA), lf + math.log(tail), rtol=1e-9)
    assert_allclose(rician_logsf(15.0, 10.0, SIGMA), math.log1p(-rician_cdf(15.0, 10.0, SIGMA)), rtol=1e-12)


def test_rician_domain():
    with pytest.raises(DomainError):
        rician_pdf(-1.0, 0.0, SIGMA)
    with pytest.raises(DomainError):
        rician_pdf(1.0, 0.0, 0.0)


def test_nearest_pdf_count_one_and_normalization():
    r = np.linspace(0, 50, 20)
    assert_allclose(nearest_pdf(r, 8.0, 1, SIGMA), rician_pdf(r, 8.0, SIGMA), rtol=1e-15)
    for c in (2, 5):
        assert abs(_quad_all(lambda x: nearest_pdf(x, 8.0, c, SIGMA)) - 1.0) <= 1e-8
    with pytest.raises(DomainError):
        nearest_pdf(1.0, 8.0, 0, SIGMA)


def test_nearest_distance_ks(rng):
    v0, count, n = 15.0, 3, 10 ** 5
    offs = rng.normal(0.0, SIGMA, size=(n, count, 2))
    d = np.hypot(offs[..., 0] - v0, offs[..., 1]).min(axis=1)

    def cdf(r):
        return -np.expm1(count * rician_logsf(r, v0, SIGMA))

    assert stats.kstest(d, cdf).pvalue > 0.01
    # the density integrates to the same law
    assert_allclose(_quad_all(lambda x: nearest_pdf(x, v0, count, SIGMA), 0, 12.0), cdf(12.0), rtol=1e-8)


def test_nonassoc_pdf_properties():
    r = np.linspace(0, 50, 20)
    assert_allclose(nonassoc_pdf(r, 8.0, 0.0, SIGMA), rician_pdf(r, 8.0, SIGMA), rtol=1e-15)
    for s_b in (3.0, 20.0, 60.0):
        assert abs(_quad_all(lambda x: nonassoc_pdf(x, 8.0, s_b, SIGMA), s_b) - 1.0) <= 1e-8
    # far tail stays representable in log space
    assert math.isfinite(rician_logsf(1e5, 8.0, SIGMA))
    with pytest.raises(DegenerateTruncationError):
        nonassoc_pdf(1.0, 8.0, np.inf, SIGMA)


def test_nonassoc_distance_ks(rng):
    # non-nearest members of 2-PB clusters: truncated Rician given the nearest
    v0, n = 9.0, 10 ** 5
    offs = rng.normal(0.0, SIGMA, size=(n, 2, 2))
    d = np.sort(np.hypot(offs[..., 0] - v0, offs[..., 1]), axis=1)
    s_b, other = d[:, 0], d[:, 1]
    # probability integral transform of the truncated law must be uniform
    u = 1.0 - np.exp(rician_logsf(other, v0, SIGMA) - rician_logsf(s_b, v0, SIGMA))
    assert stats.kstest(u, "uniform").pvalue > 0.01
    s_fixed = 6.0
    grid = np.linspace(s_fixed, 40.0, 5)
    num = [_quad_all(lambda x: nonassoc_pdf(x, v0, s_fixed, SIGMA), s_fixed, g) for g in grid]
    ref = 1.0 - np.exp(rician_logsf(grid, v0, SIGMA) - rician_logsf(s_fixed, v0, SIGMA))
    assert_allclose(num, ref, atol=1e-9)


def test_tier_validation():
    with pytest.raises(DomainError):
        TierConfig(pb_scatter=0.0)
    with pytest.raises(DomainError):
        TierConfig(parent_intensity=-1.0)
