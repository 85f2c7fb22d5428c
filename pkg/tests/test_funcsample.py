import warnings

import numpy as np
import pytest

from ccfcompare.ccf import LagGrid
from ccfcompare.errors import ValidationError
from ccfcompare.funcsample import (CovarianceHeterogeneityWarning, GroupedSample,
                                   MultiCurveSample, check_homogeneity, group_mean,
                                   pointwise_covariance, pooled_covariance)

from conftest import make_grouped

GRID = LagGrid(-1, 1, 9)


def sample(sid, curves, measures=("v", "a")):
    return MultiCurveSample(sid, GRID, curves, measures)


def test_group_mean_single(rng):
    c = rng.standard_normal((2, 9))
    np.testing.assert_array_equal(group_mean([sample("a", c)]), c)


def test_group_mean_symmetric_pair(rng):
    c = rng.standard_normal((2, 9))
    np.testing.assert_array_equal(group_mean([sample("a", c), sample("b", -c)]), np.zeros((2, 9)))


def test_group_mean_oracle(rng):
    curves = [rng.standard_normal((2, 9)) for _ in range(5)]
    ref = np.zeros((2, 9))
    for i in range(2):
        for m in range(9):
            ref[i, m] = sum(c[i, m] for c in curves) / 5
    got = group_mean([sample(str(k), c) for k, c in enumerate(curves)])
    assert np.max(np.abs(got - ref)) < 1e-14


def test_group_mean_empty():
    with pytest.raises(ValidationError, match="empty group"):
        group_mean([])


def test_sample_shape_checked(rng):
    with pytest.raises(ValidationError):
        sample("a", rng.standard_normal((3, 9)))


def test_grouped_rejects_mismatched_measures(rng):
    a = [sample("a", rng.standard_normal((2, 9))), sample("b", rng.standard_normal((2, 9)))]
    b = [sample("c", rng.standard_normal((2, 9)), ("v", "x")),
         sample("d", rng.standard_normal((2, 9)), ("v", "x"))]
    with pytest.raises(ValidationError):
        GroupedSample.from_samples(a, b)


def test_pooled_covariance_zero_residuals(rng):
    c1, c2 = rng.standard_normal((2, 9)), rng.standard_normal((2, 9))
    g = GroupedSample(np.stack([c1] * 3), np.stack([c2] * 4), GRID, ("v", "a"))
    assert np.max(np.abs(pooled_covariance(g).blocks)) < 1e-28


def test_pooled_variance_textbook_p1(rng):
    n = 6
    y1 = rng.standard_normal((n, 1, 9))
    y2 = 2 + 3 * rng.standard_normal((n, 1, 9))
    cov = pooled_covariance(GroupedSample(y1, y2, GRID, ("v",)))
    for h in range(9):
        s1 = np.var(y1[:, 0, h], ddof=1)
        s2 = np.var(y2[:, 0, h], ddof=1)
        pooled = ((n - 1) * s1 + (n - 1) * s2) / (2 * n - 2)
        assert cov[h, h][0, 0] == pytest.approx(pooled, rel=1e-12)


def test_pooled_covariance_explicit_formula(rng):
    g = make_grouped(rng, 5, 4, 2, 6)
    cov = pooled_covariance(g)
    for s in range(6):
        for t in range(6):
            ref = np.zeros((2, 2))
            for y in (g.y1, g.y2):
                mean = y.mean(axis=0)
                for j in range(y.shape[0]):
                    ref += np.outer(y[j, :, s] - mean[:, s], y[j, :, t] - mean[:, t])
            np.testing.assert_allclose(cov[s, t], ref / (g.n - 2), rtol=1e-12, atol=1e-14)


def test_transpose_identity_and_psd(rng):
    g = make_grouped(rng, 7, 9, 3, 13)
    b = pooled_covariance(g).blocks
    np.testing.assert_array_equal(b, b.transpose(1, 0, 3, 2))
    for m in range(13):
        assert np.linalg.eigvalsh(b[m, m])[0] > -1e-12


def test_pooled_invariances(rng):
    g = make_grouped(rng, 6, 5, 2, 7)
    base = pooled_covariance(g).blocks
    perm = GroupedSample(g.y1[rng.permutation(6)], g.y2[rng.permutation(5)], g.grid, g.measures)
    np.testing.assert_allclose(pooled_covariance(perm).blocks, base, atol=1e-14)
    shifted = GroupedSample(g.y1 + rng.standard_normal((2, 7)), g.y2, g.grid, g.measures)
    np.testing.assert_allclose(pooled_covariance(shifted).blocks, base, atol=1e-13)


def test_pointwise_matches_full_diagonal(rng):
    g = make_grouped(rng, 6, 8, 2, 11)
    np.testing.assert_allclose(pointwise_covariance(g.y1, g.y2), pooled_covariance(g).diagonal(),
                               atol=1e-15)


def test_insufficient_sessions():
    with pytest.raises(ValidationError):
        GroupedSample(np.zeros((1, 1, 9)), np.zeros((1, 1, 9)), GRID, ("v",))


def test_homogeneity_warning(rng):
    y1 = rng.standard_normal((10, 1, 9))
    y2 = 10 * rng.standard_normal((10, 1, 9))
    g = GroupedSample(y1, y2, GRID, ("v",))
    with pytest.warns(CovarianceHeterogeneityWarning):
        check_homogeneity(g)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        check_homogeneity(GroupedSample(y1, y1[::-1] + 1, GRID, ("v",)))
