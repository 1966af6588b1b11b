import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import random_members, random_orthogonal
from proxlr import DegenerateInputError, ParameterError, SpectralSet
from proxlr.geometry import nuclear_norm, singular_value_threshold, truncated_rank_project


def test_contains_examples():
    s = SpectralSet(1, 1.0, 2, 2)
    assert s.contains(np.diag([2.0, 0.0]))
    assert not s.contains(np.diag([0.5, 0.0]))
    assert not s.contains(np.zeros((2, 2)))
    assert not s.contains(np.diag([2.0, 2.0]))


def test_project_examples():
    s = SpectralSet(2, 1.0, 3, 3)
    np.testing.assert_allclose(s.project(np.diag([3.0, 2.0, 0.2])), np.diag([3.0, 2.0, 0.0]),
                               atol=1e-12)
    s = SpectralSet(2, 1.0, 2, 2)
    np.testing.assert_allclose(s.project(np.diag([0.7, 0.3])), np.diag([1.0, 0.0]), atol=1e-12)


def test_project_fixes_members(rng):
    s = SpectralSet(2, 1.0, 5, 4)
    for x in random_members(rng, 5, 4, 2, 1.0, 20):
        np.testing.assert_allclose(s.project(x), x, atol=1e-10)


def test_project_tie_and_lift():
    s = SpectralSet(1, 2.0, 2, 2)
    np.testing.assert_allclose(s.project(np.diag([1.0, 0.0])), np.diag([2.0, 0.0]), atol=1e-12)
    np.testing.assert_allclose(s.project(np.diag([0.3, 0.1])), np.diag([2.0, 0.0]), atol=1e-12)


def test_project_zero_raises():
    with pytest.raises(DegenerateInputError):
        SpectralSet(1, 1.0, 2, 2).project(np.zeros((2, 2)))


def test_set_validation():
    with pytest.raises(ParameterError):
        SpectralSet(3, 1.0, 2, 2)
    with pytest.raises(ParameterError):
        SpectralSet(1, 0.0, 2, 2)


@pytest.mark.parametrize("shape,r", [((3, 3), 2), ((4, 3), 2), ((4, 3), 1)])
def test_project_beats_random_members(shape, r, rng):
    s = SpectralSet(r, 1.0, *shape)
    for _ in range(20):
        x = rng.standard_normal(shape) * rng.choice([0.3, 1.0, 3.0])
        p = s.project(x)
        d = np.linalg.norm(x - p)
        u, _, vt = np.linalg.svd(x)
        cands = random_members(rng, *shape, r, 1.0, 100)
        cands += random_members(rng, *shape, r, 1.0, 100, basis=(u, vt.T))
        assert all(d <= np.linalg.norm(x - z) + 1e-9 for z in cands)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), scale=st.floats(0.05, 10.0),
       r=st.integers(1, 3), sigma=st.floats(0.1, 5.0))
def test_project_membership_and_idempotence(seed, scale, r, sigma):
    rng = np.random.default_rng(seed)
    s = SpectralSet(r, sigma, 5, 4)
    x = scale * rng.standard_normal((5, 4))
    p = s.project(x)
    assert s.contains(p)
    np.testing.assert_allclose(s.project(p), p, atol=1e-10 * max(1.0, np.linalg.norm(p)))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_project_orthogonal_invariance(seed):
    rng = np.random.default_rng(seed)
    s = SpectralSet(2, 1.0, 5, 4)
    x = 1.5 * rng.standard_normal((5, 4))
    q1, q2 = random_orthogonal(rng, 5), random_orthogonal(rng, 4)
    np.testing.assert_allclose(s.project(q1 @ x @ q2.T), q1 @ s.project(x) @ q2.T, atol=1e-8)


def test_project_continuous_near_set(rng):
    s = SpectralSet(2, 1.0, 5, 4)
    for x in random_members(rng, 5, 4, 2, 1.0, 20):
        d = rng.standard_normal(x.shape)
        d *= 0.2 / np.linalg.norm(d)
        prev = s.project(x)
        for t in np.linspace(0, 1, 21)[1:]:
            cur = s.project(x + t * d)
            assert np.linalg.norm(cur - prev) <= 0.05 * 4
            prev = cur


def test_random_member_is_member(rng):
    s = SpectralSet(3, 0.5, 6, 5)
    for seed in range(20):
        assert s.contains(s.random_member(seed))


def test_truncated_rank_project(rng):
    np.testing.assert_allclose(truncated_rank_project(np.diag([3.0, 2.0, 1.0]), 2),
                               np.diag([3.0, 2.0, 0.0]), atol=1e-12)
    x = rng.standard_normal((3, 5))
    np.testing.assert_array_equal(truncated_rank_project(x, 3), x)
    x = rng.standard_normal((4, 4))
    v = rng.standard_normal(4)
    for _ in range(2000):
        v = x.T @ (x @ v)
        v /= np.linalg.norm(v)
    u = x @ v
    np.testing.assert_allclose(truncated_rank_project(x, 1), np.outer(u, v), atol=1e-8)


def test_singular_value_threshold():
    np.testing.assert_allclose(singular_value_threshold(np.diag([3.0, 1.0, 0.2]), 1.0),
                               np.diag([2.0, 0.0, 0.0]), atol=1e-12)
    with pytest.raises(ParameterError):
        singular_value_threshold(np.eye(2), -1.0)


def test_svt_matches_scalar_soft_threshold(rng):
    x = rng.standard_normal((5, 4))
    u, s, vt = np.linalg.svd(x, full_matrices=False)
    expected = (u * np.maximum(s - 0.7, 0)) @ vt
    np.testing.assert_allclose(singular_value_threshold(x, 0.7), expected, atol=1e-12)
    assert nuclear_norm(x) == pytest.approx(s.sum())
