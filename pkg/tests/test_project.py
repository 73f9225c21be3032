import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from litmap.core import SpectralSignature
from litmap.errors import DegenerateRepresentatives, SingularScatter, TooFewPixels
from litmap.project import (fisher_direction, fisher_ratio, project_soil, relative_availability,
                            separation_report, within_scatter)
from litmap.subclass import IMPURITY_REP, MINERAL_REP, RepresentativePair
from litmap.synth import random_direction_fisher


def two_gaussians(rng, n=500, dims=50, shift=1.0, cov=None):
    L = np.eye(dims) if cov is None else np.linalg.cholesky(cov)
    delta = np.zeros(dims)
    delta[0] = shift
    M = rng.standard_normal((n, dims)) @ L.T + delta
    I = rng.standard_normal((n, dims)) @ L.T
    return M, I


def angle_deg(a, b):
    c = abs(a @ b) / (np.linalg.norm(a) * np.linalg.norm(b))
    return np.degrees(np.arccos(min(1.0, c)))


def test_identity_covariance_axis_shift():
    # symmetric construction: within scatter exactly proportional to I
    base = np.array([[1.0, 0, 0], [-1.0, 0, 0], [0, 1.0, 0], [0, -1.0, 0], [0, 0, 1.0], [0, 0, -1.0]])
    M = base + np.array([5.0, 0, 0])
    d = fisher_direction(M, base, ridge=0.0)
    np.testing.assert_allclose(d.w, [1.0, 0, 0], atol=1e-12)
    d = fisher_direction(base, M, ridge=0.0)
    np.testing.assert_allclose(d.w, [-1.0, 0, 0], atol=1e-12)
    assert d.mu_mineral_proj > d.mu_impurity_proj


def test_diag_scatter_example():
    # class members at mean +/- sqrt(2)/2 and +/- 1/2 give S_w = diag(2, 1) over both classes
    a, b = np.sqrt(2) / 2, 0.5
    offsets = np.array([[a, 0], [-a, 0], [0, b], [0, -b]])
    M = offsets + [1.0, 1.0]
    I = offsets.copy()
    np.testing.assert_allclose(within_scatter(M, I), np.diag([2.0, 1.0]), atol=1e-12)
    d = fisher_direction(M, I, ridge=0.0)
    np.testing.assert_allclose(d.w, np.array([1.0, 2.0]) / np.sqrt(5), atol=1e-12)


def test_fisher_beats_random_directions():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((50, 50))
    M, I = two_gaussians(rng, cov=A @ A.T / 50 + 0.1 * np.eye(50))
    d = fisher_direction(M, I)
    assert d.fisher_ratio >= random_direction_fisher(M, I, 1000, seed=1)


def test_fisher_matches_analytic_direction():
    rng = np.random.default_rng(1)
    M, I = two_gaussians(rng)
    Sw = within_scatter(M, I)
    ref = np.linalg.solve(Sw, M.mean(0) - I.mean(0))
    assert angle_deg(fisher_direction(M, I).w, ref) < 1.0


def test_spherical_gaussians_converge_to_mean_difference():
    rng = np.random.default_rng(2)
    M, I = two_gaussians(rng, n=10000, dims=20, shift=1.0)
    assert angle_deg(fisher_direction(M, I).w, np.eye(20)[0]) < 5.0


def test_rotation_equivariance():
    rng = np.random.default_rng(3)
    M, I = two_gaussians(rng, n=100, dims=6)
    Q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
    w = fisher_direction(M, I).w
    w_rot = fisher_direction(M @ Q.T, I @ Q.T).w
    np.testing.assert_allclose(w_rot, Q @ w, atol=1e-9)
    np.testing.assert_allclose((M @ Q.T) @ w_rot, M @ w, atol=1e-9)


def test_fisher_errors():
    with pytest.raises(TooFewPixels):
        fisher_direction(np.ones((1, 3)), np.zeros((4, 3)))
    same = np.ones((3, 2))
    with pytest.raises(SingularScatter):
        fisher_direction(same, same, ridge=0.0)


def test_random_oracle_trivia():
    rng = np.random.default_rng(4)
    M, I = two_gaussians(rng, n=50, dims=5)
    d = fisher_direction(M, I)
    assert random_direction_fisher(M, I, directions=d.w[None, :]) == pytest.approx(d.fisher_ratio)
    assert random_direction_fisher(M, M, 50) == 0.0


def test_ra_examples():
    assert relative_availability([0.5], 1.0, 0.0)[0] == 0.5
    assert relative_availability([1.0], 1.0, 0.0)[0] == 1.0
    assert relative_availability([0.0], 1.0, 0.0)[0] == 0.0
    # d_m = 0.2, d_i = 0.8
    assert relative_availability([0.8], 1.0, 0.0)[0] == pytest.approx(0.8, abs=1e-15)
    with pytest.raises(DegenerateRepresentatives):
        relative_availability([0.3], 0.5, 0.5)


@given(st.floats(-10, 10), st.floats(-10, 10), st.lists(st.floats(-20, 20), min_size=1, max_size=30))
def test_ra_bounds_and_swap(tm, ti, t):
    if tm == ti:
        return
    ra = relative_availability(t, tm, ti)
    assert np.all((ra >= 0) & (ra <= 1))
    np.testing.assert_allclose(ra + relative_availability(t, ti, tm), 1.0, atol=1e-12)


@given(st.floats(-5, 5), st.floats(0.01, 5), st.lists(st.floats(0, 1), min_size=2, max_size=30))
def test_ra_monotone_between_representatives(ti, gap, fracs):
    tm = ti + gap
    t = np.sort(ti + gap * np.array(fracs))
    ra = relative_availability(t, tm, ti)
    assert np.all(np.diff(ra) >= -1e-12)


def test_project_soil_and_separation():
    X = np.array([[0.0, 0.0], [1.0, 0.0], [0.25, 3.0], [0.5, -1.0]])
    reps = RepresentativePair(SpectralSignature([1, 2], [1.0, 0.0]), SpectralSignature([1, 2], [0.0, 0.0]), "x")
    from litmap.project import FisherDirection
    d = FisherDirection(np.array([1.0, 0.0]), 1.0, 0.0, 1.0)
    p = project_soil(X, reps, d)
    np.testing.assert_allclose(p.ra, [0.0, 1.0, 0.25, 0.5])
    np.testing.assert_allclose(p.d_m + p.d_i, 1.0)
    labels = np.array([IMPURITY_REP, MINERAL_REP, 1, 1])
    gap, stats = separation_report([0.0, 1.0, 5, 5], labels)
    assert gap == 1.0
    assert stats["gap_pooled_std"] == float("inf")
    gap, _ = separation_report([2.0, 2.0], np.array([IMPURITY_REP, MINERAL_REP]))
    assert gap == 0.0


def test_fisher_ratio_definition():
    M = np.array([[1.0], [3.0]])
    I = np.array([[-1.0], [-3.0]])
    # between (2 - -2)^2 = 16, within 2 + 2 = 4
    assert fisher_ratio(np.array([1.0]), M, I) == pytest.approx(4.0)
