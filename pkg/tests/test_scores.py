import math

import numpy as np
import pytest

import esmurphy as em
from esmurphy.scores import ScoreFamily


def exact_discrete_var_es(atoms, probs, alpha):
    """Independent lower-quantile / tail-mean computation for atom distributions."""
    order = np.argsort(atoms)
    atoms, probs = np.asarray(atoms)[order], np.asarray(probs)[order]
    cum = np.cumsum(probs)
    idx = int(np.searchsorted(cum, alpha - 1e-12))
    q = atoms[idx]
    mass_below = cum[idx - 1] if idx > 0 else 0.0
    partial = float((atoms[:idx] * probs[:idx]).sum())
    return q, (partial + (alpha - mass_below) * q) / alpha


def expected_es_score_grid(atoms, probs, x1_grid, x2_grid, v, alpha):
    """Exact expected ES-family score on an (x1, x2) grid, straight from the formula."""
    atoms = np.asarray(atoms)
    probs = np.asarray(probs)
    tail_term = float((probs * (v <= atoms) * (atoms - v)).sum())
    hit_part = np.array(
        [float((probs * (atoms <= x1) * (x1 - atoms)).sum()) for x1 in x1_grid]
    )
    writing = (x2_grid >= v).astype(float)[None, :]
    body = hit_part[:, None] / alpha - (x1_grid[:, None] - v)
    return writing * body + tail_term


class TestElementaryScores:
    def test_var_family_examples(self):
        assert em.elementary_score_var(-2, -4, -3, 0.025) == pytest.approx(0.975)
        assert em.elementary_score_var(-2, -4, -5, 0.025) == 0.0
        assert em.elementary_score_var(-2, -4, 0.0, 0.025) == 0.0

    def test_es_family_examples(self):
        assert em.elementary_score_es(-2, -3, -4, -3, 0.025) == pytest.approx(79.0, abs=1e-12)
        assert em.elementary_score_es(-2, -3, -4, 10.0, 0.025) == 0.0
        assert em.elementary_score_es(-2, -3, 1.0, -3, 0.025) == pytest.approx(3.0, abs=1e-12)

    def test_var_family_bounded_and_vanishing(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            x1, y = rng.normal(size=2) * 3
            v = rng.normal() * 5
            alpha = rng.uniform(0.01, 0.3)
            s = em.elementary_score_var(x1, y, v, alpha)
            assert -1.0 <= s <= 1.0
            if v < min(x1, y) or v > max(x1, y):
                assert s == 0.0

    def test_es_family_vanishes_above_both(self):
        rng = np.random.default_rng(8)
        for _ in range(200):
            x2 = rng.normal() * 2
            x1 = x2 + abs(rng.normal())
            y = rng.normal() * 2
            v = max(x2, y) + abs(rng.normal()) + 1e-9
            assert em.elementary_score_es(x1, x2, y, v, 0.05) == 0.0

    def test_tail_limit_bitwise(self):
        rng = np.random.default_rng(9)
        for _ in range(300):
            x2 = rng.normal() * 2
            x1 = x2 + abs(rng.normal())
            y = rng.normal() * 2
            alpha = rng.uniform(0.01, 0.3)
            v = min(x2, y) - 1.0 - abs(rng.normal())
            score = em.elementary_score_es(x1, x2, y, v, alpha)
            assert score == em.tail_limit_score(x1, y, alpha)
            hit = 1.0 if y <= x1 else 0.0
            naive = (1.0 / alpha) * (hit - alpha) * (x1 - y)
            assert score == pytest.approx(naive, abs=1e-10)

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            em.elementary_score_var(math.nan, 0.0, 0.0, 0.025)
        with pytest.raises(ValueError):
            em.elementary_score_es(0.0, 0.0, math.inf, 0.0, 0.025)
        with pytest.raises(ValueError):
            em.elementary_score_es(0.0, 0.0, 0.0, 0.0, 1.5)
        with pytest.raises(ValueError):
            em.elementary_score_es(-3.0, -2.0, 0.0, 0.0, 0.025)  # var < es

    def test_vectorized_matches_scalar_bitwise(self):
        rng = np.random.default_rng(10)
        n, m = 40, 23
        es = rng.normal(size=n) * 2
        var = es + np.abs(rng.normal(size=n))
        y = rng.normal(size=n) * 2
        thresholds = np.sort(rng.normal(size=m) * 4)
        alpha = 0.025
        panel = em.elementary_scores_es(var, es, y, thresholds, alpha)
        panel_var = em.elementary_scores_var(var, y, thresholds, alpha)
        for i in range(n):
            for j in range(m):
                assert panel[i, j] == em.elementary_score_es(var[i], es[i], y[i], thresholds[j], alpha)
                assert panel_var[i, j] == em.elementary_score_var(var[i], y[i], thresholds[j], alpha)


class TestJointForecast:
    def test_ordering_enforced(self):
        em.JointForecast(var=-2.0, es=-3.0)
        with pytest.raises(ValueError):
            em.JointForecast(var=-3.0, es=-2.0)
        with pytest.raises(ValueError):
            em.JointForecast(var=math.nan, es=-2.0)


class TestFzScore:
    @staticmethod
    def logistic_spec():
        return em.FzSpec(
            g1=lambda z: 0.0,
            g2=lambda z: math.exp(z) / (1.0 + math.exp(z)),
            g2_antiderivative=lambda z: math.log1p(math.exp(z)),
        )

    def test_normalization(self):
        spec = self.logistic_spec()
        for y in (-3.0, 0.0, 1.7):
            assert em.fz_score(em.JointForecast(y, y), y, 0.025, spec) == 0.0

    def test_pinned_logistic_value(self):
        # hand substitution of G2 = logistic, G1 = 0 at (-2, -3, -4), alpha 0.025
        score = em.fz_score(em.JointForecast(-2.0, -3.0), -4.0, 0.025, self.logistic_spec())
        assert score == pytest.approx(3.716206557371843, abs=1e-12)

    def test_negative_g2_rejected(self):
        spec = em.FzSpec(g1=lambda z: 0.0, g2=lambda z: -1.0, g2_antiderivative=lambda z: -z)
        with pytest.raises(ValueError):
            em.fz_score(em.JointForecast(-2.0, -3.0), -4.0, 0.025, spec)

    def test_step_spec_matches_mixture(self):
        rng = np.random.default_rng(12)
        for _ in range(30):
            k = rng.integers(1, 6)
            mixture = em.DiscreteMixture(
                values=np.sort(rng.normal(size=k) * 3), weights=rng.random(k)
            )
            es = rng.normal() * 2
            var = es + abs(rng.normal())
            y = rng.normal() * 2
            alpha = rng.uniform(0.01, 0.2)
            forecast = em.JointForecast(var, es)
            direct = em.mixture_score(forecast, y, alpha, mixture)
            via_spec = em.fz_score(forecast, y, alpha, mixture.as_fz_spec())
            assert direct == pytest.approx(via_spec, abs=1e-10)


class TestMixtureScore:
    def test_single_point_reduces_to_elementary(self):
        h2 = em.DiscreteMixture.from_pairs([(-3.0, 1.0)])
        got = em.mixture_score(em.JointForecast(-2.0, -3.0), -4.0, 0.025, h2)
        assert got == pytest.approx(79.0, abs=1e-12)

    def test_empty_mixture_scores_zero(self):
        h2 = em.DiscreteMixture.from_pairs([])
        assert em.mixture_score(em.JointForecast(-2.0, -3.0), -4.0, 0.025, h2) == 0.0

    def test_two_point_average(self):
        h2 = em.DiscreteMixture.from_pairs([(-3.0, 0.5), (-1.0, 0.5)])
        forecast = em.JointForecast(-0.5, -1.0)
        got = em.mixture_score(forecast, -2.0, 0.05, h2)
        parts = [em.elementary_score_es(-0.5, -1.0, -2.0, v, 0.05) for v in (-3.0, -1.0)]
        assert got == pytest.approx(0.5 * parts[0] + 0.5 * parts[1], abs=1e-14)

    def test_var_family_mixture_included(self):
        h2 = em.DiscreteMixture.from_pairs([])
        h1 = em.DiscreteMixture.from_pairs([(-3.0, 2.0)])
        got = em.mixture_score(em.JointForecast(-2.0, -3.0), -4.0, 0.025, h2, h1)
        assert got == pytest.approx(2.0 * 0.975, abs=1e-14)

    def test_negative_weight_rejected(self):
        with pytest.raises(ValueError):
            em.DiscreteMixture.from_pairs([(0.0, -0.5)])


class TestThresholdGrid:
    def test_basic_grid(self):
        grid = em.build_threshold_grid([-1.0, 2.0], [0.0], 3)
        assert np.allclose(grid.values, [-1.0, 0.5, 2.0])
        assert grid.kind is ScoreFamily.ES

    def test_degenerate_range_rejected(self):
        with pytest.raises(ValueError):
            em.build_threshold_grid([5.0], [5.0], 2)

    def test_bad_sizes_rejected(self):
        with pytest.raises(ValueError):
            em.build_threshold_grid([0.0, 1.0], [0.5], 1)
        with pytest.raises(ValueError):
            em.build_threshold_grid([], [], 10)

    def test_random_grid_properties(self):
        rng = np.random.default_rng(13)
        values = rng.normal(size=200)
        reals = rng.normal(size=50)
        grid = em.build_threshold_grid(values, reals, 50)
        assert len(grid) == 50
        assert np.all(np.diff(grid.values) > 0)
        pooled = np.concatenate([values, reals])
        assert grid.values[0] == pooled.min()
        assert grid.values[-1] == pooled.max()

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            em.ThresholdGrid(np.array([1.0, 1.0]))
        with pytest.raises(ValueError):
            em.ThresholdGrid(np.array([]))


class TestConsistency:
    def test_expected_score_minimized_near_var_es(self):
        # exact expectations under small atom distributions; the minimizing
        # grid pair must sit within one grid step of the true (VaR, ES)
        rng = np.random.default_rng(99)
        for _ in range(5):
            k = int(rng.integers(3, 10))
            atoms = np.sort(rng.normal(scale=2.0, size=k))
            probs = rng.random(k)
            probs /= probs.sum()
            alpha = float(rng.uniform(0.05, 0.3))
            q, tail_mean = exact_discrete_var_es(atoms, probs, alpha)
            v = float(rng.uniform(atoms.min() - 0.5, tail_mean))
            lo, hi = atoms.min() - 1.0, atoms.max() + 1.0
            axis = np.linspace(lo, hi, 101)
            grid = expected_es_score_grid(atoms, probs, axis, axis, v, alpha)
            grid = np.where(axis[:, None] >= axis[None, :], grid, np.inf)
            step = axis[1] - axis[0]
            best = grid.min()
            truth = expected_es_score_grid(
                atoms, probs, np.array([q]), np.array([tail_mean]), v, alpha
            )[0, 0]
            assert truth <= best + 1e-12
            minimizers = np.argwhere(grid <= best + 1e-12)
            dist = np.abs(axis[minimizers[:, 0]] - q) + np.abs(axis[minimizers[:, 1]] - tail_mean)
            i, j = minimizers[int(np.argmin(dist))]
            assert abs(axis[i] - q) <= step + 1e-12
            assert abs(axis[j] - tail_mean) <= step + 1e-12

    def test_expected_score_formula_matches_pointwise(self):
        # the closed-form expectation used as oracle equals the atom-by-atom average
        rng = np.random.default_rng(100)
        atoms = np.sort(rng.normal(size=6))
        probs = np.full(6, 1 / 6)
        alpha, v = 0.1, -0.4
        x1_axis = np.array([-1.0, 0.3])
        x2_axis = np.array([-1.5, -0.2])
        grid = expected_es_score_grid(atoms, probs, x1_axis, x2_axis, v, alpha)
        for i, x1 in enumerate(x1_axis):
            for j, x2 in enumerate(x2_axis):
                direct = sum(
                    p * em.elementary_score_es(x1, min(x1, x2), y, v, alpha)
                    for p, y in zip(probs, atoms)
                )
                if x1 >= x2:
                    assert grid[i, j] == pytest.approx(direct, abs=1e-12)
