import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from colorlbp.noise import (
    ChannelEffectStats,
    NoiseSpec,
    apply_impulse_noise,
    channel_effect_stats,
    expected_channel_effect,
)


def enumerate_hit_patterns(p):
    """Conditional share of K-plane hits by summing over all 8 hit patterns."""
    mass = {1: 0.0, 2: 0.0, 3: 0.0}
    for pattern in itertools.product((0, 1), repeat=3):
        k = sum(pattern)
        prob = 1.0
        for hit in pattern:
            prob *= p if hit else 1 - p
        if k:
            mass[k] += prob
    total = sum(mass.values())
    return {k: v / total for k, v in mass.items()}


@pytest.fixture
def image(rng):
    return rng.integers(1, 255, size=(100, 100, 3), dtype=np.uint8)


class TestInjection:
    def test_ratio_zero_identity(self, image):
        np.testing.assert_array_equal(apply_impulse_noise(image, NoiseSpec(0.0, 3)), image)

    def test_ratio_one_saturates(self, image):
        out = apply_impulse_noise(image, NoiseSpec(1.0, 3))
        assert np.isin(out, (0, 255)).all()
        # both polarities occur
        assert (out == 0).any() and (out == 255).any()

    def test_count_concentration(self, image):
        out = apply_impulse_noise(image, NoiseSpec(0.1, 7))
        n = np.count_nonzero(out != image)
        sigma = np.sqrt(30000 * 0.1 * 0.9)
        assert abs(n - 3000) <= 3 * sigma

    def test_deterministic(self, image):
        a = apply_impulse_noise(image, NoiseSpec(0.2, 11))
        b = apply_impulse_noise(image, NoiseSpec(0.2, 11))
        c = apply_impulse_noise(image, NoiseSpec(0.2, 12))
        np.testing.assert_array_equal(a, b)
        assert (a != c).any()

    def test_documented_stream_order(self, image):
        seed, ratio = 99, 0.3
        gen = np.random.Generator(np.random.PCG64(seed))
        cells = gen.random(image.size)
        expected = image.ravel().copy()
        hits = np.flatnonzero(cells < ratio)
        for pos, u in zip(hits, gen.random(hits.size)):
            expected[pos] = 255 if u < 0.5 else 0
        np.testing.assert_array_equal(apply_impulse_noise(image, NoiseSpec(ratio, seed)).ravel(), expected)

    def test_invalid_ratio(self):
        with pytest.raises(ValueError):
            NoiseSpec(1.5)
        with pytest.raises(ValueError):
            NoiseSpec(-0.1)


class TestStats:
    def test_no_change(self, image):
        s = channel_effect_stats(image, image)
        assert s.total_noisy == 0
        assert s.fractions == {}

    def test_single_plane(self, image):
        noisy = image.copy()
        noisy[3, 4, 0] ^= 1
        s = channel_effect_stats(image, noisy)
        assert s.fractions == {1: 1.0, 2: 0.0, 3: 0.0}

    def test_mismatch(self, image):
        with pytest.raises(ValueError):
            channel_effect_stats(image, image[:50])

    def test_merge(self):
        a = ChannelEffectStats({1: 3, 2: 1, 3: 0})
        b = ChannelEffectStats({1: 1, 2: 0, 3: 2})
        assert a.merge(b).counts == {1: 4, 2: 1, 3: 2}
        assert b.merge(a).counts == a.merge(b).counts

    def test_noop_replacement_not_counted(self):
        img = np.full((50, 50, 3), 255, dtype=np.uint8)
        out = apply_impulse_noise(img, NoiseSpec(0.5, 1))
        s = channel_effect_stats(img, out)
        # only pepper draws change a saturated image
        assert s.total_noisy == np.count_nonzero((out == 0).any(axis=2))


class TestExpected:
    @pytest.mark.parametrize("p", [0.05, 0.1, 0.2, 0.3, 0.4])
    def test_matches_enumeration(self, p):
        got = expected_channel_effect(p)
        want = enumerate_hit_patterns(p)
        for k in (1, 2, 3):
            assert got[k] == pytest.approx(want[k], abs=1e-12)
        assert sum(got.values()) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("p, want", [
        # hand arithmetic: C(3,K) p^K (1-p)^(3-K) / (1 - (1-p)^3)
        (0.05, (0.135375 / 0.142625, 0.007125 / 0.142625, 0.000125 / 0.142625)),
        (0.40, (0.432 / 0.784, 0.288 / 0.784, 0.064 / 0.784)),
    ])
    def test_reference_values(self, p, want):
        got = expected_channel_effect(p)
        for k, w in zip((1, 2, 3), want):
            assert got[k] == pytest.approx(w, abs=1e-12)

    def test_rare_limit(self):
        got = expected_channel_effect(1e-9)
        assert got[1] == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.parametrize("p", [0.0, 1.0])
    def test_degenerate(self, p):
        with pytest.raises(ValueError):
            expected_channel_effect(p)

    def test_monotone_on_grid(self):
        grid = np.linspace(0.01, 0.99, 99)
        f1 = [expected_channel_effect(p)[1] for p in grid]
        f3 = [expected_channel_effect(p)[3] for p in grid]
        assert all(np.diff(f1) < 0)
        assert all(np.diff(f3) > 0)

    @given(st.floats(0.01, 0.9), st.floats(0.0, 0.5))
    def test_noop_correction_is_rate_rescale(self, p, noop):
        assert expected_channel_effect(p, noop) == pytest.approx(expected_channel_effect(p * (1 - noop)))


@pytest.mark.parametrize("ratio", [0.05, 0.1, 0.2, 0.3, 0.4])
def test_monte_carlo_matches_analytic(ratio):
    rng = np.random.default_rng(5)
    img = rng.integers(1, 255, size=(320, 320, 3), dtype=np.uint8)
    s = channel_effect_stats(img, apply_impulse_noise(img, NoiseSpec(ratio, 17)))
    want = expected_channel_effect(ratio)
    for k in (1, 2, 3):
        assert abs(s.fractions[k] - want[k]) <= 0.015
