import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from colorlbp.image import NeighborhoodSample, OperatorParams, sample_neighborhood
from colorlbp.lbp import (
    UNLABELED,
    LabelMap,
    label_histogram,
    label_map,
    lbp_code,
    omega,
    riu_from_code,
    riu_label,
    ror_min,
    rotate_right,
    uniformity,
)

P8R1 = OperatorParams(8, 1)


def sample_from_code(code, P=8):
    return NeighborhoodSample(5.0, tuple(7.0 if (code >> k) & 1 else 3.0 for k in range(P)))


@pytest.mark.parametrize("x, bit", [(0, 1), (-0.5, 0), (3, 1)])
def test_omega(x, bit):
    assert omega(x) == bit


@pytest.mark.parametrize("neighbors, code", [
    ([7] * 8, 255),
    ([3] * 8, 0),
    ([7, 3, 3, 3, 7, 3, 3, 3], 17),
])
def test_lbp_code(neighbors, code):
    assert lbp_code(NeighborhoodSample(5.0, tuple(map(float, neighbors)))) == code


@pytest.mark.parametrize("code, expected", [(0b10000000, 1), (0, 0), (0b11111111, 255)])
def test_ror_min(code, expected):
    assert ror_min(code, 8) == expected


def test_ror_min_by_enumeration():
    for code in range(256):
        rotations = []
        bits = format(code, "08b")
        for i in range(8):
            rotations.append(int(bits[-i:] + bits[:-i] if i else bits, 2))
        assert ror_min(code) == min(rotations)


@pytest.mark.parametrize("pattern, u", [("01001100", 4), ("11000001", 2), ("00000000", 0)])
def test_uniformity(pattern, u):
    assert uniformity(int(pattern, 2), 8) == u


class TestRiuLabel:
    def test_all_above(self):
        assert riu_label(sample_from_code(255), P8R1) == 8

    def test_non_uniform(self):
        assert riu_label(sample_from_code(0b01001100), P8R1) == 9

    def test_uniform_three_bits(self):
        assert riu_label(sample_from_code(0b11000001), P8R1) == 3

    @given(st.integers(0, 255), st.integers(0, 7))
    def test_shift_invariant(self, code, shift):
        a = sample_from_code(code)
        b = NeighborhoodSample(a.center, a.neighbors[shift:] + a.neighbors[:shift])
        assert riu_label(a, P8R1) == riu_label(b, P8R1)


class TestExhaustiveP8:
    def test_rotation_canonicalization(self):
        for c in range(256):
            m = ror_min(c)
            assert ror_min(m) == m
            assert all(ror_min(rotate_right(c, i, 8)) == m for i in range(8))

    def test_uniform_rotation_classes(self):
        uniform = [c for c in range(256) if uniformity(c) <= 2]
        classes = {ror_min(c) for c in uniform}
        assert len(classes) == 9
        assert sorted(bin(c).count("1") for c in classes) == list(range(9))
        for c in range(256):
            expected = bin(c).count("1") if c in uniform else 9
            assert riu_from_code(c, P8R1) == expected


class TestLabelMap:
    def test_constant_plane(self):
        lmap = label_map(np.full((6, 7), 42, dtype=np.uint8), P8R1)
        assert lmap.shape == (4, 5)
        assert (lmap.labels == 8).all()

    def test_interior_size(self):
        assert label_map(np.zeros((5, 5)), OperatorParams(8, 2)).shape == (1, 1)

    def test_too_small(self):
        with pytest.raises(ValueError):
            label_map(np.zeros((4, 5)), OperatorParams(8, 2))

    def test_empty_mask(self):
        lmap = label_map(np.zeros((5, 5)), P8R1, mask=np.zeros((3, 3), dtype=bool))
        assert lmap.n_labeled == 0
        assert (lmap.labels == UNLABELED).all()
        with pytest.raises(ValueError, match="empty"):
            label_histogram(lmap)

    def test_mask_restricts(self, rng):
        plane = rng.integers(0, 256, size=(10, 10))
        mask = rng.random((8, 8)) < 0.5
        full = label_map(plane, P8R1)
        part = label_map(plane, P8R1, mask)
        np.testing.assert_array_equal(part.labels[mask], full.labels[mask])
        assert (part.labels[~mask] == UNLABELED).all()

    def test_matches_scalar_path(self, rng):
        plane = rng.integers(0, 256, size=(9, 9))
        params = OperatorParams(16, 2)
        lmap = label_map(plane, params)
        for y in range(2, 7):
            for x in range(2, 7):
                s = sample_neighborhood(plane, x, y, params)
                assert lmap.labels[y - 2, x - 2] == riu_label(s, params)


class TestHistogram:
    def test_constant(self):
        hist = label_histogram(label_map(np.full((5, 5), 3), P8R1))
        np.testing.assert_array_equal(hist, [0, 0, 0, 0, 0, 0, 0, 0, 1, 0])

    def test_counts(self):
        labels = np.array([[3, 9], [9, 9]])
        hist = label_histogram(LabelMap(labels, P8R1))
        assert hist[3] == 0.25 and hist[9] == 0.75
        assert hist.sum() == 1.0

    @given(arrays(np.uint8, (8, 8)))
    def test_sums_to_one(self, plane):
        assert abs(label_histogram(label_map(plane, P8R1)).sum() - 1) < 1e-9

    @settings(max_examples=40)
    @given(arrays(np.uint8, st.tuples(st.integers(3, 12), st.integers(3, 12))), st.integers(1, 3))
    def test_rotation_invariant(self, plane, turns):
        a = label_histogram(label_map(plane, P8R1))
        b = label_histogram(label_map(np.rot90(plane, turns), P8R1))
        np.testing.assert_allclose(a, b, atol=1e-9, rtol=0)


def test_bruteforce_oracle_on_random_patches():
    rng = np.random.default_rng(2024)
    # small value range makes exact interpolation ties frequent
    patches = np.concatenate([
        rng.integers(0, 256, size=(7000, 3, 3)),
        rng.integers(0, 4, size=(3000, 3, 3)),
    ])
    for patch in patches:
        bits = oracles.sign_bits(patch.tolist(), 1, 1, 8, 1)
        code = oracles.code_of(bits)
        s = sample_neighborhood(patch, 1, 1, P8R1)
        assert lbp_code(s) == code
        assert uniformity(lbp_code(s)) == oracles.transitions_str(code, 8)
        label = oracles.riu_oracle(code, 8, 2)
        assert riu_label(s, P8R1) == label
        assert label_map(patch, P8R1).labels[0, 0] == label
