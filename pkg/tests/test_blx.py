import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from mmxblx.blx import BlendBounds, blend_scalar, blx, blx_rows, round_half_away
from mmxblx.core import RandomSource


def hull_fraction_outside(lo, hi, a):
    """Interval-length oracle: share of a BLX-a draw landing outside [lo, hi], no clamping."""
    width = hi - lo
    total = width * (1 + 2 * a)
    return (total - width) / total


def within_3_sigma(count, n, p):
    return abs(count - n * p) <= 3 * math.sqrt(n * p * (1 - p))


def test_zero_range_collapses(rng):
    assert blx([3.0], [3.0], BlendBounds.real(10, -10), 0.5, rng) == [3.0]
    assert blend_scalar(5, 5, 10, 0, 2.0, rng) == 5


def test_a_zero_stays_in_parental_interval(rng):
    draws = [blx([1.0], [2.0], BlendBounds.real(10, -10), 0.0, rng)[0] for _ in range(2000)]
    assert min(draws) >= 1.0 and max(draws) <= 2.0
    assert all(2 <= blend_scalar(2, 6, 10, 0, 0.0, rng) <= 6 for _ in range(1000))


def test_upper_clamp_puts_atom_at_bound():
    rng = RandomSource(11)
    n = 100_000
    out = blx_rows(np.ones(n), np.full(n, 2.0), 1.4, -10.0, False, 1.0, rng)
    # Raw interval is [0, 3]; everything above 1.4 lands on 1.4.
    assert out.min() >= 0.0 and out.max() == 1.4
    assert out.min() < 0.01
    atom = int(np.sum(out == 1.4))
    assert within_3_sigma(atom, n, (3.0 - 1.4) / 3.0)


def test_blend_scalar_extension_fraction():
    rng = RandomSource(12)
    n = 100_000
    out = blx_rows(np.full(n, 2.0), np.full(n, 6.0), 10.0, 0.0, False, 0.5, rng)
    assert out.min() >= 0.0 and out.max() <= 8.0
    outside = int(np.sum((out < 2.0) | (out > 6.0)))
    expected = hull_fraction_outside(2.0, 6.0, 0.5)
    assert expected == pytest.approx(0.5)
    assert within_3_sigma(outside, n, expected)


def test_swapping_parents_keeps_distribution():
    bounds = BlendBounds.real(10, -10)
    r1, r2 = RandomSource(1), RandomSource(2)
    fwd = [blx([1.0], [4.0], bounds, 0.7, r1)[0] for _ in range(10_000)]
    rev = [blx([4.0], [1.0], bounds, 0.7, r2)[0] for _ in range(10_000)]
    assert stats.ks_2samp(fwd, rev).pvalue > 0.01


def test_integer_elements_are_ints(rng):
    bounds = BlendBounds((12, 4.0), (1, -4.0), ("integer", "real"))
    for _ in range(500):
        out = blx([2, 0.5], [9, 1.5], bounds, 0.5, rng)
        assert isinstance(out[0], int) and 1 <= out[0] <= 12
        assert isinstance(out[1], float)


def test_round_half_away():
    assert list(round_half_away(np.array([0.5, 1.5, 2.5, -0.5, -2.5, 2.4999]))) == [1, 2, 3, -1, -3, 2]


def test_errors(rng):
    with pytest.raises(ValueError):
        blx([1.0, 2.0], [1.0], BlendBounds.real(1, 0), 0.1, rng)
    with pytest.raises(ValueError):
        blx([1.0], [2.0], BlendBounds.real(10, 0), -0.1, rng)


def test_degenerate_bound_still_consumes_draw():
    a, b = RandomSource(3), RandomSource(3)
    blx([1.0], [2.0], BlendBounds.real(5, 5), 0.3, a)
    blx([0.0], [9.0], BlendBounds.real(10, 0), 0.3, b)
    assert a.random() == b.random()


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.tuples(st.floats(-50, 50), st.floats(-50, 50), st.floats(-20, 20), st.floats(0, 30)), min_size=1, max_size=6),
    st.floats(0, 3),
    st.integers(0, 2**32),
)
def test_output_within_bounds(elements, a, seed):
    v1 = [e[0] for e in elements]
    v2 = [e[1] for e in elements]
    vmin = [e[2] for e in elements]
    vmax = [e[2] + e[3] for e in elements]
    out = blx(v1, v2, BlendBounds(tuple(vmax), tuple(vmin), ("real",) * len(v1)), a, RandomSource(seed))
    assert all(lo <= x <= hi for x, lo, hi in zip(out, vmin, vmax))


def test_vector_and_batched_paths_agree():
    bounds = BlendBounds((4.0, 12, 1.0), (-4.0, 1, 0.0), ("real", "integer", "real"))
    v1, v2 = [0.3, 2, 0.1], [-1.7, 9, 0.9]
    single = [blx(v1, v2, bounds, 0.6, r) for r in [RandomSource(8)] for _ in range(50)]
    rows = blx_rows(
        np.tile(v1, (50, 1)), np.tile(v2, (50, 1)),
        np.array(bounds.vmax, float), np.array(bounds.vmin, float), np.array([False, True, False]),
        0.6, RandomSource(8),
    )
    assert np.array_equal(np.array(single, dtype=float), rows)


def test_small_batch_loop_matches_numpy_path():
    from mmxblx.blx import _blx_rows_small

    gen = np.random.default_rng(0)
    v1 = gen.uniform(-6, 6, size=(40, 3))
    v2 = gen.uniform(-6, 6, size=(40, 3))
    upper, lower, mask = np.array([4.0, 12.0, 1.0]), np.array([-4.0, 1.0, 0.0]), np.array([False, True, False])
    batched = blx_rows(v1, v2, upper, lower, mask, 0.8, RandomSource(6))
    looped = _blx_rows_small(v1, v2, upper, lower, mask, 0.8, RandomSource(6))
    assert np.array_equal(batched, looped)
