from collections import deque

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sddpde.errors import DomainError
from sddpde.history import (
    HistorySegment,
    eval_at,
    extend_flat,
    segment_norm,
    shift_append,
)
from sddpde.spatial import DomainConfig, SpectralField

DOM = DomainConfig(np.pi, 4, 8)
R = 1.0
N_STEPS = 11

frames_strategy = arrays(
    np.float64, (N_STEPS, DOM.n_modes), elements=st.floats(-5, 5, allow_nan=False)
)


def linear_segment(v0, v1, n=N_STEPS):
    s = np.linspace(0.0, 1.0, n)[:, None]
    return HistorySegment(R, (1 - s) * v0 + s * v1, DOM)


def test_eval_at_grid_point_is_exact(rng):
    seg = HistorySegment(R, rng.standard_normal((N_STEPS, 4)), DOM)
    for i, th in enumerate(seg.thetas):
        assert np.array_equal(eval_at(seg, th).coeffs, seg.frames[i])


def test_eval_at_constant_segment(rng):
    v = SpectralField(rng.standard_normal(4), DOM)
    seg = HistorySegment.constant(v, R, N_STEPS)
    for th in rng.uniform(-R, 0, 50):
        assert np.allclose(eval_at(seg, th).coeffs, v.coeffs, rtol=1e-15)


def test_eval_at_midpoint_of_linear_segment(rng):
    v0, v1 = rng.standard_normal(4), rng.standard_normal(4)
    seg = HistorySegment(R, np.stack([v0, v1]), DOM)
    assert np.allclose(eval_at(seg, -0.5).coeffs, 0.5 * (v0 + v1), rtol=1e-15)


@pytest.mark.parametrize("theta", [-1.1, 0.01])
def test_eval_at_outside_range(theta):
    seg = HistorySegment(R, np.zeros((N_STEPS, 4)), DOM)
    with pytest.raises(DomainError):
        eval_at(seg, theta)


def test_segment_norm_examples():
    assert segment_norm(HistorySegment(R, np.zeros((3, 4)), DOM)) == 0.0
    fr = np.zeros((3, 4))
    fr[1, 0] = 1.0
    assert segment_norm(HistorySegment(R, fr, DOM)) == 1.0
    fr = np.zeros((3, 4))
    fr[:, 0] = [0.5, 2.0, 1.0]
    assert segment_norm(HistorySegment(R, fr, DOM)) == 2.0


def test_shift_append_examples(rng):
    v = rng.standard_normal(4)
    seg = HistorySegment.constant(SpectralField(v, DOM), R, N_STEPS)
    assert np.array_equal(shift_append(seg, v).frames, seg.frames)

    a, b, c, d = (rng.standard_normal(4) for _ in range(4))
    out = shift_append(HistorySegment(R, np.stack([a, b, c]), DOM), SpectralField(d, DOM))
    assert np.array_equal(out.frames, np.stack([b, c, d]))


def test_shift_append_matches_queue(rng):
    seg = HistorySegment(R, rng.standard_normal((N_STEPS, 4)), DOM)
    queue = deque(seg.frames.copy(), maxlen=N_STEPS)
    for k in range(N_STEPS):
        new = np.zeros(4) if k < N_STEPS - 1 else np.full(4, 7.0)
        seg = shift_append(seg, new)
        queue.append(new)
        assert np.array_equal(seg.frames, np.array(queue))
    assert np.all(seg.frames[:-1] == 0) and np.all(seg.frames[-1] == 7.0)


def test_extend_flat_examples(rng):
    seg = HistorySegment(R, rng.standard_normal((N_STEPS, 4)), DOM)
    assert extend_flat(seg, 0.0, 0.3) is seg
    const = HistorySegment.constant(SpectralField(rng.standard_normal(4), DOM), R, N_STEPS)
    for s in (0.05, 0.1, 0.27):
        assert np.allclose(extend_flat(const, s, 0.3).frames, const.frames, rtol=1e-15)


def test_extend_flat_linear_one_step():
    v0, v1 = np.array([1.0, 0, 0, 0]), np.array([0, 2.0, 0, 0])
    seg = linear_segment(v0, v1)
    out = extend_flat(seg, seg.h, 0.3)
    assert np.array_equal(out.frames[-1], seg.frames[-1])
    assert np.array_equal(out.frames[-2], seg.frames[-1])
    assert np.allclose(out.frames[:-1], seg.frames[1:], rtol=1e-14)


@pytest.mark.parametrize("s", [0.3, 0.5, -0.01])
def test_extend_flat_range(s):
    seg = HistorySegment(R, np.zeros((N_STEPS, 4)), DOM)
    with pytest.raises(DomainError):
        extend_flat(seg, s, 0.3)


@given(frames_strategy, st.floats(-R, 0.0))
def test_eval_at_bounded_by_bracketing_frames(frames, theta):
    seg = HistorySegment(R, frames, DOM)
    idx, _ = seg.locate(theta)
    bound = max(seg.frame_norms[idx], seg.frame_norms[idx + 1])
    assert eval_at(seg, theta).norm() <= bound * (1 + 1e-14) + 1e-300


@given(frames_strategy, arrays(np.float64, 4, elements=st.floats(-5, 5)))
def test_shift_append_norm(frames, v):
    seg = HistorySegment(R, frames, DOM)
    out = segment_norm(shift_append(seg, v))
    assert out <= max(segment_norm(seg), np.linalg.norm(v))


@given(frames_strategy, st.integers(0, 2))
def test_extend_flat_agrees_on_past(frames, k):
    seg = HistorySegment(R, frames, DOM)
    out = extend_flat(seg, k * seg.h, 0.3)
    # out(theta) = seg(theta + s) on theta <= -s, here node for node
    assert np.array_equal(out.frames[: N_STEPS - k], seg.frames[k:])
