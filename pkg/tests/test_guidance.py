from __future__ import annotations

import numpy as np

from autostudio.drawer.guidance import compose_guidance, forward_diffuse
from autostudio.drawer.schedule import DiffusionSchedule
from autostudio.drawer.toy import ToyDenoiser
from autostudio.model import BoundingBox, FrameSize


def test_zero_segments_blank_canvas_empty_mask():
    frame = FrameSize(64, 64)
    canvas, mask = compose_guidance([], frame, 8, 8)
    assert not canvas.any()
    assert not mask.any()


def test_full_frame_segment_copied_verbatim():
    frame = FrameSize(64, 64)
    seg = np.random.default_rng(0).integers(0, 256, size=(64, 64, 3), dtype=np.uint8)
    canvas, mask = compose_guidance([(seg, BoundingBox(0, 0, 64, 64))], frame, 8, 8)
    assert np.array_equal(canvas, seg)
    assert mask.all()


def test_disjoint_segments_leave_outside_blank():
    frame = FrameSize(64, 64)
    rng = np.random.default_rng(1)
    seg1 = rng.integers(1, 256, size=(16, 16, 3), dtype=np.uint8)
    seg2 = rng.integers(1, 256, size=(16, 16, 3), dtype=np.uint8)
    b1, b2 = BoundingBox(0, 0, 16, 16), BoundingBox(40, 40, 16, 16)
    canvas, mask = compose_guidance([(seg1, b1), (seg2, b2)], frame, 8, 8)
    inside = np.zeros((64, 64), dtype=bool)
    inside[0:16, 0:16] = True
    inside[40:56, 40:56] = True
    assert not canvas[~inside].any()
    assert canvas[0:16, 0:16].any() and canvas[40:56, 40:56].any()


def test_segment_resized_back_to_original_box():
    frame = FrameSize(64, 64)
    seg = np.full((32, 32, 3), 200, dtype=np.uint8)
    canvas, _ = compose_guidance([(seg, BoundingBox(8, 8, 16, 16))], frame, 8, 8)
    assert (canvas[8:24, 8:24] == 200).all()
    assert not canvas[:8].any()


def _make_set(seed, steps=10):
    d = ToyDenoiser(0)
    sched = DiffusionSchedule.linear(steps)
    img = np.random.default_rng(42).integers(0, 256, size=(32, 32, 3), dtype=np.uint8)
    return d, forward_diffuse(img, sched, seed, encode=d.encode, mask=np.ones((4, 4))), img, sched


def test_step_zero_frame_is_exact_encoding():
    d, gset, img, _ = _make_set(seed=7)
    assert np.array_equal(gset.frame_at(0), d.encode(img))


def test_same_seed_identical_guidance_set():
    _, a, _, _ = _make_set(seed=7)
    _, b, _, _ = _make_set(seed=7)
    for t in a.frames:
        assert np.array_equal(a.frame_at(t), b.frame_at(t))
    _, c, _, _ = _make_set(seed=8)
    assert not np.array_equal(a.frame_at(5), c.frame_at(5))


def test_noise_variance_matches_schedule():
    # Monte-Carlo oracle: the residual G_t - sqrt(signal)*z0 must have
    # variance equal to the schedule's cumulative noise at t, within 5%.
    d = ToyDenoiser(0)
    sched = DiffusionSchedule.linear(10)
    img = np.random.default_rng(3).integers(0, 256, size=(32, 32, 3), dtype=np.uint8)
    z0 = d.encode(img)
    for t in (3, 9):
        sig = sched.signal_at(t)
        residuals = []
        for seed in range(1000):
            gset = forward_diffuse(img, sched, seed, encode=d.encode, mask=np.ones((4, 4)))
            residuals.append(gset.frame_at(t) - np.sqrt(sig) * z0)
        var = np.var(np.stack(residuals))
        assert abs(var - sched.noise_at(t)) / sched.noise_at(t) < 0.05
