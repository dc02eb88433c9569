import math

import numpy as np
import pytest
from scipy import ndimage

from helpers import brute_convolve_clamped, rightward_target_spec
from insectvision import ModelConfig, ResponseVolume, direction_set
from insectvision.kernels import cfg_inhibition_kernel
from insectvision.medulla import MedullaOutputs
from insectvision.pipeline import Pipeline, warmup_frames
from insectvision.stimulus import generate
from insectvision.stmd import (
    correlate,
    detect_stmd,
    find_peaks,
    inhibit,
    partner_offset,
    sample_partner,
)

CFG = ModelConfig()
DIRS = CFG.directions


def medulla_from(tm3, tm2, on=None, off=None):
    on = on or {}
    off = off or {}
    zero = np.zeros_like(tm3)
    return MedullaOutputs(
        tm3,
        tm2,
        {(3, 15.0): on.get((3, 15.0), zero), (5, 15.0): on.get((5, 15.0), zero)},
        {k: off.get(k, zero) for k in [(5, 15.0), (5, 25.0), (8, 40.0)]},
    )


def test_partner_is_upstream_of_preferred_direction():
    # a feature moving along theta passes the partner first
    assert partner_offset(0.0, 3) == (-3, 0)
    assert partner_offset(math.pi, 3) == (3, 0)
    assert partner_offset(math.pi / 2, 3) == (0, -3)
    assert partner_offset(math.pi / 4, 3) == (-2, -2)


def test_sample_partner_shifts_and_zero_fills():
    a = np.arange(12.0).reshape(3, 4)
    out = sample_partner(a, -3, 0)
    assert out[1, 3] == a[1, 0]
    assert np.all(out[:, :3] == 0)
    assert np.all(sample_partner(a, 5, 0) == 0)


def test_zero_medulla_gives_zero_d():
    z = np.zeros((8, 8))
    assert np.all(correlate(medulla_from(z, z), DIRS, CFG).values == 0)


def test_correlation_formula_at_one_pixel():
    rng = np.random.default_rng(0)
    shape = (9, 11)
    tm3 = rng.uniform(size=shape)
    mi1 = rng.uniform(size=shape)
    tm1_near = rng.uniform(size=shape)
    tm1_far = rng.uniform(size=shape)
    med = medulla_from(tm3, np.zeros(shape), {(3, 15.0): mi1}, {(5, 25.0): tm1_near, (8, 40.0): tm1_far})
    d = correlate(med, DIRS, CFG)
    x, y = 6, 4
    px, py = x - 3, y  # theta = 0
    expected = tm3[y, x] * (tm1_near[y, x] + mi1[py, px]) * tm1_far[py, px]
    assert d.values[0, y, x] == pytest.approx(expected, rel=1e-14)
    assert d.values[0, y, 1] == 0  # partner off the left edge


def test_inhibition_matches_brute_force():
    d = np.random.default_rng(1).uniform(0, 10, (2, 16, 16))
    k = cfg_inhibition_kernel(CFG)
    e = inhibit(ResponseVolume(d, direction_set(2)), CFG).values
    for c in range(2):
        assert np.max(np.abs(e[c] - brute_convolve_clamped(d[c], k))) < 1e-9


def test_inhibition_of_single_pixel_is_the_kernel():
    d = np.zeros((8, 31, 31))
    d[2, 15, 15] = 4.0
    e = inhibit(ResponseVolume(d, DIRS), CFG).values
    k = cfg_inhibition_kernel(CFG)
    assert np.allclose(e[2, 6:25, 6:25], 4.0 * k, atol=1e-12)
    assert e[2, 15, 15] > 0 and e[2, 15, 19] < 0
    assert np.max(np.abs(e[[0, 1, 3, 4, 5, 6, 7]])) < 1e-12


def test_zero_d_gives_zero_e():
    assert np.allclose(inhibit(ResponseVolume(np.zeros((8, 5, 5)), DIRS), CFG).values, 0, atol=1e-15)


def test_no_detections_below_threshold():
    e = ResponseVolume(np.full((8, 10, 10), 100.0), DIRS)
    assert detect_stmd(e, 150) == []


def test_isolated_pixel_detection_carries_direction():
    values = np.zeros((8, 20, 20))
    values[1, 7, 12] = 500.0
    values[0, 7, 12] = 300.0
    dets = detect_stmd(ResponseVolume(values, DIRS), 150, t=4)
    assert len(dets) == 1
    det = dets[0]
    assert (det.t, det.x, det.y) == (4, 12, 7)
    assert det.direction == pytest.approx(math.pi / 4)
    assert det.response == 500.0


def test_two_distant_blobs_give_two_detections():
    yy, xx = np.mgrid[0:60, 0:80]
    blob = lambda cx, cy: 400.0 * np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / 8.0)
    values = np.zeros((8, 60, 80))
    values[0] = blob(20, 30) + blob(60, 30)
    dets = detect_stmd(ResponseVolume(values, DIRS), 150)
    labels, count = ndimage.label(values.max(axis=0) > 150, structure=np.ones((3, 3)))
    assert len(dets) == count == 2
    assert sorted((d.x, d.y) for d in dets) == [(20, 30), (60, 30)]


def test_plateau_yields_one_peak():
    values = np.zeros((8, 10, 10))
    values[3, 4:6, 4:7] = 200.0
    xs, ys, dirs, vals = find_peaks(values, 3)
    above = vals > 0
    assert above.sum() == 1
    assert (xs[above][0], ys[above][0], dirs[above][0]) == (4, 4, 3)


def test_detection_count_monotone_in_beta():
    values = np.random.default_rng(2).normal(100, 60, (8, 30, 30))
    vol = ResponseVolume(values, DIRS)
    counts = [len(detect_stmd(vol, b)) for b in np.linspace(-100, 400, 26)]
    assert all(a >= b for a, b in zip(counts, counts[1:]))


def test_rightward_target_prefers_zero_in_d():
    spec = rightward_target_spec(duration=400)
    seq, truth = generate(spec)
    warm = warmup_frames(CFG)
    total = np.zeros(8)
    for res in Pipeline(CFG).run(seq):
        if res.t >= warm:
            total += res.d.values.reshape(8, -1).sum(axis=1)
    assert int(np.argmax(total)) == 0
