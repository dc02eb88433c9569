import math

import numpy as np
import pytest

from insectvision import Detection, ModelConfig, ResponseVolume, ValidationError
from insectvision.stmd import detect_stmd
from insectvision.tsdn import detect_tsdn, estimate_background_direction, integrate

CFG = ModelConfig()
DIRS = CFG.directions


def volume(values):
    return ResponseVolume(np.asarray(values, dtype=float), DIRS)


def test_direction_from_single_channel():
    f = np.zeros((8, 4, 4))
    f[4, 1, 2] = 1.0
    assert estimate_background_direction(volume(f)) == math.pi


def test_all_zero_f_gives_first_direction():
    assert estimate_background_direction(volume(np.zeros((8, 3, 3)))) == 0.0


def test_direction_from_channel_sums():
    f = np.zeros((8, 1, 1))
    f[:, 0, 0] = [1.0, 0.3, 2.5, 0.3, 0.3, 0.3, 0.3, 0.3]
    assert estimate_background_direction(volume(f)) == pytest.approx(math.pi / 2)


def test_zero_gain_passes_e_through():
    rng = np.random.default_rng(0)
    e, f = volume(rng.normal(size=(8, 5, 5))), volume(rng.uniform(size=(8, 5, 5)))
    assert np.array_equal(integrate(e, f, math.pi, CFG.replace(alpha2=0.0)).values, e.values)


def test_only_background_channel_is_suppressed():
    rng = np.random.default_rng(1)
    e, f = volume(rng.normal(size=(8, 5, 5))), volume(rng.uniform(size=(8, 5, 5)))
    t = integrate(e, f, math.pi / 2, CFG).values
    others = [k for k in range(8) if k != 2]
    assert np.array_equal(t[others], e.values[others])
    assert np.allclose(t[2], e.values[2] - 3.5 * f.values[2])


def test_arithmetic_example():
    e, f = np.zeros((8, 1, 1)), np.zeros((8, 1, 1))
    e[0, 0, 0], f[0, 0, 0] = 200.0, 20.0
    assert integrate(volume(e), volume(f), 0.0, CFG).values[0, 0, 0] == pytest.approx(130.0)


def test_integrate_rejects_mismatched_inputs():
    with pytest.raises(ValidationError):
        integrate(volume(np.zeros((8, 2, 2))), volume(np.zeros((8, 3, 3))), 0.0, CFG)
    with pytest.raises(ValidationError):
        integrate(volume(np.zeros((8, 2, 2))), volume(np.zeros((8, 2, 2))), 0.1, CFG)


def _blob(channel, e_value=160.0, f_value=20.0):
    e, f = np.zeros((8, 15, 15)), np.zeros((8, 15, 15))
    e[channel, 7, 7] = e_value
    f[0, 7, 7] = f_value  # the background moves along 0
    return volume(e), volume(f)


@pytest.mark.parametrize("with_e", [False, True])
def test_blob_on_background_channel_is_suppressed(with_e):
    e, f = _blob(0)
    t = integrate(e, f, 0.0, CFG)
    assert t.values[0, 7, 7] == pytest.approx(90.0)
    assert detect_tsdn(t, 150, e if with_e else None) == []
    assert len(detect_stmd(e, 150)) == 1


@pytest.mark.parametrize("with_e", [False, True])
def test_blob_off_background_channel_survives(with_e):
    e, f = _blob(2)
    t = integrate(e, f, 0.0, CFG)
    dets = detect_tsdn(t, 150, e if with_e else None)
    assert len(dets) == 1
    assert dets[0].response == 160.0 and dets[0].direction == pytest.approx(math.pi / 2)


def test_zero_gain_matches_stmd_detections():
    rng = np.random.default_rng(2)
    e = volume(rng.normal(100, 80, (8, 25, 25)))
    f = volume(rng.uniform(0, 30, (8, 25, 25)))
    t = integrate(e, f, 0.0, CFG.replace(alpha2=0.0))
    assert detect_tsdn(t, 150, e) == detect_stmd(e, 150)
    assert detect_tsdn(t, 150) == detect_stmd(e, 150)


def test_object_readout_is_a_subset_of_stmd():
    rng = np.random.default_rng(3)
    e = volume(rng.normal(100, 80, (8, 25, 25)))
    f = volume(rng.uniform(0, 30, (8, 25, 25)))
    t = integrate(e, f, estimate_background_direction(f), CFG)
    stmd = {(d.x, d.y, d.direction) for d in detect_stmd(e, 150)}
    tsdn = {(d.x, d.y, d.direction) for d in detect_tsdn(t, 150, e)}
    assert tsdn <= stmd


@pytest.mark.parametrize("direction", [math.pi / 2, math.pi])
def test_textured_scene_tsdn_subset_keeps_target(direction):
    from insectvision.evaluation import candidates_to_detections, collect_candidates, match_and_score
    from insectvision.pipeline import warmup_frames
    from insectvision.stimulus import StimulusSpec, Trajectory, generate

    warm = warmup_frames(CFG)
    duration = warm + 150
    mid = (warm + duration) / 2 / 1000.0 * 100.0
    traj = Trajectory("linear", x0=50 - mid * math.cos(direction), y0=50 - mid * math.sin(direction),
                      velocity=100.0, direction=direction)
    spec = StimulusSpec(width=100, height=100, duration=duration, seed=1, trajectory=traj)
    seq, truth = generate(spec)
    cands = collect_candidates(seq, CFG)
    stmd = candidates_to_detections(cands.stmd, DIRS, 150)
    tsdn = candidates_to_detections(cands.tsdn, DIRS, 150)
    key = lambda dets: {(d.x, d.y, d.direction) for d in dets}
    assert all(key(a) <= key(b) for a, b in zip(tsdn, stmd))
    rs = match_and_score(stmd, truth, warmup=warm)
    rt = match_and_score(tsdn, truth, warmup=warm)
    # a target peak outside the background channel is never lost
    for a, b in zip(rs.records, rt.records):
        hit = a.true_detection
        if hit is not None and hit.direction != cands.background_direction[a.t]:
            assert b.true_detection == Detection(hit.t, hit.x, hit.y, hit.direction, b.true_detection.response)
    assert rs.detection_rate >= 0.9
    assert rt.false_alarm_rate < rs.false_alarm_rate
