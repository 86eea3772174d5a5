import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from memdiff.device import MemristorState, apply_pulse_train, resistance, x_from_resistance
from memdiff.errors import InvalidInput
from memdiff.synth import SyntheticVideoSpec, generate
from memdiff.vision import (ArrayState, Frame, GridSpec, SaliencyMap, amplitude_spectrum,
                            compress, estimate_orientation, release_frames_bound, run_video,
                            update_array)

SPEC = GridSpec()
grids = arrays(np.float64, (25, 40), elements=st.floats(0, 2.56))


def step_video(n, cell=(3, 3), value=256):
    """n frames; cell (row, col) jumps from 0 to `value` at frame 1 and stays."""
    frames = []
    for k in range(n):
        a = np.zeros((900, 1920), np.uint8) if value <= 255 else np.zeros((900, 1920))
        if k >= 1:
            r, c = cell
            a[r * 36:(r + 1) * 36, c * 48:(c + 1) * 48] = value if value <= 255 else 2.56
        frames.append(a)
    return frames


def test_frame_validation():
    with pytest.raises(InvalidInput):
        Frame(np.full((4, 4), 3.0))
    with pytest.raises(InvalidInput):
        Frame(np.zeros(4))
    assert Frame.from_uint8(np.full((2, 2), 200, np.uint8)).intensities[0, 0] == 2.0


def test_compress_examples():
    assert np.all(compress(np.full((900, 1920), 1.3), SPEC) == pytest.approx(1.3))
    a = np.zeros((900, 1920))
    a[36:72, 96:144] = 2.56
    g = compress(a, SPEC)
    assert g[1, 2] == pytest.approx(2.56, rel=1e-12) and np.count_nonzero(g) == 1
    toy = np.array([[0.1, 0.2], [0.3, 0.4]])
    assert np.array_equal(compress(toy, GridSpec(2, 2, 1, 1)), toy)


def test_compress_rejects_non_dividing():
    with pytest.raises(InvalidInput):
        GridSpec.for_frame(1910, 900)
    with pytest.raises(InvalidInput):
        compress(np.zeros((900, 1910)), SPEC)


def test_compress_uint8_matches_float():
    img = np.random.default_rng(0).integers(0, 256, (900, 1920), dtype=np.uint8)
    np.testing.assert_allclose(compress(img, SPEC), compress(img / 100.0, SPEC), rtol=1e-12)


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (50, 80), elements=st.floats(0, 2.56)))
def test_compress_preserves_mean(img):
    g = compress(img, GridSpec(40, 25, 2, 2))
    assert g.mean() == pytest.approx(img.mean(), rel=1e-9, abs=1e-12)


def test_static_video_has_no_salient_cells(cfg):
    res = run_video([np.full((900, 1920), 90, np.uint8)] * 5, SPEC, cfg.table, cfg.device)
    assert all(np.all(m.binary == 1) for m in res.maps)


def test_two_frame_video_equals_single_update(cfg):
    frames = step_video(2)
    res = run_video(frames, SPEC, cfg.table, cfg.device)
    st0 = ArrayState.uniform(25, 40, 300e3, cfg.device)
    _, m, _ = update_array(compress(frames[0], SPEC), compress(frames[1], SPEC), st0,
                           cfg.table, cfg.device)
    assert np.array_equal(res.maps[0].resistance, m.resistance)


def test_video_needs_two_frames(cfg):
    with pytest.raises(InvalidInput):
        run_video([np.zeros((900, 1920))], SPEC, cfg.table, cfg.device)


def test_no_stimulus_fixpoint_at_x0(cfg):
    g = np.full((25, 40), 1.0)
    s = ArrayState(np.zeros((25, 40)))
    s2, m, _ = update_array(g, g, s, cfg.table, cfg.device)
    assert np.array_equal(s2.x, s.x) and np.all(m.binary == 1)


def test_step_cell_turns_salient_neighbours_unchanged(cfg):
    res = run_video(step_video(3), SPEC, cfg.table, cfg.device)
    m = res.maps[0]
    assert m.resistance[3, 3] < 100e3
    others = np.delete(m.resistance.ravel(), 3 * 40 + 3)
    assert np.all(others == pytest.approx(300e3))


def test_afterimage_monotone_and_bounded(cfg):
    n = 30
    res = run_video(step_video(n), SPEC, cfg.table, cfg.device)
    r = np.array([m.resistance[3, 3] for m in res.maps])
    assert np.all(np.diff(r[1:]) >= 0)
    back = np.nonzero(r >= cfg.table.high_min)[0]
    assert back.size and back[0] <= cfg.vision.afterimage_bound


def _deepest_salient(cfg):
    """Lowest resistance a Fast pulse can produce (from the low/mid band edge)."""
    x = MemristorState(float(x_from_resistance(cfg.table.low_max, cfg.device)))
    return resistance(apply_pulse_train(x, cfg.table.template("visual_fast"), cfg.device),
                      cfg.device)


def test_release_bound_within_configured_afterimage_bound(cfg):
    worst = release_frames_bound(_deepest_salient(cfg), cfg.table, cfg.device)
    assert worst <= cfg.vision.afterimage_bound


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, 0.9999), st.floats(0, 2.56))
def test_constant_video_converges_within_derived_bound(cfg, x0, level):
    s = ArrayState(np.full((25, 40), x0))
    n = release_frames_bound(float(s.resistance(cfg.device)[0, 0]), cfg.table, cfg.device)
    g = np.full((25, 40), level)
    r = [s.resistance(cfg.device)]
    for _ in range(n):
        s, m, _ = update_array(g, g, s, cfg.table, cfg.device)
        r.append(m.resistance)
    assert np.all(r[-1] >= cfg.table.high_min)
    assert np.all(np.diff(np.array(r), axis=0) >= 0)


@settings(max_examples=20, deadline=None)
@given(arrays(np.float64, (25, 40), elements=st.floats(0, 1)))
def test_reachable_states_reach_high_band_within_15_frames(cfg, u):
    lo = float(x_from_resistance(_deepest_salient(cfg), cfg.device))
    s = ArrayState(u * lo)
    g = np.full((25, 40), 1.0)
    for _ in range(cfg.vision.afterimage_bound):
        s, m, _ = update_array(g, g, s, cfg.table, cfg.device)
    assert np.all(m.resistance >= cfg.table.high_min)


def test_cell_independence(cfg):
    base = step_video(6)
    other = [f.copy() for f in base]
    other[3][10 * 36:11 * 36, 20 * 48:21 * 48] = 2.0
    a = run_video(base, SPEC, cfg.table, cfg.device)
    b = run_video(other, SPEC, cfg.table, cfg.device)
    for ma, mb in zip(a.maps, b.maps):
        diff = ma.resistance != mb.resistance
        assert not diff.any() or (diff.sum() == 1 and diff[10, 20])


def test_smaller_delta_gives_higher_resistance(cfg):
    s = ArrayState.uniform(25, 40, 300e3, cfg.device)
    prev = np.zeros((25, 40))
    small, big = prev.copy(), prev.copy()
    small[0, 0], big[0, 0] = 0.8, 1.4
    _, ms, _ = update_array(prev, small, s, cfg.table, cfg.device)
    _, mb, _ = update_array(prev, big, s, cfg.table, cfg.device)
    assert ms.resistance[0, 0] > mb.resistance[0, 0]


def test_sequential_and_vectorised_bit_identical(cfg):
    spec = SyntheticVideoSpec(frames=10, velocity=(2, 1), start=(5, 5), noise=0.05, seed=3,
                              block_w=48, block_h=36)
    frames, _ = generate(spec)
    g = GridSpec(40, 25, 48, 36)
    a = run_video(frames, g, cfg.table, cfg.device)
    b = run_video(frames, g, cfg.table, cfg.device, sequential=True)
    assert np.array_equal(a.state.x, b.state.x)


def test_update_dimension_mismatch(cfg):
    s = ArrayState.uniform(25, 40, 300e3, cfg.device)
    with pytest.raises(InvalidInput):
        update_array(np.zeros((25, 40)), np.zeros((24, 40)), s, cfg.table, cfg.device)


def test_saliency_binarization():
    m = SaliencyMap.from_resistance(np.array([[50e3, 100e3, 150e3]]))
    assert m.binary.tolist() == [[0, 1, 1]]


def _moving(cfg, velocity, n=8):
    spec = SyntheticVideoSpec(frames=n, velocity=velocity, start=(15, 10))
    frames, _ = generate(spec)
    return run_video(frames, GridSpec(40, 25, 10, 10), cfg.table, cfg.device).maps


def test_orientation_rightward(cfg):
    o = estimate_orientation(_moving(cfg, (1, 0))[-3:])
    assert o.direction is not None and o.direction[0] >= np.cos(np.pi / 4)


def test_orientation_degenerate_cases(cfg):
    flat = SaliencyMap.from_resistance(np.full((25, 40), 300e3))
    assert estimate_orientation([flat, flat]).direction is None
    still = _moving(cfg, (0, 0))
    assert estimate_orientation(still[-3:]).degenerate
    with pytest.raises(InvalidInput):
        estimate_orientation([flat])


def test_spectrum_examples():
    s = amplitude_spectrum(np.full((25, 40), 0.7))
    assert s[12, 20] == pytest.approx(0.7 * 1000)
    assert np.count_nonzero(np.round(s, 9)) == 1
    imp = np.zeros((25, 40))
    imp[4, 9] = 1.0
    np.testing.assert_allclose(amplitude_spectrum(imp), 1.0)


@settings(max_examples=30, deadline=None)
@given(grids, st.integers(-30, 30), st.integers(-30, 30))
def test_spectrum_properties(g, dy, dx):
    s = amplitude_spectrum(g)
    assert np.all(s >= 0)
    np.testing.assert_allclose(amplitude_spectrum(np.roll(g, (dy, dx), (0, 1))), s,
                               rtol=1e-9, atol=1e-9)
    assert (s ** 2).sum() == pytest.approx(g.size * (g ** 2).sum(), rel=1e-6, abs=1e-9)
