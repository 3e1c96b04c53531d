import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sarratio.errors import ValidationError
from sarratio.raster import Roi, roi_stats
from sarratio.simulate import (
    BLOCK_LEVELS,
    N_SCATTERERS,
    SCATTERER_LEVEL,
    PhantomSpec,
    Scene,
    SpeckleParams,
    apply_additive,
    apply_multiplicative,
    blocks_points_rois,
    gamma_speckle,
    make_phantom,
    make_rng,
    phantom_blocks_points,
    phantom_sine,
    phantom_step,
    phantom_strips,
    phantom_textured_step,
    simulate_scene,
)


def _components(mask):
    from scipy.ndimage import label

    lab, n = label(mask)
    return lab, n


# ------------------------------------------------------------ blocks phantom

@pytest.mark.parametrize("side", [100, 128, 256, 500, 513])
def test_blocks_layout(side):
    img = phantom_blocks_points(side)
    assert img.shape == (side, side)
    assert set(np.unique(img).tolist()) == {2.0, 10.0, 40.0, 60.0, 80.0, 240.0}
    assert np.count_nonzero(img == SCATTERER_LEVEL) == N_SCATTERERS * (16 + 8)
    if side < 128:
        return  # neighbouring scatterers abut at the minimum size
    # forty scatterers, twenty of each footprint
    lab, n = _components(img == SCATTERER_LEVEL)
    assert n == 2 * N_SCATTERERS
    shapes = []
    for k in range(1, n + 1):
        ys, xs = np.nonzero(lab == k)
        shapes.append((np.ptp(ys) + 1, np.ptp(xs) + 1))
    assert shapes.count((4, 4)) == N_SCATTERERS
    assert shapes.count((4, 2)) == N_SCATTERERS
    # each square has side side // 5
    for level in (2.0, 40.0, 60.0, 80.0):
        ys, xs = np.nonzero(img == level)
        assert ys.size == (side // 5) ** 2
        assert np.ptp(ys) + 1 == np.ptp(xs) + 1 == side // 5


def test_blocks_pixel_values():
    img = phantom_blocks_points(500)
    rois = blocks_points_rois(500)
    assert img[125, 125] == 2.0
    assert img[5, 5] == 10.0
    assert img[125, 375] == 40.0 and img[375, 125] == 60.0 and img[375, 375] == 80.0
    assert img[img > 100].size == 40 * 16 - 20 * 8
    for name, roi in rois.items():
        s = roi_stats(img, roi)
        assert s.mean == BLOCK_LEVELS[name] and s.std == 0.0


def test_blocks_too_small():
    with pytest.raises(ValidationError):
        phantom_blocks_points(99)


# ------------------------------------------------------------------- strips

def test_strips_default_levels():
    img = phantom_strips(512)
    assert set(np.unique(img).tolist()) == {1.0, 20.0}
    # widths increase left to right
    row = img[0] == 20.0
    edges = np.flatnonzero(np.diff(np.r_[0, row.astype(int), 0]))
    widths = edges[1::2] - edges[::2]
    assert list(widths) == sorted(widths)


def test_strips_empty_and_overflow():
    assert np.all(phantom_strips(50, widths=[]) == 1.0)
    with pytest.raises(ValidationError):
        phantom_strips(20, widths=[5, 5, 5, 5])
    with pytest.raises(ValidationError):
        phantom_strips(64, low=0.0)


# --------------------------------------------------------- step, sine, texture

def test_step_levels():
    img = phantom_step(64)
    assert np.all(img[:, :32] == 11.0) and np.all(img[:, 32:] == 1.0)
    assert phantom_step(64, rows=1).shape == (1, 64)


def test_textured_step_left_mean():
    img = phantom_textured_step(512, seed=4)
    assert abs(img[:, :256].mean() - 11.0) / 11.0 < 0.05
    assert np.array_equal(img, phantom_textured_step(512, seed=4))


def test_sine():
    img = phantom_sine(100, mean=10, amplitude=5, period=50, rows=2)
    assert img.shape == (2, 100)
    assert img.min() > 0 and np.isclose(img.max(), 15, atol=0.02)
    with pytest.raises(ValidationError):
        phantom_sine(100, mean=10, amplitude=10)


def test_make_phantom_dispatch():
    assert np.array_equal(make_phantom(PhantomSpec("step", 32)), phantom_step(32))
    with pytest.raises(ValidationError):
        PhantomSpec("unknown", 32)
    with pytest.raises(ValidationError):
        make_phantom(PhantomSpec("step", 32, {"bogus": 1}))


# -------------------------------------------------------------------- noise

@pytest.mark.parametrize("looks,band", [(1, (0.97, 1.03)), (3, (2.91, 3.09))])
def test_gamma_moments(looks, band):
    y = gamma_speckle(1000, 1000, SpeckleParams(looks, 11))
    s = y.mean()
    enl = s * s / y.var(ddof=1)
    assert 0.995 <= s <= 1.005
    assert band[0] <= enl <= band[1]


def test_gamma_non_integer_looks():
    y = gamma_speckle(1000, 1000, SpeckleParams(2.5, 1))
    assert abs(y.mean() - 1) < 0.005
    assert abs(y.mean() ** 2 / y.var(ddof=1) - 2.5) / 2.5 < 0.03


def test_gamma_deterministic():
    a = gamma_speckle(40, 30, SpeckleParams(2, 9))
    b = gamma_speckle(40, 30, SpeckleParams(2, 9))
    c = gamma_speckle(40, 30, SpeckleParams(2, 10))
    assert a.shape == (30, 40)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


@pytest.mark.parametrize("looks", [0, -1, float("nan"), float("inf")])
def test_bad_looks(looks):
    with pytest.raises(ValidationError):
        SpeckleParams(looks, 0)


@pytest.mark.parametrize("seed", [-1, 2**64, 1.5, True])
def test_bad_seed(seed):
    with pytest.raises(ValidationError):
        make_rng(seed)


def test_streams_independent():
    a = make_rng(1, 2).random(8)
    b = make_rng(1, 3).random(8)
    assert not np.array_equal(a, b)


def test_multiplicative():
    z = apply_multiplicative(np.full((4, 4), 10.0), np.ones((4, 4)))
    assert np.all(z == 10.0)
    with pytest.raises(ValidationError):
        apply_multiplicative(np.ones((3, 3)), np.ones((3, 4)))


def test_multiplicative_background_stats():
    x = np.full((200, 200), 10.0)
    z = apply_multiplicative(x, gamma_speckle(200, 200, SpeckleParams(1, 21)))
    s = roi_stats(z, Roi(0, 0, 200, 200))
    assert abs(s.mean - 10) / 10 < 0.03
    assert abs(s.enl - 1) < 0.1


def test_additive():
    x = np.arange(12.0).reshape(3, 4)
    assert np.array_equal(apply_additive(x, 0.0, 1), x)
    z = apply_additive(np.zeros((1000, 1000)), 1.0, 2)
    assert abs(z.mean()) <= 0.005
    assert abs(z.std(ddof=1) - 1) <= 0.005
    assert np.array_equal(apply_additive(x, 2.0, 5), apply_additive(x, 2.0, 5))
    with pytest.raises(ValidationError):
        apply_additive(x, -1.0, 0)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([0.5, 1.0, 3.0, 7.0]), st.integers(0, 2**64 - 1))
def test_speckle_positive_and_finite(looks, seed):
    y = gamma_speckle(16, 16, SpeckleParams(looks, seed))
    assert np.all(np.isfinite(y)) and np.all(y > 0)


def test_scene_round_trip():
    s = Scene("strips", 128, {"widths": [2, 4]}, 3.0, 8)
    assert Scene.from_dict(s.to_dict()) == s
    with pytest.raises(ValidationError):
        Scene.from_dict({"kind": "step", "colour": 1})
    t, z = simulate_scene(s)
    assert t.shape == z.shape == (128, 128)


def test_oversmoothing_variance_inflation():
    # flat-step ratio mixes texture into the "speckle"
    for seed in range(3):
        x = phantom_textured_step(256, seed)
        y = gamma_speckle(256, 256, SpeckleParams(1, seed))
        z = x * y
        assert np.var(z / phantom_step(256)) > np.var(z / x)
