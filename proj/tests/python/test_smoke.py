import numpy as np
import pytest

import dmnet


def test_square_opening_removes_small_blob():
    img = np.zeros((20, 20))
    img[2:4, 2:4] = 1.0
    img[8:15, 8:15] = 1.0
    out = dmnet.opening(img, dmnet.make_se("square", 5))
    assert out.shape == img.shape
    assert out[2:4, 2:4].sum() == 0.0
    assert np.array_equal(out[8:15, 8:15], img[8:15, 8:15])


def test_erode_dilate_bounds_with_centered_se():
    rng = np.random.default_rng(0)
    img = rng.random((3, 12, 10))
    se = dmnet.make_se("cross", 3)
    assert np.all(dmnet.erode(img, se) <= img)
    assert np.all(dmnet.dilate(img, se) >= img)


def test_se_ascii_round_trip():
    se = dmnet.make_se("diamond", 5)
    back = dmnet.parse_se_ascii(se.to_ascii())
    assert np.array_equal(back.mask, se.mask)
    assert se.count == 13


def test_framework_matches_classical_on_interior():
    rng = np.random.default_rng(1)
    side = 3
    active = list(rng.integers(0, side * side, size=side * side))
    img = rng.random((9, 9))
    se = dmnet.recover_se(active, side)
    got = dmnet.framework_morph(dmnet.MorphDirection.erosion, active, side, img, padding=1)
    want = dmnet.erode(img, se, policy=dmnet.CenterPolicy.mask_only)
    assert np.array_equal(got[1:-1, 1:-1], want[1:-1, 1:-1])


def test_binarize_bank_picks_maxima():
    weights = np.zeros(9 * 9)
    weights[4] = 1.0
    weights[9 + 7] = 0.5
    active = dmnet.binarize_bank(weights, 3)
    assert active[0] == 4 and active[1] == 7 and active[2] == 0


def test_synnet_forward_and_count():
    net = dmnet.build_network("synnet", classes=2, in_channels=1, input_size=224)
    assert net.parameter_count() == 121 * 121 + 2 + 224 * 224 * 2 + 2
    net.initialize(0)
    logits = net.forward(np.zeros((224, 224)))
    assert len(logits) == 2 and np.all(np.isfinite(logits))
    with pytest.raises(ValueError):
        net.forward(np.zeros((10, 10)))


def test_gradcheck_small_network():
    net = dmnet.build_network("cls-layer", classes=3, input_size=12)
    net.initialize(3)
    rng = np.random.default_rng(2)
    errors = net.gradcheck(rng.random((12, 12)), 1, max_entries=4)
    assert errors and max(errors.values()) < 1e-4


def test_synthetic_data_and_netpbm():
    data = dmnet.gen_squares(7, 32)
    assert len(data) == 1000
    labels = [label for _, label in data]
    assert labels.count(0) == 500
    img = data[0][0]
    assert img.shape == (32, 32)
    assert np.array_equal(dmnet.decode_netpbm(dmnet.encode_netpbm(img)), img)
    assert "morph-alexnet" in dmnet.architecture_names()
