import math

import pytest

import gkpft


def test_conversions():
    var = gkpft.squeezing_to_variance(15.0)
    assert math.isclose(var, 0.5 * 10**-1.5)
    assert math.isclose(gkpft.variance_to_squeezing(var), 15.0)


def test_error_masses():
    # odd-bin mass is a subset of the out-of-bin mass, both grow with variance
    assert 0.0 < gkpft.error_prob_binned(0.04) <= gkpft.error_prob(0.04)
    assert gkpft.error_prob(0.04) < gkpft.error_prob(0.09)
    hp = gkpft.hrm_probabilities(0.05, v_up=0.6)
    assert 0.0 < hp["p_in"] < hp["p_cor"] < 1.0
    assert math.isclose(hp["accept"], hp["p_cor"] + hp["p_in"])


def test_leading_order_anchors():
    prev = gkpft.threshold_previous(loss=0.03)
    assert prev["achievable"]
    assert abs(prev["squeezing_db"] - 14.2) < 1.0
    prop = gkpft.threshold_proposed(loss=0.03)
    assert prop["achievable"]
    # the encoded construction always needs less squeezing
    assert prop["squeezing_db"] < prev["squeezing_db"]
    assert 0.04 < gkpft.previous_loss_ceiling() < 0.09


def test_ledger_channels_shape():
    ch = gkpft.ledger_channels(sigma=0.25, loss=0.05)
    assert ch["L"] == 4 and ch["m"] == 3
    assert 0.0 < ch["discrete_rate"] < 0.5
    # fusion-port readings carry the extra gate spread on top of the node's own
    assert ch["v_bell_x"] > ch["v_own"]


def test_repetition_decode():
    bit, llr = gkpft.analog_repetition_decode([0, 1, 0], [0.1, 0.8, -0.2], 0.1)
    assert bit == 0 and llr > 0.0
    assert gkpft.majority_decode([1, 1, 0]) == 1
    with pytest.raises(ValueError):
        gkpft.analog_repetition_decode([0, 1], [0.1], 0.1)


def test_matching():
    w = [[0, 1, 9, 9], [1, 0, 9, 9], [9, 9, 0, 1], [9, 9, 1, 0]]
    pairs = gkpft.min_weight_perfect_matching(w)
    assert sorted(tuple(sorted(p)) for p in pairs) == [(0, 1), (2, 3)]


def test_run_trials_deterministic():
    kw = dict(sigma=0.3, d=3, trials=200, mode="ledger", seed=7)
    a = gkpft.run_trials(**kw)
    assert a["n_trials"] == 200
    assert 0 <= a["failures"] <= 200
    lo, hi = a["ci"]
    assert 0.0 <= lo <= a["failure_rate"] <= hi <= 1.0
    assert a["failures"] > 0  # sigma 0.3 sits above threshold
    assert gkpft.run_trials(**kw) == a
    assert gkpft.run_trials(**kw, workers=3) == a  # worker count never leaks


def test_bad_mode_rejected():
    with pytest.raises(ValueError):
        gkpft.run_trials(sigma=0.3, d=3, trials=10, mode="quantum")


def test_version_present():
    assert gkpft.__version__.count(".") == 2
