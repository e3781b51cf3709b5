import numpy as np
import pytest

from dpevolve import RngStream


def test_same_path_same_draws():
    a = RngStream(7).child("vote", 3).generator().random(4)
    b = RngStream(7).child("vote", 3).generator().random(4)
    assert np.array_equal(a, b)


def test_sibling_streams_differ():
    a = RngStream(7).child("vote", 3).generator().random(4)
    b = RngStream(7).child("vote", 4).generator().random(4)
    c = RngStream(7).child("offspring", 3).generator().random(4)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_derivation_order_irrelevant():
    direct = RngStream(1, "x", 2, "y").generator().random(3)
    stepwise = RngStream(1).child("x").child(2).child("y").generator().random(3)
    assert np.array_equal(direct, stepwise)


def test_wire_seed_stable_and_distinct():
    s = RngStream(9).child("init")
    assert s.wire_seed() == RngStream(9).child("init").wire_seed()
    assert s.wire_seed() != RngStream(9).child("other").wire_seed()
    assert 0 <= s.wire_seed() < 2**64


def test_rejects_negative_and_odd_types():
    with pytest.raises(ValueError):
        RngStream(3).child(-1)
    with pytest.raises(TypeError):
        RngStream(3).child(1.5)
