import numpy as np
import pytest

from rggentropy import streams


def test_blocks_cover_total():
    bl = streams.blocks(10, 4)
    assert bl == [(0, 4), (1, 4), (2, 2)]
    assert streams.blocks(0, 4) == []
    with pytest.raises(ValueError):
        streams.blocks(-1, 4)


def test_generator_is_keyed():
    a = streams.generator(1, 0, 5).random(4)
    b = streams.generator(1, 0, 5).random(4)
    c = streams.generator(1, 0, 6).random(4)
    assert np.array_equal(a, b) and not np.array_equal(a, c)
    assert streams.derive_seed(3, 1) != streams.derive_seed(3, 2)


def test_map_blocks_is_thread_independent():
    fn = lambda b, s: streams.generator(9, b).random(s).sum()
    one = streams.map_blocks(fn, 10_000, 777, threads=1)
    many = streams.map_blocks(fn, 10_000, 777, threads=8)
    assert one == many


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("RGG_THREADS", "2")
    assert streams.thread_count(16) == 2
    monkeypatch.delenv("RGG_THREADS")
    assert streams.thread_count(3) == 3
