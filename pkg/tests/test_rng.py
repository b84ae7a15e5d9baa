import numpy as np
import pytest

from ldbuffer.rng import philox_block, uniform_pair

# published known-answer vectors for Philox4x32-10
KAT = [
    ((0, 0, 0, 0), (0, 0), (0x6627E8D5, 0xE169C58D, 0xBC57AC4C, 0x9B00DBD8)),
    ((0xFFFFFFFF,) * 4, (0xFFFFFFFF,) * 2, (0x408F276D, 0x41C83B0E, 0xA20BC7C6, 0x6D5451FD)),
    ((0x243F6A88, 0x85A308D3, 0x13198A2E, 0x03707344), (0xA4093822, 0x299F31D0),
     (0xD16CFE09, 0x94FDCCEB, 0x5001E420, 0x24126EA1)),
]


@pytest.mark.parametrize("ctr,key,expect", KAT)
def test_known_answers(ctr, key, expect):
    assert philox_block(ctr, key) == expect


def test_uniforms_are_pure_functions():
    assert uniform_pair(7, 3, 11) == uniform_pair(7, 3, 11)
    assert uniform_pair(7, 3, 11) != uniform_pair(7, 4, 11)
    assert uniform_pair(7, 3, 11) != uniform_pair(8, 3, 11)


def test_uniform_moments():
    u = np.array([uniform_pair(1, t, e) for t in range(20) for e in range(500)]).ravel()
    assert np.all((u >= 0) & (u < 1))
    assert abs(u.mean() - 0.5) < 4 * np.sqrt(1 / 12 / u.size)
    assert abs(np.corrcoef(u[:-1], u[1:])[0, 1]) < 4 / np.sqrt(u.size)
