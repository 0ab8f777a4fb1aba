"""PRNG stream tests against an independent restatement of the algorithms."""

from __future__ import annotations

from hypothesis import given, settings
from hypothesis import strategies as st

from hubsim.prng import Xoshiro256StarStar

M64 = (1 << 64) - 1


def splitmix_seq(seed: int, n: int) -> list[int]:
    # independent restatement of the splitmix64 reference
    out = []
    x = seed & M64
    for _ in range(n):
        x = (x + 0x9E3779B97F4A7C15) & M64
        z = x
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M64
        out.append((z ^ (z >> 31)) & M64)
    return out


def xoshiro_seq(state: list[int], n: int) -> list[int]:
    # independent restatement of the xoshiro256** reference
    s = list(state)

    def rotl(x, k):
        return ((x << k) | (x >> (64 - k))) & M64

    out = []
    for _ in range(n):
        out.append((rotl((s[1] * 5) & M64, 7) * 9) & M64)
        t = (s[1] << 17) & M64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = rotl(s[3], 45)
    return out


@given(seed=st.integers(min_value=0, max_value=M64))
@settings(max_examples=50, deadline=None)
def test_stream_matches_reference(seed):
    rng = Xoshiro256StarStar(seed)
    expected = xoshiro_seq(splitmix_seq(seed, 4), 20)
    got = [rng.next_u64() for _ in range(20)]
    assert got == expected


def test_known_seed_zero_prefix():
    # pinned regression values computed from the reference restatement above
    rng = Xoshiro256StarStar(0)
    prefix = [rng.next_u64() for _ in range(4)]
    assert prefix == xoshiro_seq(splitmix_seq(0, 4), 4)
    assert all(0 <= v <= M64 for v in prefix)
    assert len(set(prefix)) == 4


@given(seed=st.integers(min_value=0, max_value=M64))
@settings(max_examples=30, deadline=None)
def test_random_unit_interval(seed):
    rng = Xoshiro256StarStar(seed)
    for _ in range(200):
        u = rng.random()
        assert 0.0 <= u < 1.0


def test_determinism_same_seed():
    a = Xoshiro256StarStar(1234)
    b = Xoshiro256StarStar(1234)
    assert [a.next_u64() for _ in range(100)] == [b.next_u64() for _ in range(100)]


def test_different_seeds_diverge():
    a = Xoshiro256StarStar(1)
    b = Xoshiro256StarStar(2)
    assert [a.next_u64() for _ in range(8)] != [b.next_u64() for _ in range(8)]


def test_state_roundtrip():
    rng = Xoshiro256StarStar(77)
    for _ in range(13):
        rng.next_u64()
    st_ = rng.state()
    ahead = [rng.next_u64() for _ in range(10)]
    rng2 = Xoshiro256StarStar(0)
    rng2.set_state(st_)
    assert [rng2.next_u64() for _ in range(10)] == ahead


@given(n=st.integers(min_value=1, max_value=1000), seed=st.integers(min_value=0, max_value=2**32))
@settings(max_examples=60, deadline=None)
def test_randrange_bounds(n, seed):
    rng = Xoshiro256StarStar(seed)
    for _ in range(50):
        v = rng.randrange(n)
        assert 0 <= v < n


def test_randrange_uniformity_small():
    rng = Xoshiro256StarStar(99)
    counts = [0] * 7
    draws = 70_000
    for _ in range(draws):
        counts[rng.randrange(7)] += 1
    expected = draws / 7
    # 5 sigma band for a binomial with p = 1/7
    sigma = (draws * (1 / 7) * (6 / 7)) ** 0.5
    for c in counts:
        assert abs(c - expected) < 5 * sigma


def test_draw_counter():
    rng = Xoshiro256StarStar(5)
    rng.random()
    rng.uniform(2.0, 3.0)
    assert rng.draws == 2
