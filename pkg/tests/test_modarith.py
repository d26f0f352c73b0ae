import random

from hypothesis import given, settings, strategies as st
import pytest

from oracles import is_prime_trial
from rmpf.modarith import InvalidModulusError, Modulus, generate_prime, is_prime, mod_mul, mod_pow

P64 = 2**64 - 59


def test_mod_mul_trivial():
    assert mod_mul(0, 12345, 104729) == 0
    assert mod_mul(1, 12345, 104729) == 12345


def test_mod_mul_wide():
    # 2^64 = 1 * (2^64 - 59) + 59
    assert mod_mul(2**63, 2, P64) == 59


def test_mod_mul_zero_modulus():
    with pytest.raises(InvalidModulusError):
        mod_mul(1, 2, 0)


def test_mod_mul_matches_bigint_oracle():
    rng = random.Random(1)
    for _ in range(100_000):
        n = rng.randrange(2, 2**64)
        a, b = rng.randrange(n), rng.randrange(n)
        r = mod_mul(a, b, n)
        assert r == mod_mul(b, a, n)
        assert r == int(str(a * b)) % n


def test_mod_pow_examples():
    assert mod_pow(3, 5, 7) == 5
    assert mod_pow(0, 0, 7) == 1
    assert mod_pow(5, 0, 7) == 1
    for a in range(1, 104729, 997):
        assert mod_pow(a, 104728, 104729) == 1


@settings(max_examples=300)
@given(st.integers(1, P64 - 1), st.integers(0, P64 - 2), st.integers(0, P64 - 2))
def test_exponent_reduction_soundness(a, e1, e2):
    lhs = mod_mul(mod_pow(a, e1, P64), mod_pow(a, e2, P64), P64)
    assert lhs == mod_pow(a, (e1 + e2) % (P64 - 1), P64)


def test_is_prime_examples():
    assert is_prime(104729)
    assert not is_prime(1)
    assert not is_prime(0)
    assert is_prime(2)
    # trial division: 104731 = 11 * 9521
    assert not is_prime(104731)
    assert is_prime(P64)


def test_is_prime_agrees_with_trial_division():
    assert [n for n in range(20_000) if is_prime(n)] == [n for n in range(20_000) if is_prime_trial(n)]


@pytest.mark.parametrize("n", [
    2047, 1373653, 25326001, 3215031751, 2152302898747, 3474749660383,
    341550071728321, 3825123056546413051,  # strong pseudoprimes to small base sets
    561, 41041, 825265,  # Carmichael numbers
])
def test_is_prime_rejects_pseudoprimes(n):
    assert not is_prime(n)


def test_is_prime_beyond_64_bits():
    assert is_prime(2**89 - 1)
    assert not is_prime((2**61 - 1) * (2**31 - 1))


def test_generate_prime_bit_length():
    rng = random.Random(7)
    for bits in (8, 9, 16, 33, 64):
        p = generate_prime(bits, rng).p
        assert p.bit_length() == bits
        assert is_prime(p)
    p8 = generate_prime(8, random.Random(3)).p
    assert 128 <= p8 <= 255 and is_prime_trial(p8)


def test_generate_prime_17_bits_trial_division():
    for seed in range(20):
        p = generate_prime(17, random.Random(seed)).p
        assert 2**16 <= p < 2**17
        assert is_prime_trial(p)


def test_generate_prime_reproducible():
    assert generate_prime(64, random.Random(b"seed")) == generate_prime(64, random.Random(b"seed"))


def test_generate_prime_rejects_bits():
    with pytest.raises(ValueError):
        generate_prime(7, random.Random(0))
    with pytest.raises(ValueError):
        generate_prime(65, random.Random(0))


def test_modulus():
    m = Modulus(104729)
    assert m.q == 104728
    with pytest.raises(InvalidModulusError):
        Modulus(104731)
