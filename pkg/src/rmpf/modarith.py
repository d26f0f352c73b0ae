"""Modular arithmetic over Z_p and the exponent ring Z_(p-1), plus prime generation."""

from dataclasses import dataclass
import random

from gmpy2 import powmod as _powmod

# Deterministic Miller-Rabin witnesses, exact for every n < 3.3e24 (covers 2^64).
_DETERMINISTIC_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
_DETERMINISTIC_LIMIT = 3317044064679887385961981
_PROBABILISTIC_ROUNDS = 64  # error <= 4^-64 = 2^-128

_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47)


class InvalidModulusError(ValueError):
    pass


def _check_modulus(n):
    if n <= 0:
        raise InvalidModulusError(f"modulus must be positive, got {n}")


def mod_mul(a: int, b: int, n: int) -> int:
    """(a*b) mod n with exact (unbounded) intermediates."""
    _check_modulus(n)
    return (a * b) % n


def mod_pow(base: int, exp: int, p: int) -> int:
    """base^exp mod p by square-and-multiply (GMP). Uses 0^0 = 1."""
    _check_modulus(p)
    if exp < 0:
        raise ValueError("negative exponent")
    return int(_powmod(base, exp, p))


def powmod_unchecked(base, exp, p):
    """Hot-path variant of mod_pow for validated operands; may return an mpz."""
    return _powmod(base, exp, p)


def _miller_rabin_round(n, d, r, a):
    x = pow(a, d, n)
    if x == 1 or x == n - 1:
        return True
    for _ in range(r - 1):
        x = x * x % n
        if x == n - 1:
            return True
    return False


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for sp in _SMALL_PRIMES:
        if n % sp == 0:
            return n == sp
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    if n < _DETERMINISTIC_LIMIT:
        bases = _DETERMINISTIC_BASES
    else:
        # witnesses drawn from a fixed stream so the answer is reproducible
        wrng = random.Random(n)
        bases = [wrng.randrange(2, n - 1) for _ in range(_PROBABILISTIC_ROUNDS)]
    return all(_miller_rabin_round(n, d, r, a % n) for a in bases if a % n)


@dataclass(frozen=True)
class Modulus:
    """A prime p together with its exponent modulus q = p - 1."""

    p: int

    def __post_init__(self):
        if self.p < 5 or not is_prime(self.p):
            raise InvalidModulusError(f"{self.p} is not a prime >= 5")

    @property
    def q(self) -> int:
        return self.p - 1

    @property
    def bits(self) -> int:
        return self.p.bit_length()


def generate_prime(bits: int, rng: random.Random) -> Modulus:
    """Random prime with exactly `bits` significant bits, drawn from `rng`."""
    if not 8 <= bits <= 64:
        raise ValueError(f"bits must be in [8, 64], got {bits}")
    top = 1 << (bits - 1)
    while True:
        candidate = rng.getrandbits(bits) | top | 1
        if is_prime(candidate):
            return Modulus(candidate)
