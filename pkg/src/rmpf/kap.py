"""Two-party key agreement on rectangular matrix power actions.

Each party blinds the public exponent seeds X, Y with secret scalars
(A = lambda*X, B = omega*Y), publishes the token A |> Base <| B and applies
its own (A, B) to the peer's token.  Commuting scalar multiples make both
results equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import hashlib
import random
import struct
from typing import Optional, Sequence

from .core import (
    BaseMatrix, DimensionError, Dims, ExpMatrix, MatrixFormatError,
    decode_matrix, random_base, scalar_mul, two_sided_action,
)
from .modarith import Modulus, generate_prime, is_prime

KDF_LABEL = b"RMPF-KAP-v1"
PARAMS_MAGIC = b"RMPF"
PARAMS_VERSION = 0x01
NO_TRANSCRIPT = bytes(32)


class ParamsFormatError(ValueError):
    pass


class MalformedTokenError(ValueError):
    pass


@dataclass(frozen=True)
class PublicParams:
    p: int
    base: BaseMatrix
    x: ExpMatrix
    y: ExpMatrix

    def __post_init__(self):
        Modulus(self.p)
        if self.base.p != self.p:
            raise ValueError("base matrix modulus differs from p")
        for name, e in (("x", self.x), ("y", self.y)):
            if e.q != self.p - 1:
                raise ValueError(f"{name} is not reduced mod p - 1")
            if e.dims != self.base.dims:
                raise DimensionError(f"{name} has dims {e.dims}, base has {self.base.dims}")

    @property
    def dims(self) -> Dims:
        return self.base.dims

    @property
    def q(self) -> int:
        return self.p - 1

    @classmethod
    def from_values(cls, p: int, base: Sequence[Sequence[int]],
                    x: Sequence[Sequence[int]], y: Sequence[Sequence[int]]) -> "PublicParams":
        """Inject explicit values; x and y may be given unreduced (entries in Z_p)."""
        return cls(p, BaseMatrix(p, base), ExpMatrix.reduce(x, p - 1), ExpMatrix.reduce(y, p - 1))

    def to_bytes(self) -> bytes:
        return (PARAMS_MAGIC + bytes([PARAMS_VERSION]) + struct.pack(">Q", self.p)
                + self.base.to_bytes() + self.x.to_bytes() + self.y.to_bytes())

    @classmethod
    def from_bytes(cls, blob: bytes) -> "PublicParams":
        if len(blob) < 13 or blob[:4] != PARAMS_MAGIC:
            raise ParamsFormatError("missing RMPF magic")
        if blob[4] != PARAMS_VERSION:
            raise ParamsFormatError(f"unsupported version {blob[4]}")
        (p,) = struct.unpack_from(">Q", blob, 5)
        off = 13
        mats = []
        try:
            for _ in range(3):
                rows, off = decode_matrix(blob, off)
                mats.append(rows)
        except MatrixFormatError as exc:
            raise ParamsFormatError(str(exc)) from None
        if off != len(blob):
            raise ParamsFormatError(f"{len(blob) - off} trailing bytes")
        if p < 5 or not is_prime(p):
            raise ParamsFormatError(f"p = {p} is not prime")
        try:
            return cls(p, BaseMatrix(p, mats[0]), ExpMatrix(p - 1, mats[1]), ExpMatrix(p - 1, mats[2]))
        except ValueError as exc:
            raise ParamsFormatError(str(exc)) from None

    def to_hex(self) -> str:
        return self.to_bytes().hex()

    @classmethod
    def from_hex(cls, text: str) -> "PublicParams":
        try:
            return cls.from_bytes(bytes.fromhex("".join(text.split())))
        except ValueError as exc:
            if isinstance(exc, ParamsFormatError):
                raise
            raise ParamsFormatError(f"bad hex armor: {exc}") from None

    @classmethod
    def load(cls, data: bytes) -> "PublicParams":
        """Accept either the binary blob or its hex armor."""
        if data.startswith(PARAMS_MAGIC):
            return cls.from_bytes(data)
        try:
            text = data.decode("ascii")
        except UnicodeDecodeError:
            raise ParamsFormatError("not a parameter blob") from None
        return cls.from_hex(text)

    def fingerprint(self) -> str:
        return hashlib.sha256(self.to_bytes()).hexdigest()


@dataclass(frozen=True)
class PrivateKey:
    lam: int
    omega: int
    a: ExpMatrix = field(repr=False)
    b: ExpMatrix = field(repr=False)

    @classmethod
    def from_scalars(cls, params: PublicParams, lam: int, omega: int) -> "PrivateKey":
        q = params.q
        if lam % q == 0 or omega % q == 0:
            raise ValueError("secret scalars must be nonzero mod p - 1")
        return cls(lam, omega, scalar_mul(lam % q, params.x), scalar_mul(omega % q, params.y))


@dataclass(frozen=True)
class Token:
    matrix: BaseMatrix

    def to_bytes(self) -> bytes:
        return self.matrix.to_bytes()

    @classmethod
    def from_bytes(cls, data: bytes, params: PublicParams) -> "Token":
        try:
            matrix = BaseMatrix.from_bytes(data, params.p)
        except ValueError as exc:
            raise MalformedTokenError(str(exc)) from None
        if matrix.dims != params.dims:
            raise MalformedTokenError(f"token dims {matrix.dims} != params dims {params.dims}")
        return cls(matrix)


@dataclass(frozen=True)
class SharedKey:
    matrix: BaseMatrix
    session_key: bytes

    @property
    def fingerprint(self) -> str:
        return hashlib.sha256(self.session_key).hexdigest()


def setup(p_bits: int, dims: Dims, rng: random.Random, *, p: Optional[int] = None) -> PublicParams:
    """Fresh public parameters; pass `p` to fix the prime instead of generating one."""
    if not isinstance(dims, Dims):
        dims = Dims(*dims)
    prime = Modulus(p).p if p is not None else generate_prime(p_bits, rng).p
    base = random_base(dims, prime, rng)
    x, y = ([[rng.randrange(prime) for _ in range(dims.n)] for _ in range(dims.m)]
            for _ in range(2))
    return PublicParams(prime, base, ExpMatrix.reduce(x, prime - 1), ExpMatrix.reduce(y, prime - 1))


def gen_private(params: PublicParams, rng: random.Random) -> PrivateKey:
    """Secret scalars uniform in [1, p-2], resampled while lambda*omega = 0 mod p-1."""
    q = params.q
    while True:
        lam = rng.randrange(1, q)
        omega = rng.randrange(1, q)
        if lam * omega % q:
            return PrivateKey.from_scalars(params, lam, omega)


def make_token(params: PublicParams, priv: PrivateKey, counter=None) -> Token:
    return Token(two_sided_action(priv.a, params.base, priv.b, counter))


def kdf(key_matrix: BaseMatrix, transcript_hash: bytes = NO_TRANSCRIPT) -> bytes:
    if len(transcript_hash) != 32:
        raise ValueError("transcript hash must be 32 bytes")
    h = hashlib.sha256(KDF_LABEL)
    h.update(transcript_hash)
    h.update(key_matrix.to_bytes())
    h.update(struct.pack(">Q", key_matrix.p))
    return h.digest()


def derive_key(params: PublicParams, priv: PrivateKey, peer: Token,
               transcript_hash: bytes = NO_TRANSCRIPT, counter=None) -> SharedKey:
    m = peer.matrix
    if m.p != params.p or m.dims != params.dims:
        raise MalformedTokenError(f"peer token {m.dims} mod {m.p} does not fit params")
    matrix = two_sided_action(priv.a, m, priv.b, counter)
    return SharedKey(matrix, kdf(matrix, transcript_hash))

