"""Key agreement over rectangular matrix power actions."""

from .core import (
    BaseMatrix, Dims, ExpMatrix, commutes, compose_left, compose_right,
    left_action, right_action, scalar_mul, two_sided_action,
)
from .kap import PrivateKey, PublicParams, SharedKey, Token, derive_key, gen_private, kdf, make_token, setup
from .modarith import Modulus, generate_prime, is_prime, mod_mul, mod_pow

__version__ = "0.1.0"
