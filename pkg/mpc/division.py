"""
Plaintext steps of the division-by-public protocol and of the averaged
fraction, as computed by a single party.

    Alice:   r <- [0, 2^rho), q = r mod d
    all:     z = u + r, revealed to Bob
    Bob:     w = z mod d
    all:     (u + q - w) / d

u + q - w is always a multiple of d, equal to d * floor(u/d) or d * ceil(u/d).
"""

from fractions import Fraction
from typing import Tuple

from api.errors import FieldDomainError
from mpc.field import RandomSource, sample_bounded


def alice_mask(d: int, rho: int, rng: RandomSource) -> Tuple[int, int]:
    r = sample_bounded(2 ** rho, rng)
    return r, alice_remainder(r, d)


def alice_remainder(r: int, d: int) -> int:
    return r % d


def bob_remainder(z: int, d: int) -> int:
    return z % d


def corrected_numerator(u: int, q: int, w: int) -> int:
    return u + q - w


def divide_in_clear(u: int, d: int, r: int) -> int:
    """Result of the protocol for a known mask r; used by hand traces and tests."""
    if d < 1:
        raise FieldDomainError(f"Divisor must be positive, got {d}")
    numerator = corrected_numerator(u, alice_remainder(r, d), bob_remainder(u + r, d))
    return numerator // d


def leaks(u: int, r: int, d: int, rho: int) -> bool:
    """z = u + r tells Bob something about u when it falls outside [d, 2^rho)."""
    z = u + r
    return z < d or z >= 2 ** rho


def local_fraction(numerator: int, denominator: int, scale: int, parties: int) -> int:
    """round(scale * numerator / (denominator * parties)), halves rounded up."""
    if denominator <= 0 or parties <= 0:
        raise FieldDomainError(f"Fraction {numerator}/{denominator} over {parties} parties is undefined")
    value = Fraction(scale * numerator, denominator * parties)
    return int(value + Fraction(1, 2))
