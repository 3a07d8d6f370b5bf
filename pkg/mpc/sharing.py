"""
Additive and polynomial (Shamir) secret sharing over Z_p.

Party ids double as Shamir evaluation points: party i holds q(i).
"""

import struct
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Optional, Sequence

from api.errors import ConfigurationError, ProtocolError
from mpc.field import FieldElement, FieldParams, RandomSource, sample_uniform

PartyId = int

_SHARE_HEADER = struct.Struct(">I")
_OWNER = struct.Struct(">H")


@dataclass(frozen=True)
class SharingParams:
    n: int
    t: int
    field: FieldParams

    def __post_init__(self):
        if self.n < 3:
            raise ConfigurationError(f"At least 3 parties are required, got n={self.n}")
        if not 1 <= self.t <= (self.n - 1) // 2:
            raise ConfigurationError(
                f"Degree t={self.t} must lie in [1, {(self.n - 1) // 2}] for n={self.n} "
                f"so that products of shares stay reconstructible"
            )
        if self.n >= self.field.p:
            raise ConfigurationError(f"Party count {self.n} must be below the modulus")

    @classmethod
    def with_default_degree(cls, n: int, field: FieldParams) -> 'SharingParams':
        return cls(n=n, t=(n - 1) // 2, field=field)

    @property
    def parties(self) -> List[PartyId]:
        return list(range(1, self.n + 1))


@dataclass(frozen=True)
class AdditiveShare:
    owner: PartyId
    value: FieldElement
    secret_id: str = ""


@dataclass(frozen=True)
class PolynomialShare:
    owner: PartyId
    value: FieldElement
    secret_id: str = ""


def encode_share(share) -> bytes:
    """secret-id (u32 length + UTF-8), owner (u16), value (16 bytes little-endian)."""
    label = share.secret_id.encode("utf-8")
    return _SHARE_HEADER.pack(len(label)) + label + _OWNER.pack(share.owner) + share.value.to_bytes()


def decode_share(data: bytes, params: FieldParams, kind=PolynomialShare):
    (length,) = _SHARE_HEADER.unpack_from(data, 0)
    offset = _SHARE_HEADER.size
    secret_id = data[offset:offset + length].decode("utf-8")
    offset += length
    (owner,) = _OWNER.unpack_from(data, offset)
    offset += _OWNER.size
    value = FieldElement.from_bytes(data[offset:], params)
    return kind(owner=owner, value=value, secret_id=secret_id)


def additive_share(x: FieldElement, n: int, rng: RandomSource, secret_id: str = "") -> List[AdditiveShare]:
    """The first n-1 shares are uniform; the last one fixes the sum to x."""
    if n < 2:
        raise ConfigurationError(f"Additive sharing needs at least 2 parties, got {n}")
    values = [sample_uniform(x.params, rng) for _ in range(n - 1)]
    last = x
    for value in values:
        last = last - value
    values.append(last)
    return [AdditiveShare(owner=i + 1, value=v, secret_id=secret_id) for i, v in enumerate(values)]


def _check_owners(shares, expected: Optional[int] = None):
    owners = [s.owner for s in shares]
    if len(set(owners)) != len(owners):
        raise ProtocolError(f"Duplicate share owners: {sorted(owners)}")
    if len({s.secret_id for s in shares}) > 1:
        raise ProtocolError("Shares belong to different secrets")
    if expected is not None and len(shares) != expected:
        raise ProtocolError(f"Expected {expected} shares, got {len(shares)}")


def reconstruct_additive(shares: Sequence[AdditiveShare], n: Optional[int] = None) -> FieldElement:
    if not shares:
        raise ProtocolError("No shares to reconstruct")
    _check_owners(shares, n)
    total = shares[0].value
    for share in shares[1:]:
        total = total + share.value
    return total


def jrsz(params: SharingParams, dealer: PartyId, rng: RandomSource, secret_id: str = "") -> Dict[PartyId, AdditiveShare]:
    """
    Joint random sharing of zero, dealt by a third party.

    The dealer is never one of the receiving parties (the Manager, id 0, in
    the network runtime).
    """
    receivers = [pid for pid in params.parties if pid != dealer]
    if len(receivers) < 2:
        raise ConfigurationError("Sharing zero needs at least 2 receiving parties")
    shares = additive_share(params.field.zero, len(receivers), rng, secret_id)
    return {pid: AdditiveShare(owner=pid, value=s.value, secret_id=secret_id)
            for pid, s in zip(receivers, shares)}


def evaluate_polynomial(coefficients: Sequence[FieldElement], x: int) -> FieldElement:
    result = coefficients[-1]
    for c in reversed(coefficients[:-1]):
        result = result * x + c
    return result


def shamir_share(x: FieldElement, params: SharingParams, rng: RandomSource,
                 secret_id: str = "",
                 coefficients: Optional[Sequence[int]] = None) -> List[PolynomialShare]:
    """
    Shares x with a random polynomial of degree t.

    `coefficients` fixes the full polynomial (constant term first); it is
    meant for tests and must start with x.
    """
    field = params.field
    if coefficients is None:
        coeffs = [x] + [sample_uniform(field, rng) for _ in range(params.t)]
    else:
        coeffs = [field.element(c) for c in coefficients]
        if coeffs[0] != x:
            raise ConfigurationError("Constant coefficient must equal the secret")
    return [PolynomialShare(owner=i, value=evaluate_polynomial(coeffs, i), secret_id=secret_id)
            for i in params.parties]


@lru_cache(maxsize=256)
def _lagrange_at_zero(points: tuple, p: int) -> tuple:
    coefficients = []
    for i in points:
        numerator, denominator = 1, 1
        for j in points:
            if j != i:
                numerator = numerator * j % p
                denominator = denominator * (j - i) % p
        coefficients.append(numerator * pow(denominator, -1, p) % p)
    return tuple(coefficients)


def lagrange_coefficients(points: Sequence[int], field: FieldParams) -> List[FieldElement]:
    """Coefficients lambda_i with q(0) = sum lambda_i q(i)."""
    return [FieldElement(c, field) for c in _lagrange_at_zero(tuple(points), field.p)]


def lagrange_reconstruct(shares: Sequence[PolynomialShare], params: SharingParams,
                         degree: Optional[int] = None) -> FieldElement:
    """
    Interpolates the constant term. Needs degree+1 shares with distinct
    owners (degree defaults to t; use 2t for unreduced products).
    """
    degree = params.t if degree is None else degree
    _check_owners(shares)
    if len(shares) < degree + 1:
        raise ProtocolError(f"Need at least {degree + 1} shares, got {len(shares)}")
    coeffs = lagrange_coefficients([s.owner for s in shares], params.field)
    total = params.field.zero
    for c, share in zip(coeffs, shares):
        total = total + c * share.value
    return total


def sq2pq_all(shares: Sequence[AdditiveShare], params: SharingParams,
              rngs: Dict[PartyId, RandomSource]) -> List[PolynomialShare]:
    """
    Additive to polynomial shares, simulated for all parties at once.

    Every party Shamir-shares its additive share; every party sums the n
    polynomial shares it receives.
    """
    _check_owners(shares, params.n)
    secret_id = shares[0].secret_id
    received: Dict[PartyId, FieldElement] = {pid: params.field.zero for pid in params.parties}
    for share in shares:
        for sub in shamir_share(share.value, params, rngs[share.owner], secret_id):
            received[sub.owner] = received[sub.owner] + sub.value
    return [PolynomialShare(owner=pid, value=received[pid], secret_id=secret_id) for pid in params.parties]
