"""
Public fixed-point parameters and the exact (rounding-free) Newton recurrence
for the scaled reciprocal d/b, used to check the shared computation.
"""

import math
from dataclasses import dataclass, field as dataclass_field
from fractions import Fraction
from typing import List

from api.errors import ConfigurationError
from mpc.field import FieldParams
from mpc.sharing import SharingParams


def ceil_log2(x: int) -> int:
    if x < 1:
        raise ConfigurationError(f"log2 of non-positive value {x}")
    return (x - 1).bit_length()


@dataclass(frozen=True)
class FixedPointParams:
    """
    d: scale of real values in [0, 1]; e: extra precision of the reciprocal;
    rho: mask width in bits; t_prec, k_err: constants of the error bound
    16(k_err+1)/e.
    """

    d: int = 256
    e: int = 2 ** 16
    rho: int = 40
    warmup_iters: int = 16
    precision_iters: int = 16
    t_prec: int = 5
    k_err: int = 1

    def __post_init__(self):
        if self.d < 2:
            raise ConfigurationError(f"Scale d must be >= 2, got {self.d}")
        if self.e < 2 or self.e & (self.e - 1):
            raise ConfigurationError(f"Precision e must be a power of two >= 2, got {self.e}")
        if self.rho < 1:
            raise ConfigurationError(f"Mask width rho must be positive, got {self.rho}")
        if self.warmup_iters < ceil_log2(self.d):
            raise ConfigurationError(
                f"warmup_iters={self.warmup_iters} is below ceil(log2 d)={ceil_log2(self.d)}"
            )
        if self.precision_iters < ceil_log2(self.e):
            raise ConfigurationError(
                f"precision_iters={self.precision_iters} is below ceil(log2 e)={ceil_log2(self.e)}"
            )
        if self.k_err < 0:
            raise ConfigurationError("k_err must be non-negative")
        if self.t_prec <= math.log2(5 + math.log(self.k_err + 1)):
            raise ConfigurationError(
                f"t_prec={self.t_prec} must exceed log2(5 + ln(k_err + 1))"
            )

    @property
    def relative_error(self) -> Fraction:
        return Fraction(16 * (self.k_err + 1), self.e)

    @property
    def tolerance(self) -> int:
        """Absolute tolerance on a learned weight at scale d."""
        return max(2, math.ceil(self.relative_error * self.d))

    def check_field(self, field_params: FieldParams):
        if field_params.p <= self.d:
            raise ConfigurationError(f"Modulus {field_params.p} must exceed d={self.d}")
        if field_params.p <= 2 ** self.rho + self.d * self.e:
            raise ConfigurationError(
                f"Modulus {field_params.p} leaves no headroom for 2^rho + d*e "
                f"(rho={self.rho}, d={self.d}, e={self.e})"
            )


@dataclass(frozen=True)
class ProtocolConfig:
    field: FieldParams
    sharing: SharingParams
    fixed_point: FixedPointParams = dataclass_field(default_factory=FixedPointParams)

    def __post_init__(self):
        if self.sharing.field.p != self.field.p:
            raise ConfigurationError("Sharing parameters use a different modulus")
        self.fixed_point.check_field(self.field)


def newton_step(u: Fraction, b: int, scale: int) -> Fraction:
    """u <- u (2 - u b / scale), whose fixed point is scale / b."""
    return u * (2 - u * b / Fraction(scale))


def exact_newton_iterates(b: int, scale: int, iterations: int, u0: int = 1) -> List[Fraction]:
    """All iterates u_0 .. u_iterations of the exact recurrence."""
    iterates = [Fraction(u0)]
    for _ in range(iterations):
        iterates.append(newton_step(iterates[-1], b, scale))
    return iterates

