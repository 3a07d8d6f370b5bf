"""
Secure arithmetic over Shamir shares, expressed as manager exercises.

Every method takes and returns lists of data-ids, so one call covers any
number of independent values with a single exercise per protocol round.
Values are non-negative integers embedded in Z_p; fixed-point reals carry a
public scale (d for weights and probabilities).
"""

import itertools
import logging
from dataclasses import dataclass, field as dataclass_field
from typing import Dict, List, Optional, Sequence, Tuple

from api.errors import ConfigurationError, FieldDomainError
from mpc.fixed_point import FixedPointParams, ceil_log2
from mpc.sharing import PartyId, SharingParams
from network.exercise import ExerciseOp
from network.manager import Manager
from network.messages import MANAGER_ID

log = logging.getLogger(__name__)

__all__ = ["ProtocolSession", "SecureEngine"]

Ids = List[str]


@dataclass(frozen=True)
class ProtocolSession:
    session_id: int
    sharing: SharingParams
    fixed_point: FixedPointParams = dataclass_field(default_factory=FixedPointParams)
    alice: PartyId = 1
    bob: PartyId = 2

    def __post_init__(self):
        if self.alice == self.bob:
            raise ConfigurationError(f"Alice and Bob must be different parties, both are {self.alice}")
        for role, pid in (("alice", self.alice), ("bob", self.bob)):
            if pid not in self.sharing.parties:
                raise ConfigurationError(f"{role} ({pid}) is not a member of the session")
        self.fixed_point.check_field(self.sharing.field)

    @property
    def parties(self) -> List[PartyId]:
        return self.sharing.parties


class SecureEngine:
    def __init__(self, manager: Manager, session: ProtocolSession, prefix: str = "v"):
        if manager.sharing != session.sharing:
            raise ConfigurationError("Manager and protocol session use different sharing parameters")
        self.manager = manager
        self.session = session
        self.fp = session.fixed_point
        self.field = session.sharing.field
        self._prefix = prefix
        self._counter = itertools.count()

    # ---- bookkeeping ----

    def fresh(self, count: int, tag: str = "") -> Ids:
        return [f"{self._prefix}{next(self._counter)}{tag}" for _ in range(count)]

    def _schedule(self, opcode: ExerciseOp, args: Dict, count: int, tag: str = "") -> Ids:
        results = self.fresh(count, tag)
        if count:
            self.manager.schedule_exercise(opcode, args, results)
        return results

    def flush(self):
        self.manager.run_pending()

    def check_headroom(self, scale: int):
        """Refuses a reciprocal scale whose intermediates could wrap around p."""
        largest = 2 * (scale * self.fp.e) ** 2 + 2 ** self.fp.rho
        if largest >= self.field.p:
            raise ConfigurationError(
                f"Modulus {self.field.p} is too small for inverse scale {scale}: "
                f"intermediates reach {largest}"
            )

    # ---- inputs and local operations ----

    def input(self, owners: Sequence[PartyId], names: Sequence[str]) -> Ids:
        """Sum over owners of their private values `names`, as fresh Shamir shares."""
        return self._schedule(ExerciseOp.INPUT, {"owners": list(owners), "names": list(names)},
                              len(names), ":in")

    def public(self, values: Sequence[int]) -> Ids:
        return self._schedule(ExerciseOp.PUBLIC, {"values": [v % self.field.p for v in values]}, len(values))

    def add(self, left: Ids, right: Ids) -> Ids:
        self._same_length(left, right)
        return self._schedule(ExerciseOp.ADD, {"left": list(left), "right": list(right)}, len(left))

    def linear(self, terms: Sequence[Sequence[Tuple[int, str]]], constants: Optional[Sequence[int]] = None) -> Ids:
        """out_k = constants[k] + sum(coefficient * x) over terms[k]."""
        constants = [0] * len(terms) if constants is None else list(constants)
        self._same_length(terms, constants)
        p = self.field.p
        args = {
            "terms": [[[c % p, data_id] for c, data_id in row] for row in terms],
            "constants": [c % p for c in constants],
        }
        return self._schedule(ExerciseOp.LINEAR, args, len(terms))

    def scale(self, ids: Ids, factor: int) -> Ids:
        return self.linear([[(factor, x)] for x in ids])

    def sub(self, left: Ids, right: Ids) -> Ids:
        self._same_length(left, right)
        return self.linear([[(1, a), (-1, b)] for a, b in zip(left, right)])

    # ---- multiplication ----

    def mul(self, left: Ids, right: Ids) -> Ids:
        self._same_length(left, right)
        return self.dot([[(a, b)] for a, b in zip(left, right)])

    def dot(self, products: Sequence[Sequence[Tuple[str, str]]]) -> Ids:
        """Sums of products, each sum needing a single reshare round."""
        args = {"terms": [[[a, b] for a, b in row] for row in products]}
        return self._schedule(ExerciseOp.MUL, args, len(products))

    # ---- division by a public integer ----

    def mask(self, count: int, modulus: int) -> Tuple[Ids, Ids]:
        results = self._schedule(ExerciseOp.MASK, {"dealer": self.session.alice, "count": count,
                                                   "modulus": modulus, "rho": self.fp.rho}, 2 * count)
        return results[:count], results[count:]

    def div_by_public(self, ids: Ids, divisor: int) -> Ids:
        """
        Shares of floor(u/d) or ceil(u/d) for every u. Bob learns u + r only,
        with r uniform in [0, 2^rho).
        """
        if divisor < 1 or divisor >= self.field.p:
            raise FieldDomainError(f"Public divisor {divisor} is outside [1, p)")
        if divisor == 1 or not ids:
            return list(ids)
        masks, remainders = self.mask(len(ids), divisor)
        masked = self.linear([[(1, u), (1, r)] for u, r in zip(ids, masks)])
        opened = self.reveal(masked, self.session.bob)
        bob_shares = self._schedule(ExerciseOp.RESHARE_MOD, {"dealer": self.session.bob, "sources": opened,
                                                             "modulus": divisor}, len(ids))
        inverse = pow(divisor, -1, self.field.p)
        return self.linear([[(inverse, u), (inverse, q), (-inverse, w)]
                            for u, q, w in zip(ids, remainders, bob_shares)])

    truncate = div_by_public

    # ---- reciprocal and division of shared values ----

    def newton(self, u: Ids, b: Ids, scale: int, iterations: int) -> Ids:
        """u <- u (2 scale - u b) / scale, converging to scale / b from below."""
        for _ in range(iterations):
            ub = self.mul(u, b)
            gap = self.linear([[(-1, x)] for x in ub], [2 * scale] * len(ub))
            u = self.div_by_public(self.mul(u, gap), scale)
        return u

    def approx_inverse(self, b: Ids, scale: Optional[int] = None) -> Ids:
        """
        Shares of about scale * e / b for shared 1 <= b <= scale.

        Both phases run at twice the requested scale so that b stays at most
        half the working scale; a rounded iterate can then never reach 2 W / b,
        where the recurrence collapses to zero. Warm-up from u = 1 brings u
        within a factor two of W / b, the precision phase works at W * e and a
        last division by two returns to the requested scale.
        """
        scale = self.fp.d if scale is None else scale
        working = 2 * scale
        self.check_headroom(working)
        warmup = max(self.fp.warmup_iters, ceil_log2(working))
        u = self.newton(self.public([1] * len(b)), b, working, warmup)
        u = self.scale(u, self.fp.e)
        u = self.newton(u, b, working * self.fp.e, self.fp.precision_iters)
        return self.div_by_public(u, 2)

    def secure_divide(self, a: Ids, b: Ids, scale: Optional[int] = None) -> Ids:
        """Shares of about d * a / b; `scale` bounds b and must be a multiple of d."""
        self._same_length(a, b)
        scale = self.fp.d if scale is None else scale
        if scale % self.fp.d:
            raise ConfigurationError(f"Inverse scale {scale} is not a multiple of d={self.fp.d}")
        inverse = self.approx_inverse(b, scale)
        return self.div_by_public(self.mul(a, inverse), scale * self.fp.e // self.fp.d)

    # ---- randomness and tests on shared values ----

    def random_nonzero(self, count: int) -> Ids:
        return self._schedule(ExerciseOp.RANDOM, {"dealer": self.session.alice, "count": count}, count)

    def is_zero(self, ids: Ids) -> List[bool]:
        """Which values are zero; the manager sees x * s for a random non-zero s only."""
        if not ids:
            return []
        masked = self.mul(ids, self.random_nonzero(len(ids)))
        return [value == 0 for value in self.open(masked)]

    # ---- opening ----

    def reveal(self, ids: Ids, target: PartyId, scheme: str = "shamir") -> Ids:
        """Sends every member's share to `target` only; returns the public data-ids."""
        return self._schedule(ExerciseOp.REVEAL, {"sources": list(ids), "target": target, "scheme": scheme},
                              len(ids), ":open")

    def open(self, ids: Ids, scheme: str = "shamir") -> List[int]:
        opened = self.reveal(ids, MANAGER_ID, scheme)
        self.flush()
        return [self.manager.revealed[data_id] for data_id in opened]

    # ---- additive shares ----

    def jrsz(self, count: int) -> Ids:
        return self._schedule(ExerciseOp.JRSZ, {"count": count}, count, ":zero")

    def approx_fraction(self, nums: Sequence[str], dens: Sequence[str], masks: Ids, parties: int) -> Ids:
        self._same_length(nums, dens)
        self._same_length(nums, masks)
        args = {"nums": list(nums), "dens": list(dens), "masks": list(masks),
                "scale": self.fp.d, "parties": parties}
        return self._schedule(ExerciseOp.APPROX_FRACTION, args, len(nums))

    def sq2pq(self, ids: Ids) -> Ids:
        return self._schedule(ExerciseOp.SQ2PQ, {"sources": list(ids)}, len(ids))

    @staticmethod
    def _same_length(left: Sequence, right: Sequence):
        if len(left) != len(right):
            raise ConfigurationError(f"Operand lists differ in length: {len(left)} vs {len(right)}")
