"""
Parties of the Manager/Member runtime.

A party is a message-driven state machine: `handle()` consumes one decoded
message and returns the messages to send. Parties never touch a transport,
so the same code runs under the in-process pump and over sockets.
"""

import logging
from collections import defaultdict
from typing import Callable, Dict, List, Sequence

from api.errors import DataStoreError, DegenerateModelError, ProtocolError, SpnPlatformError
from mpc.division import alice_mask, bob_remainder, local_fraction
from mpc.field import FieldElement, RandomSource, sample_nonzero
from mpc.sharing import PartyId, SharingParams, lagrange_coefficients, shamir_share
from network.exercise import Exercise, ExerciseOp
from network.messages import MANAGER_ID, PROTOCOL_MESSAGES, Message, MessageType, Outgoing

log = logging.getLogger(__name__)


class MemberState:
    """
    Data store of one party.

    shares:  data-id -> own share (polynomial or additive)
    public:  data-id -> plaintext revealed to this party
    private: name -> local input (e.g. counts from the party's own rows)
    """

    def __init__(self, party_id: PartyId):
        self.party_id = party_id
        self.shares: Dict[str, FieldElement] = {}
        self.public: Dict[str, int] = {}
        self.private: Dict[str, int] = {}

    def bind_share(self, data_id: str, value: FieldElement):
        if data_id in self.shares:
            raise DataStoreError(f"Party {self.party_id}: data-id '{data_id}' is already bound")
        self.shares[data_id] = value

    def bind_public(self, data_id: str, value: int):
        if data_id in self.public:
            raise DataStoreError(f"Party {self.party_id}: public value '{data_id}' is already bound")
        self.public[data_id] = value

    def share(self, data_id: str) -> FieldElement:
        try:
            return self.shares[data_id]
        except KeyError:
            raise DataStoreError(f"Party {self.party_id}: missing input '{data_id}'") from None

    def revealed(self, data_id: str) -> int:
        try:
            return self.public[data_id]
        except KeyError:
            raise DataStoreError(f"Party {self.party_id}: missing public value '{data_id}'") from None

    def private_value(self, name: str) -> int:
        try:
            return self.private[name]
        except KeyError:
            raise DataStoreError(f"Party {self.party_id}: no local input named '{name}'") from None


class _Handler:
    def __init__(self, start: Callable, expected: Callable, finish: Callable):
        self.start = start
        self.expected = expected
        self.finish = finish


class Party:
    def __init__(self, party_id: PartyId, sharing: SharingParams, session_id: int, rng: RandomSource):
        self.party_id = party_id
        self.sharing = sharing
        self.field = sharing.field
        self.session_id = session_id
        self.rng = rng
        self.state = MemberState(party_id)
        self.running = True
        self._exercises: Dict[int, Exercise] = {}
        self._buffer: Dict[int, List[Message]] = defaultdict(list)
        self._scratch: Dict[int, List] = {}
        self._handlers: Dict[ExerciseOp, _Handler] = {}

    @property
    def members(self) -> List[PartyId]:
        return self.sharing.parties

    @property
    def is_member(self) -> bool:
        return self.party_id in self.members

    # ---- message loop ----

    def handle(self, message: Message) -> List[Outgoing]:
        try:
            if message.opcode == MessageType.SHUTDOWN:
                self.running = False
                return []
            if message.opcode == MessageType.EXERCISE:
                exercise = Exercise.from_label(message.exercise_id, message.label)
                return self._begin(exercise)
            if message.opcode in PROTOCOL_MESSAGES:
                self._buffer[message.exercise_id].append(message)
                if message.exercise_id in self._exercises:
                    return self._progress(self._exercises[message.exercise_id])
                return []
            raise ProtocolError(f"Party {self.party_id} cannot handle {message.opcode.name}")
        except (SpnPlatformError, KeyError, TypeError, ValueError) as e:
            log.warning("Party %d rejects exercise %d: %s", self.party_id, message.exercise_id, e)
            self._forget(message.exercise_id)
            return [self._reply(MessageType.NACK, message.exercise_id, f"{type(e).__name__}: {e}")]

    def _begin(self, exercise: Exercise) -> List[Outgoing]:
        handler = self._handlers.get(exercise.opcode)
        if handler is None:
            raise ProtocolError(f"Party {self.party_id} does not support opcode '{exercise.opcode.value}'")
        self._exercises[exercise.exercise_id] = exercise
        outgoing = handler.start(exercise)
        return outgoing + self._progress(exercise)

    def _progress(self, exercise: Exercise) -> List[Outgoing]:
        handler = self._handlers[exercise.opcode]
        received = self._buffer.get(exercise.exercise_id, [])
        expected = handler.expected(exercise)
        if len(received) < expected:
            return []
        if len(received) > expected:
            raise ProtocolError(
                f"Party {self.party_id} got {len(received)} messages for exercise "
                f"{exercise.exercise_id}, expected {expected}"
            )
        senders = [m.sender for m in received]
        if len(set(senders)) != len(senders):
            raise ProtocolError(f"Duplicate sender in exercise {exercise.exercise_id}: {senders}")
        handler.finish(exercise, sorted(received, key=lambda m: m.sender))
        self._forget(exercise.exercise_id)
        return [self._reply(MessageType.FINISHED, exercise.exercise_id)]

    def _forget(self, exercise_id: int):
        self._exercises.pop(exercise_id, None)
        self._buffer.pop(exercise_id, None)
        self._scratch.pop(exercise_id, None)

    def _reply(self, opcode: MessageType, exercise_id: int, label: str = "") -> Outgoing:
        return Outgoing(MANAGER_ID, Message(opcode, exercise_id, self.session_id, self.party_id, label))

    def _send(self, recipient: PartyId, opcode: MessageType, exercise: Exercise,
              payload: Sequence[FieldElement]) -> Outgoing:
        label = exercise.results[0] if exercise.results else ""
        return Outgoing(recipient, Message(opcode, exercise.exercise_id, self.session_id, self.party_id,
                                           label, tuple(v.value for v in payload)))

    def _payload(self, message: Message, expected: int) -> List[FieldElement]:
        if len(message.payload) != expected:
            raise ProtocolError(
                f"Party {message.sender} sent {len(message.payload)} elements, expected {expected}"
            )
        return [FieldElement(v, self.field) for v in message.payload]

    @staticmethod
    def _nothing(exercise: Exercise) -> int:
        return 0

    # ---- distributing fresh Shamir shares (INPUT, SQ2PQ, MASK, RANDOM, RESHARE_MOD) ----

    def _distribute(self, exercise: Exercise, opcode: MessageType,
                    secrets_: Sequence[FieldElement]) -> List[Outgoing]:
        """Shamir-shares each secret; keeps the own share (if a member) as scratch."""
        per_party: Dict[PartyId, List[FieldElement]] = {pid: [] for pid in self.members}
        for secret in secrets_:
            for share in shamir_share(secret, self.sharing, self.rng):
                per_party[share.owner].append(share.value)
        if self.is_member:
            self._scratch[exercise.exercise_id] = per_party[self.party_id]
        return [self._send(pid, opcode, exercise, values)
                for pid, values in per_party.items() if pid != self.party_id]

    def _sum_received(self, exercise: Exercise, received: List[Message], count: int) -> List[FieldElement]:
        totals = list(self._scratch.get(exercise.exercise_id, [self.field.zero] * count))
        for message in received:
            for k, value in enumerate(self._payload(message, count)):
                totals[k] = totals[k] + value
        return totals

    def _bind_all(self, data_ids: Sequence[str], values: Sequence[FieldElement]):
        for data_id, value in zip(data_ids, values):
            self.state.bind_share(data_id, value)

    # INPUT: owners Shamir-share local inputs; members store the sum over owners.

    def _start_input(self, exercise: Exercise) -> List[Outgoing]:
        owners = exercise.args["owners"]
        if self.party_id not in owners:
            return []
        secrets_ = [self.field.element(self.state.private_value(name)) for name in exercise.args["names"]]
        return self._distribute(exercise, MessageType.SHARE_DIST, secrets_)

    def _expected_input(self, exercise: Exercise) -> int:
        if not self.is_member:
            return 0
        return sum(1 for owner in exercise.args["owners"] if owner != self.party_id)

    def _finish_input(self, exercise: Exercise, received: List[Message]):
        if self.is_member:
            self._bind_all(exercise.results, self._sum_received(exercise, received, len(exercise.results)))

    # SQ2PQ: every member re-shares its additive share; the sum is a polynomial share.

    def _start_sq2pq(self, exercise: Exercise) -> List[Outgoing]:
        secrets_ = [self.state.share(data_id) for data_id in exercise.args["sources"]]
        return self._distribute(exercise, MessageType.SHARE_DIST, secrets_)

    def _expected_all_others(self, exercise: Exercise) -> int:
        return len(self.members) - 1

    def _finish_sq2pq(self, exercise: Exercise, received: List[Message]):
        self._bind_all(exercise.results, self._sum_received(exercise, received, len(exercise.results)))

    # MASK / RANDOM / RESHARE_MOD: a single dealer shares values only it knows.

    def _dealt_by(self, exercise: Exercise) -> PartyId:
        return exercise.args["dealer"]

    def _expected_from_dealer(self, exercise: Exercise) -> int:
        return 0 if self._dealt_by(exercise) == self.party_id else 1

    def _finish_dealt(self, exercise: Exercise, received: List[Message]):
        for message in received:
            if message.sender != self._dealt_by(exercise):
                raise ProtocolError(f"Unexpected dealer {message.sender} for exercise {exercise.exercise_id}")
        self._bind_all(exercise.results, self._sum_received(exercise, received, len(exercise.results)))

    def _start_mask(self, exercise: Exercise) -> List[Outgoing]:
        if self._dealt_by(exercise) != self.party_id:
            return []
        pairs = [alice_mask(exercise.args["modulus"], exercise.args["rho"], self.rng)
                 for _ in range(exercise.args["count"])]
        masks = [r for r, _ in pairs]
        remainders = [q for _, q in pairs]
        return self._distribute(exercise, MessageType.SHARE_DIST,
                                [self.field.element(v) for v in masks + remainders])

    def _start_random(self, exercise: Exercise) -> List[Outgoing]:
        if self._dealt_by(exercise) != self.party_id:
            return []
        values = [sample_nonzero(self.field, self.rng) for _ in range(exercise.args["count"])]
        return self._distribute(exercise, MessageType.SHARE_DIST, values)

    def _start_reshare_mod(self, exercise: Exercise) -> List[Outgoing]:
        if self._dealt_by(exercise) != self.party_id:
            return []
        modulus = exercise.args["modulus"]
        remainders = [bob_remainder(self.state.revealed(data_id), modulus) for data_id in exercise.args["sources"]]
        return self._distribute(exercise, MessageType.SHARE_DIST, [self.field.element(v) for v in remainders])

    # MUL: local products (degree 2t), reshared with degree t and recombined.

    def _start_mul(self, exercise: Exercise) -> List[Outgoing]:
        products = []
        for terms in exercise.args["terms"]:
            total = self.field.zero
            for left, right in terms:
                total = total + self.state.share(left) * self.state.share(right)
            products.append(total)
        return self._distribute(exercise, MessageType.MUL_RESHARE, products)

    def _finish_mul(self, exercise: Exercise, received: List[Message]):
        count = len(exercise.results)
        sub_shares = {self.party_id: self._scratch[exercise.exercise_id]}
        for message in received:
            sub_shares[message.sender] = self._payload(message, count)
        points = sorted(sub_shares)
        coefficients = lagrange_coefficients(points, self.field)
        outputs = [self.field.zero] * count
        for coefficient, point in zip(coefficients, points):
            for k, value in enumerate(sub_shares[point]):
                outputs[k] = outputs[k] + coefficient * value
        self._bind_all(exercise.results, outputs)

    # REVEAL: non-target parties send their shares to the target only.

    def _start_reveal(self, exercise: Exercise) -> List[Outgoing]:
        if not self.is_member:
            return []
        own = [self.state.share(data_id) for data_id in exercise.args["sources"]]
        if exercise.args["target"] == self.party_id:
            self._scratch[exercise.exercise_id] = own
            return []
        return [self._send(exercise.args["target"], MessageType.REVEAL_TO, exercise, own)]

    def _expected_reveal(self, exercise: Exercise) -> int:
        if exercise.args["target"] != self.party_id:
            return 0
        return len(self.members) - 1 if self.is_member else len(self.members)

    def _finish_reveal(self, exercise: Exercise, received: List[Message]):
        if exercise.args["target"] != self.party_id:
            return
        count = len(exercise.results)
        collected = {m.sender: self._payload(m, count) for m in received}
        if self.is_member:
            collected[self.party_id] = self._scratch[exercise.exercise_id]
        plain = open_shares(collected, exercise.args.get("scheme", "shamir"), self.sharing)
        for data_id, value in zip(exercise.results, plain):
            self.state.bind_public(data_id, value)


class Member(Party):
    """A task-executing server holding one share of every secret."""

    def __init__(self, party_id: PartyId, sharing: SharingParams, session_id: int, rng: RandomSource):
        super().__init__(party_id, sharing, session_id, rng)
        if party_id not in sharing.parties:
            raise ProtocolError(f"Member id {party_id} is outside [1, {sharing.n}]")
        h = _Handler
        self._handlers = {
            ExerciseOp.ADD: h(self._local(self._add), self._nothing, self._done),
            ExerciseOp.LINEAR: h(self._local(self._linear), self._nothing, self._done),
            ExerciseOp.PUBLIC: h(self._local(self._public), self._nothing, self._done),
            ExerciseOp.APPROX_FRACTION: h(self._local(self._approx_fraction), self._nothing, self._done),
            ExerciseOp.INPUT: h(self._start_input, self._expected_input, self._finish_input),
            ExerciseOp.SQ2PQ: h(self._start_sq2pq, self._expected_all_others, self._finish_sq2pq),
            ExerciseOp.MUL: h(self._start_mul, self._expected_all_others, self._finish_mul),
            ExerciseOp.MASK: h(self._start_mask, self._expected_from_dealer, self._finish_dealt),
            ExerciseOp.RANDOM: h(self._start_random, self._expected_from_dealer, self._finish_dealt),
            ExerciseOp.RESHARE_MOD: h(self._start_reshare_mod, self._expected_from_dealer, self._finish_dealt),
            ExerciseOp.REVEAL: h(self._start_reveal, self._expected_reveal, self._finish_reveal),
            ExerciseOp.JRSZ: h(self._no_start, self._expected_deal, self._finish_jrsz),
        }

    @staticmethod
    def _local(operation: Callable[[Exercise], None]) -> Callable[[Exercise], List[Outgoing]]:
        def start(exercise: Exercise) -> List[Outgoing]:
            operation(exercise)
            return []
        return start

    @staticmethod
    def _done(exercise: Exercise, received: List[Message]):
        pass

    @staticmethod
    def _no_start(exercise: Exercise) -> List[Outgoing]:
        return []

    def _add(self, exercise: Exercise):
        left, right = exercise.args["left"], exercise.args["right"]
        self._bind_all(exercise.results, [self.state.share(a) + self.state.share(b) for a, b in zip(left, right)])

    def _linear(self, exercise: Exercise):
        """out_k = c_k + sum coef * [x]; constants enter every share (polynomial shares only)."""
        outputs = []
        for terms, constant in zip(exercise.args["terms"], exercise.args["constants"]):
            total = self.field.element(constant)
            for coefficient, data_id in terms:
                total = total + self.state.share(data_id) * coefficient
            outputs.append(total)
        self._bind_all(exercise.results, outputs)

    def _public(self, exercise: Exercise):
        self._bind_all(exercise.results, [self.field.element(v) for v in exercise.args["values"]])

    def _approx_fraction(self, exercise: Exercise):
        """F = round(d * num / (den * N)), masked with the party's share of zero."""
        scale, parties = exercise.args["scale"], exercise.args["parties"]
        outputs = []
        for num_name, den_name, mask in zip(exercise.args["nums"], exercise.args["dens"], exercise.args["masks"]):
            numerator = self.state.private_value(num_name)
            denominator = self.state.private_value(den_name)
            if denominator == 0:
                raise DegenerateModelError(
                    f"Party {self.party_id} has no rows reaching '{den_name}'; "
                    f"the averaged-fraction protocol cannot skip parties"
                )
            fraction = local_fraction(numerator, denominator, scale, parties)
            outputs.append(self.state.share(mask) + fraction)
        self._bind_all(exercise.results, outputs)

    def _expected_deal(self, exercise: Exercise) -> int:
        return 1

    def _finish_jrsz(self, exercise: Exercise, received: List[Message]):
        message = received[0]
        if message.sender != MANAGER_ID:
            raise ProtocolError(f"Zero shares must come from the manager, not party {message.sender}")
        self._bind_all(exercise.results, self._payload(message, len(exercise.results)))


class Client(Party):
    """
    Inference client: provides leaf configurations and receives root values.
    It is not a Shamir evaluation point.
    """

    def __init__(self, party_id: PartyId, sharing: SharingParams, session_id: int, rng: RandomSource):
        super().__init__(party_id, sharing, session_id, rng)
        if party_id in sharing.parties or party_id == MANAGER_ID:
            raise ProtocolError(f"Client id {party_id} collides with a member or the manager")
        self._handlers = {
            ExerciseOp.INPUT: _Handler(self._start_input, self._expected_input, self._finish_input),
            ExerciseOp.REVEAL: _Handler(self._start_reveal, self._expected_reveal, self._finish_reveal),
        }


def open_shares(collected: Dict[PartyId, List[FieldElement]], scheme: str,
                sharing: SharingParams) -> List[int]:
    """Plaintexts from one vector of shares per party."""
    owners = sorted(collected)
    count = len(collected[owners[0]]) if owners else 0
    if scheme == "additive":
        if len(owners) != sharing.n:
            raise ProtocolError(f"Additive reconstruction needs all {sharing.n} shares, got {len(owners)}")
        coefficients = [sharing.field.one] * len(owners)
    elif scheme == "shamir":
        if len(owners) < sharing.t + 1:
            raise ProtocolError(f"Need {sharing.t + 1} shares to reconstruct, got {len(owners)}")
        coefficients = lagrange_coefficients(owners, sharing.field)
    else:
        raise ProtocolError(f"Unknown sharing scheme '{scheme}'")
    plain = []
    for k in range(count):
        total = sharing.field.zero
        for coefficient, owner in zip(coefficients, owners):
            total = total + coefficient * collected[owner][k]
        plain.append(total.value)
    return plain
