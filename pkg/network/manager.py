import logging
import time
from collections import deque
from typing import Deque, Dict, Iterable, List, Optional, Sequence

from api.errors import DegenerateModelError, ProtocolError, SchedulingError, SessionTimeout
from mpc.field import FieldElement, RandomSource, secure_rng
from mpc.sharing import PartyId, SharingParams, jrsz
from network.exercise import Exercise, ExerciseOp
from network.member import open_shares
from network.messages import MANAGER_ID, Message, MessageType
from network.transport import Transport

log = logging.getLogger(__name__)


class ZeroDealer:
    """Deals additive shares of zero to the members (the manager never receives one)."""

    def __init__(self, rng: Optional[RandomSource] = None):
        self.rng = rng or secure_rng()

    def deal(self, sharing: SharingParams, count: int) -> Dict[PartyId, List[FieldElement]]:
        dealt: Dict[PartyId, List[FieldElement]] = {pid: [] for pid in sharing.parties}
        for _ in range(count):
            for pid, share in jrsz(sharing, MANAGER_ID, self.rng).items():
                dealt[pid].append(share.value)
        return dealt


class FixedZeroDealer(ZeroDealer):
    """Replays given zero sharings, one list of per-member values per call."""

    def __init__(self, sharings: Iterable[Sequence[int]]):
        super().__init__()
        self._pending: Deque[Sequence[int]] = deque(sharings)

    def deal(self, sharing: SharingParams, count: int) -> Dict[PartyId, List[FieldElement]]:
        dealt: Dict[PartyId, List[FieldElement]] = {pid: [] for pid in sharing.parties}
        for _ in range(count):
            if not self._pending:
                raise ProtocolError("Fixed zero dealer ran out of sharings")
            values = self._pending.popleft()
            if len(values) != sharing.n:
                raise ProtocolError(f"Zero sharing has {len(values)} values for {sharing.n} members")
            if sum(values) % sharing.field.p:
                raise ProtocolError(f"Values {list(values)} do not share zero modulo {sharing.field.p}")
            for pid, value in zip(sharing.parties, values):
                dealt[pid].append(sharing.field.element(value))
        return dealt


class Manager:
    """
    Schedules exercises and dispatches them one at a time: the next exercise
    is sent only after every participant reported FINISHED for the previous one.
    """

    def __init__(self, transport: Transport, sharing: SharingParams, session_id: int = 1,
                 dealer: Optional[ZeroDealer] = None, timeout: float = 30.0,
                 client_id: Optional[PartyId] = None):
        self.transport = transport
        self.sharing = sharing
        self.session_id = session_id
        self.dealer = dealer or ZeroDealer()
        self.timeout = timeout
        self.client_id = client_id
        self.revealed: Dict[str, int] = {}
        self.completed = 0
        self._queue: Deque[Exercise] = deque()
        self._next_id = 1
        self._result_ids = set()

    @property
    def members(self) -> List[PartyId]:
        return self.sharing.parties

    def schedule_exercise(self, opcode: ExerciseOp, args: Optional[Dict] = None,
                          results: Sequence[str] = ()) -> Exercise:
        results = list(results)
        if len(set(results)) != len(results):
            raise SchedulingError(f"Duplicate result ids within one {opcode.value} exercise")
        clash = self._result_ids.intersection(results)
        if clash:
            raise SchedulingError(f"Result id(s) already scheduled: {sorted(clash)}")
        exercise = Exercise(self._next_id, opcode, dict(args or {}), results)
        self._next_id += 1
        self._result_ids.update(results)
        self._queue.append(exercise)
        return exercise

    def pending(self) -> int:
        return len(self._queue)

    def run_pending(self):
        started = time.perf_counter()
        try:
            while self._queue:
                self._run(self._queue.popleft())
        finally:
            self.transport.counters.add_time(time.perf_counter() - started)

    def participants(self, exercise: Exercise) -> List[PartyId]:
        parties = list(self.members)
        if self.client_id is not None and self._involves_client(exercise):
            parties.append(self.client_id)
        return parties

    def _involves_client(self, exercise: Exercise) -> bool:
        if exercise.opcode == ExerciseOp.INPUT:
            return self.client_id in exercise.args.get("owners", ())
        if exercise.opcode == ExerciseOp.REVEAL:
            return exercise.args.get("target") == self.client_id
        return False

    def _run(self, exercise: Exercise):
        participants = self.participants(exercise)
        log.debug("Dispatching %r to %s", exercise, participants)
        label = exercise.to_label()
        for pid in participants:
            self.transport.send(pid, Message(MessageType.EXERCISE, exercise.exercise_id, self.session_id,
                                             MANAGER_ID, label))
        if exercise.opcode == ExerciseOp.JRSZ:
            self._deal_zero(exercise)

        reveals_expected = len(self.members) if self._reveals_to_manager(exercise) else 0
        finished = set()
        shares: Dict[PartyId, List[FieldElement]] = {}
        while len(finished) < len(participants) or len(shares) < reveals_expected:
            message = self.transport.recv(self.timeout)
            if message is None:
                raise SessionTimeout(
                    f"No progress on {exercise!r} after {self.timeout}s; "
                    f"finished: {sorted(finished)}"
                )
            if message.exercise_id != exercise.exercise_id:
                raise ProtocolError(
                    f"Message for exercise {message.exercise_id} while running {exercise.exercise_id}"
                )
            if message.opcode == MessageType.NACK:
                log.error("Party %d aborted %r: %s", message.sender, exercise, message.label)
                error = DegenerateModelError if message.label.startswith(DegenerateModelError.__name__) \
                    else ProtocolError
                raise error(f"Party {message.sender} failed {exercise!r}: {message.label}")
            if message.opcode == MessageType.FINISHED:
                finished.add(message.sender)
            elif message.opcode == MessageType.REVEAL_TO and reveals_expected:
                shares[message.sender] = [FieldElement(v, self.sharing.field) for v in message.payload]
            else:
                raise ProtocolError(f"Unexpected {message.opcode.name} from party {message.sender}")

        if reveals_expected:
            scheme = exercise.args.get("scheme", "shamir")
            for data_id, value in zip(exercise.results, open_shares(shares, scheme, self.sharing)):
                self.revealed[data_id] = value
        self.completed += 1

    def _reveals_to_manager(self, exercise: Exercise) -> bool:
        return exercise.opcode == ExerciseOp.REVEAL and exercise.args.get("target") == MANAGER_ID

    def _deal_zero(self, exercise: Exercise):
        dealt = self.dealer.deal(self.sharing, len(exercise.results))
        for pid, values in dealt.items():
            self.transport.send(pid, Message(MessageType.JRSZ_DEAL, exercise.exercise_id, self.session_id,
                                             MANAGER_ID, exercise.results[0] if exercise.results else "",
                                             tuple(v.value for v in values)))

    def shutdown(self, parties: Iterable[PartyId]):
        for pid in parties:
            self.transport.send(pid, Message(MessageType.SHUTDOWN, 0, self.session_id, MANAGER_ID))
        log.info("Session %d closed after %d exercises, %r", self.session_id, self.completed,
                 self.transport.counters)
