import logging
from typing import Dict, Iterable, Optional, Tuple

from api.errors import ConfigurationError
from mpc.field import make_rng, secure_rng
from mpc.sharing import PartyId, SharingParams
from network.exercise import Exercise
from network.manager import Manager, ZeroDealer
from network.member import Client, Member, Party
from network.traffic import TrafficCounters
from network.transport import TransportConfig, build_transport

log = logging.getLogger(__name__)


class Session:
    """
    One manager, n members and (optionally) the inference client, wired to a
    transport. Use as a context manager: entering starts the transport,
    leaving shuts the parties down.

    With a seed every party draws from its own deterministic stream, so two
    runs of the same plan produce identical stores on either transport.
    """

    def __init__(self, sharing: SharingParams, transport: Optional[TransportConfig] = None,
                 seed: Optional[int] = None, session_id: int = 1, dealer: Optional[ZeroDealer] = None,
                 timeout: float = 30.0, with_client: bool = True):
        if session_id < 0:
            raise ConfigurationError(f"Session id must be non-negative, got {session_id}")
        self.sharing = sharing
        self.seed = seed
        self.session_id = session_id
        self.transport_config = transport or TransportConfig()
        self.members: Dict[PartyId, Member] = {
            pid: Member(pid, sharing, session_id, self._rng(f"member-{pid}")) for pid in sharing.parties
        }
        self.client: Optional[Client] = None
        if with_client:
            client_id = sharing.n + 1
            self.client = Client(client_id, sharing, session_id, self._rng(f"client-{client_id}"))
        self.transport = build_transport(self.transport_config)
        if dealer is None:
            dealer = ZeroDealer(self._rng("dealer"))
        self.manager = Manager(self.transport, sharing, session_id, dealer, timeout,
                               client_id=self.client.party_id if self.client else None)
        self._open = False

    def _rng(self, label: str):
        return secure_rng() if self.seed is None else make_rng(self.seed, label)

    @property
    def parties(self) -> Dict[PartyId, Party]:
        parties: Dict[PartyId, Party] = dict(self.members)
        if self.client is not None:
            parties[self.client.party_id] = self.client
        return parties

    @property
    def counters(self) -> TrafficCounters:
        return self.transport.counters

    def startup(self):
        if not self._open:
            self.transport.start(self.parties)
            self._open = True
            log.info("Session %d started: n=%d, t=%d, transport=%s", self.session_id,
                     self.sharing.n, self.sharing.t, self.transport_config.mode)

    def shutdown(self):
        if self._open:
            self.manager.shutdown(self.parties)
            self.transport.close()
            self._open = False

    def __enter__(self) -> 'Session':
        self.startup()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.shutdown()

    def store(self, party_id: PartyId):
        return self.parties[party_id].state


def run_session(session: Session, plan: Iterable[Exercise]) -> Tuple[TrafficCounters, Dict[str, int]]:
    """
    Runs a plan of exercises to completion.

    Exercise ids in the plan are ignored; the manager numbers them. Returns
    the traffic of the plan and the values revealed to the manager.
    """
    before = session.counters.snapshot()
    for exercise in plan:
        session.manager.schedule_exercise(exercise.opcode, exercise.args, exercise.results)
    session.manager.run_pending()
    return session.counters.snapshot() - before, dict(session.manager.revealed)
