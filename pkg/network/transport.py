"""
Transports move encoded frames between the manager (id 0), the members and
the client. Both deliver every frame in the order its sender produced it and
count it in the shared TrafficCounters when it is sent.
"""

import logging
import threading
import time
from abc import ABC, abstractmethod
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Dict, List, Mapping, Optional, Tuple

import zmq

from api.errors import ConfigurationError, ConnectivityError, SpnPlatformError
from network.member import Party
from network.messages import MANAGER_ID, Message, Outgoing, decode, encode
from network.traffic import TrafficCounters

log = logging.getLogger(__name__)

IN_PROCESS = "in-process"
SOCKET = "socket"
DEFAULT_BASE_PORT = 47100


@dataclass(frozen=True)
class TransportConfig:
    mode: str = IN_PROCESS
    latency: float = 0.0
    endpoints: Mapping[int, str] = field(default_factory=dict)
    base_port: int = DEFAULT_BASE_PORT

    def __post_init__(self):
        if self.mode not in (IN_PROCESS, SOCKET):
            raise ConfigurationError(f"Unknown transport mode '{self.mode}'")
        if self.latency < 0:
            raise ConfigurationError(f"Latency must be non-negative, got {self.latency}")

    def endpoint(self, party_id: int) -> str:
        if party_id in self.endpoints:
            return self.endpoints[party_id]
        return f"tcp://127.0.0.1:{self.base_port + party_id}"


class Transport(ABC):
    """Manager-side view of the network."""

    def __init__(self, config: TransportConfig):
        self.config = config
        self.counters = TrafficCounters()

    @abstractmethod
    def start(self, parties: Dict[int, Party]):
        ...

    @abstractmethod
    def send(self, recipient: int, message: Message):
        ...

    @abstractmethod
    def recv(self, timeout: float) -> Optional[Message]:
        """Next message addressed to the manager, or None if nothing arrives in time."""

    @abstractmethod
    def close(self):
        ...

    def _frame(self, message: Message) -> bytes:
        frame = encode(message)
        self.counters.record(message.opcode, len(frame))
        return frame


class InProcessTransport(Transport):
    """
    Single-threaded message pump. Frames wait in one global FIFO and are
    handed to the recipient party when the manager asks for its next message;
    each frame is held back by the configured latency.
    """

    def __init__(self, config: TransportConfig):
        super().__init__(config)
        self._parties: Dict[int, Party] = {}
        self._queue: Deque[Tuple[float, int, bytes]] = deque()

    def start(self, parties: Dict[int, Party]):
        self._parties = dict(parties)
        log.debug("In-process transport with %d parties, latency %.3fs", len(parties), self.config.latency)

    def send(self, recipient: int, message: Message):
        self._enqueue(recipient, message)

    def _enqueue(self, recipient: int, message: Message):
        if recipient != MANAGER_ID and recipient not in self._parties:
            raise ConnectivityError(f"No party with id {recipient}")
        self._queue.append((time.monotonic() + self.config.latency, recipient, self._frame(message)))

    def recv(self, timeout: float) -> Optional[Message]:
        deadline = time.monotonic() + timeout
        while self._queue:
            deliver_at, recipient, frame = self._queue.popleft()
            delay = deliver_at - time.monotonic()
            if delay > 0:
                time.sleep(delay)
            message = decode(frame)
            if recipient == MANAGER_ID:
                return message
            party = self._parties[recipient]
            for outgoing in party.handle(message):
                self._enqueue(outgoing.recipient, outgoing.message)
            if time.monotonic() > deadline:
                return None
        return None

    def close(self):
        self._queue.clear()


class SocketTransport(Transport):
    """
    ZeroMQ transport: every party, the manager included, binds a PULL socket
    and holds one PUSH socket per peer. Each party runs its event loop in a
    thread of its own; PUSH/PULL keeps per-pair FIFO order.
    """

    POLL_MS = 50

    def __init__(self, config: TransportConfig):
        super().__init__(config)
        self.context = zmq.Context.instance()
        self._threads: List[threading.Thread] = []
        self._inbox: Optional[zmq.Socket] = None
        self._outboxes: Dict[int, zmq.Socket] = {}
        self._errors: List[BaseException] = []
        self._stopping = threading.Event()

    def _bind(self, party_id: int) -> zmq.Socket:
        socket = self.context.socket(zmq.PULL)
        socket.setsockopt(zmq.LINGER, 0)
        endpoint = self.config.endpoint(party_id)
        try:
            socket.bind(endpoint)
        except zmq.ZMQError as e:
            socket.close()
            raise ConnectivityError(f"Party {party_id} cannot bind {endpoint}: {e}") from e
        return socket

    def _connect_all(self, party_ids) -> Dict[int, zmq.Socket]:
        outboxes = {}
        for party_id in party_ids:
            socket = self.context.socket(zmq.PUSH)
            socket.setsockopt(zmq.LINGER, 1000)
            try:
                socket.connect(self.config.endpoint(party_id))
            except zmq.ZMQError as e:
                socket.close()
                raise ConnectivityError(f"Cannot connect to party {party_id}: {e}") from e
            outboxes[party_id] = socket
        return outboxes

    def start(self, parties: Dict[int, Party]):
        if self.config.latency:
            log.info("Simulated latency is ignored by the socket transport")
        everyone = [MANAGER_ID] + sorted(parties)
        inboxes = {party_id: self._bind(party_id) for party_id in sorted(parties)}
        self._inbox = self._bind(MANAGER_ID)
        self._outboxes = self._connect_all(pid for pid in everyone if pid != MANAGER_ID)
        for party_id, party in sorted(parties.items()):
            thread = threading.Thread(target=self._party_loop,
                                      args=(party, inboxes[party_id], [pid for pid in everyone if pid != party_id]),
                                      name=f"party-{party_id}", daemon=True)
            self._threads.append(thread)
            thread.start()
        log.info("Socket transport started for %d parties", len(parties))

    def _party_loop(self, party: Party, inbox: zmq.Socket, peers: List[int]):
        outboxes = self._connect_all(peers)
        poller = zmq.Poller()
        poller.register(inbox, zmq.POLLIN)
        try:
            while party.running and not self._stopping.is_set():
                if not dict(poller.poll(self.POLL_MS)).get(inbox):
                    continue
                message = decode(inbox.recv())
                for outgoing in party.handle(message):
                    self._push(outboxes, outgoing)
        except (SpnPlatformError, zmq.ZMQError) as e:
            log.error("Party %d stopped: %s", party.party_id, e)
            self._errors.append(e)
        finally:
            for socket in outboxes.values():
                socket.close()
            inbox.close()

    def _push(self, outboxes: Dict[int, zmq.Socket], outgoing: Outgoing):
        socket = outboxes.get(outgoing.recipient)
        if socket is None:
            raise ConnectivityError(f"No route to party {outgoing.recipient}")
        socket.send(self._frame(outgoing.message))

    def send(self, recipient: int, message: Message):
        self._push(self._outboxes, Outgoing(recipient, message))

    def recv(self, timeout: float) -> Optional[Message]:
        deadline = time.monotonic() + timeout
        while True:
            if self._errors:
                raise ConnectivityError(f"A party thread failed: {self._errors[0]}")
            if self._inbox.poll(self.POLL_MS, zmq.POLLIN):
                return decode(self._inbox.recv())
            if time.monotonic() >= deadline:
                return None

    def close(self):
        for thread in self._threads:
            thread.join(timeout=5.0)
        self._stopping.set()
        for thread in self._threads:
            thread.join(timeout=1.0)
        for socket in self._outboxes.values():
            socket.close()
        if self._inbox is not None:
            self._inbox.close()
        self._threads.clear()
        self._outboxes.clear()


def build_transport(config: TransportConfig) -> Transport:
    if config.mode == SOCKET:
        return SocketTransport(config)
    return InProcessTransport(config)
