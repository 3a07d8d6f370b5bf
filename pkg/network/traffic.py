import threading
from typing import Dict, Tuple

from network.messages import MessageType


class TrafficCounters:
    """
    Message and byte totals with a per-opcode breakdown.

    Counters only grow during a run; `snapshot()` and subtraction give the
    traffic of a single plan.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self.messages_sent = 0
        self.bytes_sent = 0
        self.wall_time = 0.0
        self.per_opcode: Dict[str, Tuple[int, int]] = {}

    def record(self, opcode: MessageType, size: int):
        with self._lock:
            self.messages_sent += 1
            self.bytes_sent += size
            messages, total = self.per_opcode.get(opcode.name, (0, 0))
            self.per_opcode[opcode.name] = (messages + 1, total + size)

    def add_time(self, seconds: float):
        with self._lock:
            self.wall_time += seconds

    def messages(self, opcode: MessageType) -> int:
        return self.per_opcode.get(opcode.name, (0, 0))[0]

    def bytes(self, opcode: MessageType) -> int:
        return self.per_opcode.get(opcode.name, (0, 0))[1]

    def snapshot(self) -> 'TrafficCounters':
        copy = TrafficCounters()
        with self._lock:
            copy.messages_sent = self.messages_sent
            copy.bytes_sent = self.bytes_sent
            copy.wall_time = self.wall_time
            copy.per_opcode = dict(self.per_opcode)
        return copy

    def __sub__(self, other: 'TrafficCounters') -> 'TrafficCounters':
        delta = TrafficCounters()
        delta.messages_sent = self.messages_sent - other.messages_sent
        delta.bytes_sent = self.bytes_sent - other.bytes_sent
        delta.wall_time = self.wall_time - other.wall_time
        for name, (messages, total) in self.per_opcode.items():
            before = other.per_opcode.get(name, (0, 0))
            if messages - before[0]:
                delta.per_opcode[name] = (messages - before[0], total - before[1])
        return delta

    def to_dict(self) -> Dict:
        return {
            "messages": self.messages_sent,
            "bytes": self.bytes_sent,
            "wall_time": round(self.wall_time, 6),
            "per_opcode": {name: {"messages": m, "bytes": b}
                           for name, (m, b) in sorted(self.per_opcode.items())},
        }

    def __repr__(self):
        return f"TrafficCounters(messages={self.messages_sent}, bytes={self.bytes_sent}, wall_time={self.wall_time:.3f}s)"
