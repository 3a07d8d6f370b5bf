import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List

from api.errors import ProtocolError


class ExerciseOp(str, Enum):
    # local
    ADD = "add"
    LINEAR = "linear"
    PUBLIC = "public"
    APPROX_FRACTION = "approx_fraction"
    # interactive
    INPUT = "input"
    SQ2PQ = "sq2pq"
    MUL = "mul"
    MASK = "mask"
    RANDOM = "random"
    REVEAL = "reveal"
    RESHARE_MOD = "reshare_mod"
    JRSZ = "jrsz"


@dataclass
class Exercise:
    """
    One scheduled step of the manager's queue.

    Exercises are vectorised: `results` lists one data-id per output and
    `args` carries the matching input data-ids and public constants.
    """

    exercise_id: int
    opcode: ExerciseOp
    args: Dict[str, Any] = field(default_factory=dict)
    results: List[str] = field(default_factory=list)

    def to_label(self) -> str:
        return json.dumps({"op": self.opcode.value, "args": self.args, "results": self.results},
                          separators=(",", ":"), sort_keys=True)

    @classmethod
    def from_label(cls, exercise_id: int, label: str) -> 'Exercise':
        try:
            data = json.loads(label)
            return cls(exercise_id, ExerciseOp(data["op"]), data.get("args", {}), data.get("results", []))
        except (ValueError, KeyError, TypeError) as e:
            raise ProtocolError(f"Malformed exercise {exercise_id}: {e}") from e

    def __repr__(self):
        return f"Exercise(id={self.exercise_id}, op={self.opcode.value}, outputs={len(self.results)})"
