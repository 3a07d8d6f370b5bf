import re
from typing import Dict, Mapping, Optional, Tuple

from api.errors import ConfigurationError, StructureParseError

LeafKey = Tuple[int, bool]

_TERM = re.compile(r"^\s*X(\d+)\s*=\s*([01])\s*$")


def parse_assignment(text: Optional[str]) -> Dict[int, int]:
    """"X1=1,X3=0" -> {0: 1, 2: 0}; variable names are 1-based."""
    assignment: Dict[int, int] = {}
    if not text or not text.strip():
        return assignment
    for term in text.split(","):
        match = _TERM.match(term)
        if not match:
            raise StructureParseError(f"Malformed query term '{term.strip()}', expected Xi=0 or Xi=1")
        var, value = int(match.group(1)) - 1, int(match.group(2))
        if var < 0:
            raise StructureParseError(f"Variables are numbered from X1, got '{term.strip()}'")
        if assignment.get(var, value) != value:
            raise ConfigurationError(f"X{var + 1} is assigned both 0 and 1")
        assignment[var] = value
    return assignment


def format_assignment(assignment: Mapping[int, int]) -> str:
    return ",".join(f"X{var + 1}={value}" for var, value in sorted(assignment.items()))


def build_leaf_configuration(assignment: Mapping[int, int], num_vars: int, scale: int) -> Dict[LeafKey, int]:
    """
    Indicator values at fixed-point scale: an assigned variable sets its
    matching indicator to scale and the other to 0; unassigned variables are
    marginalised with both indicators at scale.
    """
    for var in assignment:
        if not 0 <= var < num_vars:
            raise ConfigurationError(f"X{var + 1} is not a variable of a {num_vars}-variable network")
    values: Dict[LeafKey, int] = {}
    for var in range(num_vars):
        value = assignment.get(var)
        values[(var, False)] = scale if value in (None, 1) else 0
        values[(var, True)] = scale if value in (None, 0) else 0
    return values


class EvidenceQuery:
    """Pr(x | e) for partial assignments x (query) and e (evidence)."""

    def __init__(self, x: Mapping[int, int], e: Optional[Mapping[int, int]] = None):
        self.x = dict(x)
        self.e = dict(e or {})
        for var in set(self.x) & set(self.e):
            if self.x[var] != self.e[var]:
                raise ConfigurationError(
                    f"X{var + 1} is {self.x[var]} in the query but {self.e[var]} in the evidence"
                )

    @classmethod
    def parse(cls, query: Optional[str], evidence: Optional[str] = None) -> 'EvidenceQuery':
        return cls(parse_assignment(query), parse_assignment(evidence))

    @property
    def joint(self) -> Dict[int, int]:
        return {**self.e, **self.x}

    def configurations(self, num_vars: int, scale: int) -> Tuple[Dict[LeafKey, int], Dict[LeafKey, int]]:
        """Leaf values for S(xe) and S(e)."""
        return (build_leaf_configuration(self.joint, num_vars, scale),
                build_leaf_configuration(self.e, num_vars, scale))

    def __repr__(self):
        return f"EvidenceQuery(x={format_assignment(self.x)!r}, e={format_assignment(self.e)!r})"
