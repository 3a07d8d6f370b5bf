from typing import Optional


class Edge:
    """Parent -> child link; edges leaving sum nodes carry a weight at scale d."""

    def __init__(self, edge_id: str, source_id: str, target_id: str, weight: Optional[int] = None):
        self.id = edge_id
        self.source = source_id
        self.target = target_id
        self.weight = weight

    def with_weight(self, weight: Optional[int]) -> 'Edge':
        return Edge(self.id, self.source, self.target, weight)

    def __eq__(self, other):
        return (isinstance(other, Edge) and self.id == other.id and self.source == other.source
                and self.target == other.target and self.weight == other.weight)

    def __hash__(self):
        return hash(self.id)

    def __repr__(self):
        weight = "" if self.weight is None else f", weight={self.weight}"
        return f"Edge(id={self.id}, {self.source}->{self.target}{weight})"
