from enum import Enum
from typing import Optional


class NodeKind(str, Enum):
    SUM = "sum"
    PRODUCT = "product"
    LEAF = "leaf"


class SpnNode:
    """
    A node of a sum-product network. Leaves are indicators of one variable,
    X_var (negated=False) or its complement (negated=True).
    """

    def __init__(self, node_id: str, kind: NodeKind, var: Optional[int] = None, negated: bool = False):
        self.id = node_id
        self.kind = NodeKind(kind)
        self.var = var
        self.negated = negated

    @property
    def is_leaf(self) -> bool:
        return self.kind == NodeKind.LEAF

    def __eq__(self, other):
        return (isinstance(other, SpnNode) and self.id == other.id and self.kind == other.kind
                and self.var == other.var and self.negated == other.negated)

    def __hash__(self):
        return hash(self.id)

    def __repr__(self):
        if self.is_leaf:
            return f"SpnNode(id={self.id}, leaf {'not ' if self.negated else ''}X{self.var + 1})"
        return f"SpnNode(id={self.id}, kind={self.kind.value})"
