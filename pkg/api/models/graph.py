from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional

from api.errors import StructureParseError, StructureValidationError
from api.models.edge import Edge
from api.models.node import NodeKind, SpnNode


@dataclass(frozen=True)
class Violation:
    node: str
    property: str
    detail: str = ""

    def __str__(self):
        text = f"{self.property} violated at '{self.node}'"
        return f"{text}: {self.detail}" if self.detail else text


class SpnGraph:
    """
    Sum-product network over binary variables X1..Xn (indexed from 0).

    Children keep the order in which their edges were added; evaluation and
    product folding follow that order. `scale` is the fixed-point factor of
    the sum-edge weights, or None for an unweighted topology.
    """

    def __init__(self, root: str, num_vars: int, scale: Optional[int] = None):
        self.root = root
        self.num_vars = num_vars
        self.scale = scale
        self.nodes: Dict[str, SpnNode] = {}
        self.edges: Dict[str, Edge] = {}
        self._children: Dict[str, List[Edge]] = {}

    def add_node(self, node: SpnNode):
        if node.id in self.nodes:
            raise StructureParseError(f"Duplicate node id '{node.id}'")
        if node.is_leaf and (node.var is None or not 0 <= node.var < self.num_vars):
            raise StructureParseError(f"Leaf '{node.id}' has variable {node.var} outside 0..{self.num_vars - 1}")
        self.nodes[node.id] = node
        self._children[node.id] = []

    def add_edge(self, edge: Edge):
        if edge.id in self.edges:
            raise StructureParseError(f"Duplicate edge id '{edge.id}'")
        if edge.source not in self.nodes:
            raise StructureParseError(f"Edge '{edge.id}': source node '{edge.source}' does not exist")
        if edge.target not in self.nodes:
            raise StructureParseError(f"Edge '{edge.id}': target node '{edge.target}' does not exist")
        if self.nodes[edge.source].is_leaf:
            raise StructureParseError(f"Edge '{edge.id}' leaves the leaf '{edge.source}'")
        self.edges[edge.id] = edge
        self._children[edge.source].append(edge)

    def get_node(self, node_id: str) -> SpnNode:
        return self.nodes.get(node_id)

    def out_edges(self, node_id: str) -> List[Edge]:
        return list(self._children[node_id])

    def children(self, node_id: str) -> List[str]:
        return [edge.target for edge in self._children[node_id]]

    def nodes_of(self, kind: NodeKind) -> List[SpnNode]:
        return [node for node in self.nodes.values() if node.kind == kind]

    def sum_nodes(self) -> List[SpnNode]:
        return self.nodes_of(NodeKind.SUM)

    def product_nodes(self) -> List[SpnNode]:
        return self.nodes_of(NodeKind.PRODUCT)

    def leaves(self) -> List[SpnNode]:
        return self.nodes_of(NodeKind.LEAF)

    def sum_edges(self) -> List[Edge]:
        return [edge for node in self.sum_nodes() for edge in self._children[node.id]]

    def weight(self, edge_id: str) -> Optional[int]:
        return self.edges[edge_id].weight

    def topological_order(self) -> List[str]:
        """Nodes reachable from the root, children before parents."""
        if self.root not in self.nodes:
            raise StructureValidationError([Violation(self.root, "rooted", "root node does not exist")])
        order: List[str] = []
        state: Dict[str, int] = {}
        stack = [(self.root, False)]
        while stack:
            node_id, expanded = stack.pop()
            if expanded:
                state[node_id] = 2
                order.append(node_id)
                continue
            if state.get(node_id) == 2:
                continue
            if state.get(node_id) == 1:
                raise StructureValidationError([Violation(node_id, "acyclic", "node lies on a cycle")])
            state[node_id] = 1
            stack.append((node_id, True))
            for child in reversed(self.children(node_id)):
                if state.get(child) == 1:
                    raise StructureValidationError([Violation(child, "acyclic", "node lies on a cycle")])
                if state.get(child) != 2:
                    stack.append((child, False))
        return order

    def unreachable(self) -> List[str]:
        reachable = set(self.topological_order())
        return [node_id for node_id in self.nodes if node_id not in reachable]

    def scopes(self) -> Dict[str, FrozenSet[int]]:
        scopes: Dict[str, FrozenSet[int]] = {}
        for node_id in self.topological_order():
            node = self.nodes[node_id]
            if node.is_leaf:
                scopes[node_id] = frozenset({node.var})
            else:
                scopes[node_id] = frozenset().union(*(scopes[c] for c in self.children(node_id)))
        return scopes

    def heights(self) -> Dict[str, int]:
        """Leaves have height 0; inner nodes one more than their highest child."""
        heights: Dict[str, int] = {}
        for node_id in self.topological_order():
            children = self.children(node_id)
            heights[node_id] = 1 + max(heights[c] for c in children) if children else 0
        return heights

    def depth(self) -> int:
        return self.heights()[self.root]

    def levels(self) -> List[List[str]]:
        """Inner nodes grouped by height, lowest first."""
        heights = self.heights()
        grouped: Dict[int, List[str]] = {}
        for node_id in self.topological_order():
            if not self.nodes[node_id].is_leaf:
                grouped.setdefault(heights[node_id], []).append(node_id)
        return [grouped[h] for h in sorted(grouped)]

    def with_weights(self, weights: Dict[str, Optional[int]], scale: Optional[int]) -> 'SpnGraph':
        """Copy of the topology with the given sum-edge weights."""
        graph = SpnGraph(self.root, self.num_vars, scale)
        for node in self.nodes.values():
            graph.add_node(node)
        for edge in self.edges.values():
            graph.add_edge(edge.with_weight(weights.get(edge.id)) if edge.id in weights else edge)
        return graph

    def weights(self) -> Dict[str, Optional[int]]:
        return {edge.id: edge.weight for edge in self.sum_edges()}

    def __eq__(self, other):
        return (isinstance(other, SpnGraph) and self.root == other.root and self.num_vars == other.num_vars
                and self.scale == other.scale and self.nodes == other.nodes
                and list(self.edges.values()) == list(other.edges.values()))

    def __repr__(self):
        return (f"SpnGraph(root={self.root}, vars={self.num_vars}, nodes={len(self.nodes)}, "
                f"edges={len(self.edges)}, scale={self.scale})")

    @classmethod
    def builder(cls, num_vars: int, scale: Optional[int] = None) -> 'SpnGraphBuilder':
        return SpnGraphBuilder(num_vars, scale)


class SpnGraphBuilder:
    """
    Helper for constructing SpnGraph objects. Edge ids default to
    "<source>-><target>".
    """

    def __init__(self, num_vars: int, scale: Optional[int] = None):
        self._num_vars = num_vars
        self._scale = scale
        self._nodes: Dict[str, SpnNode] = {}
        self._edges: List[Edge] = []
        self._root: Optional[str] = None

    def add_sum(self, node_id: str) -> 'SpnGraphBuilder':
        return self._add(SpnNode(node_id, NodeKind.SUM))

    def add_product(self, node_id: str) -> 'SpnGraphBuilder':
        return self._add(SpnNode(node_id, NodeKind.PRODUCT))

    def add_leaf(self, node_id: str, var: int, negated: bool = False) -> 'SpnGraphBuilder':
        return self._add(SpnNode(node_id, NodeKind.LEAF, var, negated))

    def _add(self, node: SpnNode) -> 'SpnGraphBuilder':
        if node.id in self._nodes:
            raise StructureParseError(f"Duplicate node id '{node.id}'")
        self._nodes[node.id] = node
        if self._root is None:
            self._root = node.id
        return self

    def add_edge(self, source_id: str, target_id: str, weight: Optional[int] = None,
                 edge_id: Optional[str] = None) -> 'SpnGraphBuilder':
        self._edges.append(Edge(edge_id or f"{source_id}->{target_id}", source_id, target_id, weight))
        return self

    def set_root(self, node_id: str) -> 'SpnGraphBuilder':
        self._root = node_id
        return self

    def build(self) -> SpnGraph:
        if self._root is None:
            raise StructureParseError("An SPN needs at least one node")
        graph = SpnGraph(self._root, self._num_vars, self._scale)
        for node in self._nodes.values():
            graph.add_node(node)
        for edge in self._edges:
            graph.add_edge(edge)
        return graph
