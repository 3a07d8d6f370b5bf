import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Mapping, Sequence, Tuple, Union

import numpy as np

from api.errors import ConfigurationError, SelectivityError, StructureValidationError
from api.models.dataset import Dataset
from api.models.graph import SpnGraph, Violation
from api.models.node import NodeKind
from api.models.query import LeafKey

log = logging.getLogger(__name__)

Number = Union[int, Fraction]


@dataclass(frozen=True)
class SpnStatistics:
    sum_nodes: int
    product_nodes: int
    leaves: int
    variables: int
    params: int
    edges: int
    layers: int

    def to_dict(self) -> Dict[str, int]:
        return {
            "sum": self.sum_nodes,
            "product": self.product_nodes,
            "leaf": self.leaves,
            "variables": self.variables,
            "params": self.params,
            "edges": self.edges,
            "layers": self.layers,
        }


def largest_remainder(shares: Sequence[Fraction], total: int) -> List[int]:
    """
    Integers that round `shares` (summing to `total`) and sum exactly to
    `total`: floors first, then one unit each to the largest remainders.
    Ties go to the earlier entry.
    """
    floors = [int(s) for s in shares]
    missing = total - sum(floors)
    order = sorted(range(len(shares)), key=lambda k: (-(shares[k] - floors[k]), k))
    for k in order[:missing]:
        floors[k] += 1
    return floors


def uniform_weights(children: int, scale: int) -> List[int]:
    return largest_remainder([Fraction(scale, children)] * children, scale)


class SpnOperations:
    """
    Plaintext SPN operations: structural validation, evaluation, counting
    of positive contributions and the closed-form (centralised) learner.
    """

    def validate(self, spn: SpnGraph) -> List[Violation]:
        """
        Checks an SPN against the structural properties.

        Args:
            spn (SpnGraph): network to check; weights are checked only when it has a scale.

        Returns:
            list of Violation, empty when the network is valid.
        """
        try:
            scopes = spn.scopes()
        except StructureValidationError as e:
            return list(e.violations)

        violations = [Violation(node_id, "reachability", "not reachable from the root")
                      for node_id in spn.unreachable()]
        for node_id in spn.topological_order():
            node = spn.nodes[node_id]
            children = spn.children(node_id)
            if node.is_leaf:
                continue
            if not children:
                violations.append(Violation(node_id, "non-empty", f"{node.kind.value} node without children"))
                continue
            if node.kind == NodeKind.SUM:
                violations.extend(self._check_completeness(node_id, children, scopes))
                violations.extend(self._check_weights(spn, node_id))
            else:
                violations.extend(self._check_decomposability(node_id, children, scopes))
        return violations

    @staticmethod
    def _check_completeness(node_id: str, children: List[str], scopes) -> List[Violation]:
        first = scopes[children[0]]
        for child in children[1:]:
            if scopes[child] != first:
                return [Violation(node_id, "completeness",
                                  f"children '{children[0]}' and '{child}' have different scopes")]
        return []

    @staticmethod
    def _check_decomposability(node_id: str, children: List[str], scopes) -> List[Violation]:
        seen = set()
        for child in children:
            overlap = seen & scopes[child]
            if overlap:
                names = ", ".join(f"X{v + 1}" for v in sorted(overlap))
                return [Violation(node_id, "decomposability", f"child '{child}' repeats {names}")]
            seen |= scopes[child]
        return []

    @staticmethod
    def _check_weights(spn: SpnGraph, node_id: str) -> List[Violation]:
        if spn.scale is None:
            return []
        edges = spn.out_edges(node_id)
        missing = [e.id for e in edges if e.weight is None]
        if missing:
            return [Violation(node_id, "weights", f"edges without weight: {missing}")]
        negative = [e.id for e in edges if e.weight < 0]
        if negative:
            return [Violation(node_id, "weights", f"negative weights on {negative}")]
        total = sum(e.weight for e in edges)
        if abs(total - spn.scale) > len(edges):
            return [Violation(node_id, "normalisation", f"weights sum to {total}, expected {spn.scale}")]
        return []

    def require_valid(self, spn: SpnGraph):
        violations = self.validate(spn)
        if violations:
            raise StructureValidationError(violations)

    def evaluate(self, spn: SpnGraph, leaf_values: Mapping[LeafKey, Number]) -> Fraction:
        """
        Bottom-up value of the root. Sum nodes weigh children by w / scale,
        product nodes multiply.

        Args:
            spn (SpnGraph): weighted network.
            leaf_values: value of each indicator, keyed by (variable, negated).

        Returns:
            Fraction: root value.
        """
        if spn.scale is None:
            raise ConfigurationError("Cannot evaluate an unweighted network")
        values: Dict[str, Fraction] = {}
        for node_id in spn.topological_order():
            node = spn.nodes[node_id]
            if node.is_leaf:
                key = (node.var, node.negated)
                if key not in leaf_values:
                    raise ConfigurationError(f"No value for leaf '{node_id}' ({'not ' if node.negated else ''}X{node.var + 1})")
                values[node_id] = Fraction(leaf_values[key])
            elif node.kind == NodeKind.SUM:
                values[node_id] = sum((Fraction(e.weight, spn.scale) * values[e.target]
                                       for e in spn.out_edges(node_id)), Fraction(0))
            else:
                product = Fraction(1)
                for child in spn.children(node_id):
                    product *= values[child]
                values[node_id] = product
        return values[spn.root]

    def positivity(self, spn: SpnGraph, data: Dataset) -> Dict[str, np.ndarray]:
        """Per node, a boolean column telling for which rows the node's value is positive."""
        rows = len(data)
        positive: Dict[str, np.ndarray] = {}
        for node_id in spn.topological_order():
            node = spn.nodes[node_id]
            if node.is_leaf:
                positive[node_id] = data.rows[:, node.var] == (0 if node.negated else 1)
                continue
            edges = spn.out_edges(node_id)
            if node.kind == NodeKind.PRODUCT:
                result = np.ones(rows, dtype=bool)
                for edge in edges:
                    result &= positive[edge.target]
            else:
                result = np.zeros(rows, dtype=bool)
                for edge in edges:
                    if edge.weight != 0:
                        result |= positive[edge.target]
            positive[node_id] = result
        return positive

    def check_selectivity(self, spn: SpnGraph, data: Dataset) -> List[Tuple[int, str]]:
        """
        Args:
            spn (SpnGraph): network (validated).
            data (Dataset): complete evidence rows.

        Returns:
            (row, sum node) pairs where more than one child is positive, by row then node.
        """
        positive = self.positivity(spn, data)
        violations = []
        order = spn.topological_order()
        for rank, node_id in enumerate(order):
            if spn.nodes[node_id].kind != NodeKind.SUM:
                continue
            children = spn.children(node_id)
            if not children:
                continue
            hits = np.sum([positive[c] for c in children], axis=0)
            violations.extend((int(row), rank, node_id) for row in np.flatnonzero(hits > 1))
        return [(row, node_id) for row, _, node_id in sorted(violations)]

    def count_contributions(self, spn: SpnGraph, data: Dataset) -> Dict[str, int]:
        """
        n_ij for every sum edge: rows on which the edge's child is positive.

        Raises:
            SelectivityError: for the first row that is not selective at some sum node.
        """
        violations = self.check_selectivity(spn, data)
        if violations:
            raise SelectivityError(*violations[0])
        positive = self.positivity(spn, data)
        return {edge.id: int(positive[edge.target].sum()) for edge in spn.sum_edges()}

    def weights_from_counts(self, spn: SpnGraph, counts: Mapping[str, int], scale: int,
                            laplace_alpha: int = 0) -> Dict[str, int]:
        """Maximum-likelihood weights at scale, each sum node summing exactly to scale."""
        weights: Dict[str, int] = {}
        for node in spn.sum_nodes():
            edges = spn.out_edges(node.id)
            if not edges:
                continue
            smoothed = [counts.get(e.id, 0) + laplace_alpha for e in edges]
            total = sum(smoothed)
            if total == 0:
                log.warning("Sum node '%s' has no data; using uniform weights", node.id)
                learned = uniform_weights(len(edges), scale)
            else:
                learned = largest_remainder([Fraction(scale * c, total) for c in smoothed], scale)
            weights.update({e.id: w for e, w in zip(edges, learned)})
        return weights

    def oracle_learn(self, spn: SpnGraph, data: Dataset, scale: int, laplace_alpha: int = 0) -> SpnGraph:
        """
        Centralised closed-form learning, the reference for the private protocols.

        Args:
            spn (SpnGraph): selective network topology.
            data (Dataset): all rows.
            scale (int): fixed-point factor d.
            laplace_alpha (int): add-alpha smoothing of the counts, 0 to disable.

        Returns:
            SpnGraph: the topology with weights at the given scale.
        """
        if laplace_alpha < 0:
            raise ConfigurationError(f"Smoothing must be non-negative, got {laplace_alpha}")
        counts = self.count_contributions(spn, data)
        return spn.with_weights(self.weights_from_counts(spn, counts, scale, laplace_alpha), scale)

    def statistics(self, spn: SpnGraph) -> SpnStatistics:
        sum_nodes, products, leaves = spn.sum_nodes(), spn.product_nodes(), spn.leaves()
        return SpnStatistics(
            sum_nodes=len(sum_nodes),
            product_nodes=len(products),
            leaves=len(leaves),
            variables=spn.num_vars,
            params=len(leaves) + len(spn.sum_edges()),
            edges=len(spn.edges),
            layers=spn.depth() + 1,
        )
