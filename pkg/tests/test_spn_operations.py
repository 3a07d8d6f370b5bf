import unittest
from fractions import Fraction

from api.errors import ConfigurationError, SelectivityError
from api.models.dataset import Dataset
from api.models.graph import SpnGraph
from api.models.node import NodeKind
from api.models.query import build_leaf_configuration
from mpc.field import make_rng, sample_bounded
from project_platform.spn_operations import SpnOperations, largest_remainder, uniform_weights
from tests.spn_factories import (fig1_spn, nltcs_like_spn, random_selective_spn, selective_two_var_spn,
                                 single_sum_spn)


class TestValidation(unittest.TestCase):
    """
    Tests for SpnOperations.validate
    """

    def setUp(self):
        self.operations = SpnOperations()

    def test_fig1_is_valid(self):
        self.assertEqual(self.operations.validate(fig1_spn()), [])

    def test_unweighted_topologies_skip_weight_checks(self):
        self.assertEqual(self.operations.validate(selective_two_var_spn()), [])
        self.assertEqual(self.operations.validate(nltcs_like_spn()), [])

    def test_incomplete_sum(self):
        spn = (SpnGraph.builder(2)
               .add_sum("R").add_leaf("X1", 0).add_leaf("X2", 1)
               .add_edge("R", "X1").add_edge("R", "X2")
               .build())
        violations = self.operations.validate(spn)
        self.assertEqual([(v.node, v.property) for v in violations], [("R", "completeness")])

    def test_product_repeating_a_variable(self):
        spn = (SpnGraph.builder(1)
               .add_product("P").add_leaf("X1", 0).add_leaf("NX1", 0, True)
               .add_edge("P", "X1").add_edge("P", "NX1")
               .build())
        violations = self.operations.validate(spn)
        self.assertEqual([(v.node, v.property) for v in violations], [("P", "decomposability")])
        self.assertIn("X1", violations[0].detail)

    def test_weights_off_by_more_than_the_tolerance(self):
        spn = single_sum_spn((600, 300), 1000)
        violations = self.operations.validate(spn)
        self.assertEqual([v.property for v in violations], ["normalisation"])

    def test_rounding_slack_is_accepted(self):
        self.assertEqual(self.operations.validate(single_sum_spn((600, 399), 1000)), [])

    def test_missing_weight(self):
        spn = single_sum_spn((1000, None), 1000)
        self.assertEqual([v.property for v in self.operations.validate(spn)], ["weights"])

    def test_cycle(self):
        spn = (SpnGraph.builder(1)
               .add_sum("R").add_product("P").add_leaf("X1", 0)
               .add_edge("R", "P").add_edge("P", "R").add_edge("P", "X1")
               .build())
        violations = self.operations.validate(spn)
        self.assertEqual([v.property for v in violations], ["acyclic"])

    def test_unreachable_node(self):
        spn = (SpnGraph.builder(1)
               .add_sum("R").add_leaf("X1", 0).add_leaf("NX1", 0, True).add_sum("orphan")
               .add_edge("R", "X1").add_edge("R", "NX1").add_edge("orphan", "X1")
               .build())
        violations = self.operations.validate(spn)
        self.assertEqual([(v.node, v.property) for v in violations], [("orphan", "reachability")])

    def test_empty_inner_node(self):
        spn = SpnGraph.builder(1).add_sum("R").build()
        self.assertEqual([v.property for v in self.operations.validate(spn)], ["non-empty"])


class TestStatistics(unittest.TestCase):

    def test_fig1(self):
        stats = SpnOperations().statistics(fig1_spn())
        self.assertEqual((stats.sum_nodes, stats.product_nodes, stats.leaves), (5, 3, 4))
        self.assertEqual(stats.edges, 17)
        self.assertEqual(stats.params, 15)
        self.assertEqual(stats.layers, 4)

    def test_nltcs_sized_network(self):
        stats = SpnOperations().statistics(nltcs_like_spn())
        self.assertEqual(stats.to_dict(), {
            "sum": 13, "product": 26, "leaf": 74, "variables": 16,
            "params": 100, "edges": 112, "layers": 9,
        })


class TestEvaluation(unittest.TestCase):
    """
    Plaintext evaluation of the two-variable example network
    """

    def setUp(self):
        self.operations = SpnOperations()
        self.spn = fig1_spn()

    def _value(self, assignment):
        return self.operations.evaluate(self.spn, build_leaf_configuration(assignment, 2, 1))

    def test_joint(self):
        self.assertEqual(self._value({0: 1, 1: 1}), Fraction(45, 1000))

    def test_marginal(self):
        self.assertEqual(self._value({0: 1}), Fraction(33, 100))
        self.assertEqual(self._value({0: 0}), Fraction(67, 100))

    def test_everything_marginalised(self):
        self.assertEqual(self._value({}), 1)

    def test_unweighted_network(self):
        with self.assertRaises(ConfigurationError):
            self.operations.evaluate(selective_two_var_spn(), build_leaf_configuration({}, 2, 1))

    def test_missing_leaf_value(self):
        with self.assertRaises(ConfigurationError):
            self.operations.evaluate(self.spn, {(0, False): 1})

    def test_multilinear_in_each_indicator(self):
        rng = make_rng(41)
        keys = [(var, negated) for var in range(2) for negated in (False, True)]
        for _ in range(20):
            values = {key: Fraction(sample_bounded(1001, rng), 1000) for key in keys}
            for key in keys:
                a, b = Fraction(sample_bounded(1001, rng), 1000), Fraction(sample_bounded(1001, rng), 1000)
                t = Fraction(sample_bounded(11, rng), 10)
                at = {**values, key: t * a + (1 - t) * b}
                mixed = t * self.operations.evaluate(self.spn, {**values, key: a}) \
                    + (1 - t) * self.operations.evaluate(self.spn, {**values, key: b})
                self.assertEqual(self.operations.evaluate(self.spn, at), mixed)


class TestCounting(unittest.TestCase):

    def setUp(self):
        self.operations = SpnOperations()
        self.data = Dataset([[1, 1], [1, 0], [1, 1], [0, 0], [0, 1], [0, 0], [1, 1], [0, 0]], 2)

    def test_contributions(self):
        counts = self.operations.count_contributions(selective_two_var_spn(), self.data)
        self.assertEqual(counts, {
            "R->PA": 4, "R->PB": 4,
            "SA->X2": 3, "SA->NX2": 1,
            "SB->X2": 1, "SB->NX2": 3,
        })

    def test_counts_are_additive_over_partitions(self):
        spn = selective_two_var_spn()
        total = self.operations.count_contributions(spn, self.data)
        parts = [self.operations.count_contributions(spn, part) for part in self.data.split(3)]
        self.assertEqual({e: sum(p[e] for p in parts) for e in total}, total)

    def test_non_selective_network(self):
        with self.assertRaises(SelectivityError) as raised:
            self.operations.count_contributions(fig1_spn(), self.data)
        self.assertEqual((raised.exception.row, raised.exception.node_id), (0, "S"))

    def test_contributions_match_a_row_by_row_count(self):
        rng = make_rng(43)
        for _ in range(10):
            num_vars = 1 + sample_bounded(6, rng)
            spn = random_selective_spn(num_vars, rng)
            rows = [[rng.getrandbits(1) for _ in range(num_vars)] for _ in range(sample_bounded(65, rng))]

            def positive(node_id, row):
                node = spn.nodes[node_id]
                if node.is_leaf:
                    return row[node.var] == (0 if node.negated else 1)
                hits = [positive(child, row) for child in spn.children(node_id)]
                return any(hits) if node.kind == NodeKind.SUM else all(hits)

            expected = {edge.id: sum(positive(edge.target, row) for row in rows) for edge in spn.sum_edges()}
            self.assertEqual(self.operations.count_contributions(spn, Dataset(rows, num_vars)), expected)

    def test_example_root_is_not_selective(self):
        self.assertEqual(self.operations.check_selectivity(fig1_spn(), Dataset([[1, 1]], 2)), [(0, "S")])

    def test_empty_dataset_is_selective(self):
        self.assertEqual(self.operations.check_selectivity(fig1_spn(), Dataset([], 2)), [])
        self.assertEqual(self.operations.count_contributions(selective_two_var_spn(), Dataset([], 2)),
                         {edge.id: 0 for edge in selective_two_var_spn().sum_edges()})

    def test_zero_weight_edges_are_not_positive(self):
        spn = single_sum_spn((1000, 0), 1000)
        positive = self.operations.positivity(spn, Dataset([[0]], 1))
        self.assertFalse(positive["R"][0])


class TestOracleLearning(unittest.TestCase):

    def setUp(self):
        self.operations = SpnOperations()
        self.toy = Dataset([[1], [1], [0]], 1)

    def test_rounded_weights_sum_to_the_scale(self):
        learned = self.operations.oracle_learn(single_sum_spn(), self.toy, 256)
        self.assertEqual(learned.weights(), {"R->X1": 171, "R->NX1": 85})
        self.assertEqual(learned.scale, 256)
        self.assertEqual(self.operations.validate(learned), [])

    def test_laplace_smoothing(self):
        learned = self.operations.oracle_learn(single_sum_spn(), self.toy, 256, laplace_alpha=1)
        self.assertEqual(learned.weights(), {"R->X1": 154, "R->NX1": 102})

    def test_negative_smoothing(self):
        with self.assertRaises(ConfigurationError):
            self.operations.oracle_learn(single_sum_spn(), self.toy, 256, laplace_alpha=-1)

    def test_node_without_rows_is_uniform(self):
        data = Dataset([[1, 1], [1, 0], [1, 1]], 2)
        learned = self.operations.oracle_learn(selective_two_var_spn(), data, 256)
        self.assertEqual(learned.weight("SB->X2"), 128)
        self.assertEqual(learned.weight("SB->NX2"), 128)
        self.assertEqual(learned.weight("R->PA"), 256)
        self.assertEqual(learned.weight("R->PB"), 0)

    def test_topology_is_kept(self):
        spn = selective_two_var_spn()
        learned = self.operations.oracle_learn(spn, Dataset([[1, 1]], 2), 256)
        self.assertEqual(set(learned.nodes), set(spn.nodes))
        self.assertEqual(set(learned.edges), set(spn.edges))


class TestRounding(unittest.TestCase):

    def test_largest_remainder(self):
        shares = [Fraction(1000, 3)] * 3
        self.assertEqual(largest_remainder(shares, 1000), [334, 333, 333])

    def test_uniform_weights(self):
        self.assertEqual(uniform_weights(2, 256), [128, 128])
        self.assertEqual(sum(uniform_weights(7, 1000)), 1000)


if __name__ == '__main__':
    unittest.main()
