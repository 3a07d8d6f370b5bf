from fractions import Fraction

import pytest
import yaml

from api.errors import ConfigurationError, DegenerateModelError, UndefinedConditionalError
from api.models.dataset import Dataset
from api.models.query import EvidenceQuery
from mpc.division import local_fraction
from mpc.field import make_rng, sample_bounded
from mpc.fixed_point import FixedPointParams
from network.manager import FixedZeroDealer
from project_platform.model_store import ModelStore
from project_platform.protocols import LocalStatistics, den_key, inverse_scale, num_key
from project_platform.spn_operations import SpnOperations
from tests.spn_factories import (SMALL_PRIME, fig1_spn, open_session, random_selective_spn,
                                 selective_two_var_spn, single_sum_spn)

TWO_VAR_ROWS = [[1, 1], [1, 0], [1, 1], [0, 0], [0, 1], [0, 0], [1, 1], [0, 0]]


class TestLocalStatistics:

    def test_counts_and_denominators(self):
        stats = LocalStatistics.compute(1, single_sum_spn(), Dataset([[1], [1], [0]], 1))
        assert stats.nums == {"R->X1": 2, "R->NX1": 1}
        assert stats.dens == {"R": 3}
        assert stats.private_inputs() == {num_key("R->X1"): 2, num_key("R->NX1"): 1, den_key("R"): 3}

    def test_negative_counts(self):
        with pytest.raises(ConfigurationError):
            LocalStatistics(1, {"R->X1": -1}, {"R": 0}, 0)

    def test_inverse_scale(self):
        assert inverse_scale(3, 256) == 256
        assert inverse_scale(257, 256) == 512
        assert inverse_scale(16181, 256) == 16384


class TestApproximateLearning:

    def test_golden_shares(self):
        """Three parties with fixed zero sharings get exactly r_i + round(d num_i / (den_i N))."""
        dealer = FixedZeroDealer([(752508, 776879, 567779), (1, 2, SMALL_PRIME - 3)])
        session, _, protocols = open_session(3, prime=SMALL_PRIME, dealer=dealer,
                                             fixed_point=FixedPointParams(d=1000, e=256, rho=16))
        spn = single_sum_spn()
        statistics = {
            pid: LocalStatistics(pid, {"R->X1": num, "R->NX1": den - num}, {"R": den}, den)
            for pid, num, den in ((1, 71, 256), (2, 209, 786), (3, 320, 1127))
        }
        with session:
            model = protocols.learn_approximate(spn, statistics)
            shares = [session.store(pid).share(model.data_ids["R->X1"]).value for pid in (1, 2, 3)]
            assert shares == [752600, 776968, 567874]
            assert model.additive
            assert protocols.reconstruct(model)["R->X1"] == 276

    def test_reconstructs_to_the_sum_of_local_fractions(self):
        spn = selective_two_var_spn()
        rows = [[1, 1], [0, 0], [1, 0], [0, 1], [1, 1], [0, 0]]
        session, _, protocols = open_session(3, batching=True)
        with session:
            statistics = protocols.statistics_from_partitions(spn, Dataset(rows, 2).split(3))
            weights = protocols.reconstruct(protocols.learn_approximate(spn, statistics))
        for edge in spn.sum_edges():
            expected = sum(local_fraction(s.nums[edge.id], s.dens[edge.source], 256, 3)
                           for s in statistics.values())
            assert weights[edge.id] == expected

    def test_every_member_must_hold_rows(self):
        spn = single_sum_spn()
        session, _, protocols = open_session(3)
        with session:
            statistics = protocols.statistics_from_partitions(spn, [Dataset([[1]], 1), Dataset([[0]], 1)])
            with pytest.raises(DegenerateModelError):
                protocols.learn_approximate(spn, statistics)

    def test_empty_local_denominator(self):
        spn = selective_two_var_spn()
        session, _, protocols = open_session(3)
        with session:
            statistics = protocols.statistics_from_partitions(spn, Dataset(TWO_VAR_ROWS, 2).split(3))
            with pytest.raises(DegenerateModelError):
                protocols.learn_approximate(spn, statistics)

    def test_polynomial_conversion_keeps_the_weights(self):
        spn = single_sum_spn()
        session, _, protocols = open_session(3)
        with session:
            statistics = protocols.statistics_from_partitions(spn, Dataset([[1], [1], [0], [1], [0], [0]], 1).split(3))
            additive = protocols.learn_approximate(spn, statistics)
            converted = protocols.to_polynomial(additive)
            assert not converted.additive
            assert protocols.reconstruct(converted) == protocols.reconstruct(additive)


class TestExactLearning:

    def test_toy_dataset_matches_the_oracle(self):
        spn = single_sum_spn()
        data = Dataset([[1], [1], [0]], 1)
        oracle = SpnOperations().oracle_learn(spn, data, 256).weights()
        assert oracle == {"R->X1": 171, "R->NX1": 85}
        session, engine, protocols = open_session(3)
        with session:
            statistics = protocols.statistics_from_partitions(spn, data.split(3))
            weights = protocols.reconstruct(protocols.learn_exact(spn, statistics))
        for edge_id, expected in oracle.items():
            assert abs(weights[edge_id] - expected) <= engine.fp.tolerance

    @pytest.mark.parametrize("n, batching", [(3, False), (5, True)])
    def test_selective_network_matches_the_oracle(self, n, batching):
        spn = selective_two_var_spn()
        data = Dataset(TWO_VAR_ROWS, 2)
        oracle = SpnOperations().oracle_learn(spn, data, 256).weights()
        assert oracle == {"R->PA": 128, "R->PB": 128, "SA->X2": 192, "SA->NX2": 64, "SB->X2": 64, "SB->NX2": 192}
        session, engine, protocols = open_session(n, batching=batching)
        with session:
            statistics = protocols.statistics_from_partitions(spn, data.split(n))
            weights = protocols.reconstruct(protocols.learn_exact(spn, statistics))
        for edge_id, expected in oracle.items():
            assert abs(weights[edge_id] - expected) <= engine.fp.tolerance, edge_id

    @pytest.mark.parametrize("case", range(50))
    def test_random_selective_networks_match_the_oracle(self, case):
        rng = make_rng(case, "selective")
        num_vars = 1 + sample_bounded(6, rng)
        spn = random_selective_spn(num_vars, rng)
        assert SpnOperations().validate(spn) == []
        rows = [[rng.getrandbits(1) for _ in range(num_vars)] for _ in range(1 + sample_bounded(64, rng))]
        data = Dataset(rows, num_vars)
        oracle = SpnOperations().oracle_learn(spn, data, 256).weights()
        n = (3, 5)[case % 2]
        session, engine, protocols = open_session(n, seed=case, batching=True)
        with session:
            statistics = protocols.statistics_from_partitions(spn, data.split(n))
            weights = protocols.reconstruct(protocols.learn_exact(spn, statistics))
        tolerance = engine.fp.tolerance
        assert {e: w for e, w in weights.items() if abs(w - oracle[e]) > tolerance} == {}
        for node in spn.sum_nodes():
            edges = spn.out_edges(node.id)
            assert abs(sum(weights[e.id] for e in edges) - 256) <= len(edges) * tolerance

    def test_three_party_totals(self):
        # members hold 71/256, 209/786 and 320/1127; 600/2169 = 0.2766
        spn = single_sum_spn()
        nums, dens = (71, 209, 320), (256, 786, 1127)
        statistics = {k + 1: LocalStatistics(k + 1, {"R->X1": num, "R->NX1": den - num}, {"R": den}, den)
                      for k, (num, den) in enumerate(zip(nums, dens))}
        session, engine, protocols = open_session(3, fixed_point=FixedPointParams(d=1000))
        with session:
            weights = protocols.reconstruct(protocols.learn_exact(spn, statistics))
        assert abs(weights["R->X1"] - 277) <= engine.fp.tolerance
        assert abs(weights["R->NX1"] - 723) <= engine.fp.tolerance

    def test_node_without_data_gets_uniform_weights(self):
        spn = selective_two_var_spn()
        data = Dataset([[1, 1], [1, 0], [1, 1]], 2)
        session, _, protocols = open_session(3)
        with session:
            statistics = protocols.statistics_from_partitions(spn, data.split(3))
            model = protocols.learn_exact(spn, statistics)
            weights = protocols.reconstruct(model)
        assert model.public_weights == {"SB->X2": 128, "SB->NX2": 128}
        assert weights["SB->X2"] == weights["SB->NX2"] == 128
        assert abs(weights["R->PA"] - 256) <= 2
        assert abs(weights["R->PB"]) <= 2

    @pytest.mark.parametrize("parts", [2, 3, 5])
    def test_partitioning_does_not_change_the_totals(self, parts):
        spn = selective_two_var_spn()
        data = Dataset(TWO_VAR_ROWS, 2)
        names = [num_key(e.id) for e in spn.sum_edges()] + [den_key(node.id) for node in spn.sum_nodes()]
        totals = {}
        for split in (1, parts):
            session, engine, protocols = open_session(5)
            with session:
                statistics = protocols.statistics_from_partitions(spn, data.split(split))
                protocols.load_statistics(statistics)
                totals[split] = engine.open(engine.input(sorted(statistics), names))
        assert totals[1] == totals[parts]
        assert totals[1][:2] == [4, 4]


class TestInference:

    @pytest.fixture
    def fig1_session(self):
        session, engine, protocols = open_session(3, fixed_point=FixedPointParams(d=1000))
        with session:
            yield session, protocols, protocols.share_plaintext_model(fig1_spn())

    def test_joint_query(self, fig1_session):
        _, protocols, model = fig1_session
        assert protocols.infer_marginal(model, EvidenceQuery({0: 1, 1: 1})) == Fraction(45, 1000)

    def test_marginalised_variable(self, fig1_session):
        _, protocols, model = fig1_session
        assert protocols.infer_marginal(model, EvidenceQuery({0: 1})) == Fraction(330, 1000)

    def test_full_marginal(self, fig1_session):
        _, protocols, model = fig1_session
        assert protocols.infer_marginal(model, EvidenceQuery({})) == 1

    def test_query_equal_to_evidence(self, fig1_session):
        _, protocols, model = fig1_session
        assert protocols.infer_marginal(model, EvidenceQuery({1: 0}, {1: 0})) == 1

    def test_conditional(self, fig1_session):
        _, protocols, model = fig1_session
        # S(e) for X2=1 is 0.4*0.2 + 0.5*0.1 + 0.1*0.1, exact at d=1000
        assert protocols.infer_marginal(model, EvidenceQuery({0: 1}, {1: 1})) == Fraction(45, 140)

    def test_only_the_client_sees_the_root(self, fig1_session):
        session, protocols, model = fig1_session
        protocols.infer_marginal(model, EvidenceQuery({0: 1}))
        assert sorted(session.client.state.public.values()) == [330, 1000]

    def test_impossible_evidence(self):
        session, _, protocols = open_session(3, fixed_point=FixedPointParams(d=1000))
        with session:
            model = protocols.share_plaintext_model(single_sum_spn((1000, 0), 1000))
            with pytest.raises(UndefinedConditionalError):
                protocols.infer_marginal(model, EvidenceQuery({}, {0: 0}))

    def test_model_scale_must_match(self):
        session, _, protocols = open_session(3)
        with session:
            with pytest.raises(ConfigurationError):
                protocols.share_plaintext_model(fig1_spn())

    def test_additive_models_are_refused(self):
        session, _, protocols = open_session(3)
        spn = single_sum_spn()
        with session:
            statistics = protocols.statistics_from_partitions(spn, Dataset([[1], [0], [1]], 1).split(3))
            additive = protocols.learn_approximate(spn, statistics)
            with pytest.raises(ConfigurationError):
                protocols.infer_marginal(additive, EvidenceQuery({0: 1}))

    def test_learned_model_answers_queries(self):
        spn = selective_two_var_spn()
        session, engine, protocols = open_session(3)
        with session:
            statistics = protocols.statistics_from_partitions(spn, Dataset(TWO_VAR_ROWS, 2).split(3))
            model = protocols.learn_exact(spn, statistics)
            probability = protocols.infer_marginal(model, EvidenceQuery({1: 1}, {0: 1}))
        # Pr(X2=1 | X1=1) = 3/4 in the data
        assert abs(float(probability) - 0.75) <= 0.05


class TestModelStore:

    def test_shares_survive_a_restart(self, tmp_path):
        spn = single_sum_spn()
        session, _, protocols = open_session(3)
        with session:
            statistics = protocols.statistics_from_partitions(spn, Dataset([[1], [1], [0]], 1).split(3))
            model = protocols.learn_exact(spn, statistics)
            expected = protocols.reconstruct(model)
        store = ModelStore(tmp_path / "shares")
        paths = store.save(model, session, "single_sum.yaml")
        assert [p.name for p in paths] == ["party-1.yaml", "party-2.yaml", "party-3.yaml"]
        assert store.structure_reference() == "single_sum.yaml"

        restarted, _, protocols = open_session(3, seed=99)
        with restarted:
            loaded = store.load(single_sum_spn(), restarted)
            assert protocols.reconstruct(loaded) == expected

    def test_modulus_must_match(self, tmp_path):
        spn = single_sum_spn()
        session, _, protocols = open_session(3)
        with session:
            statistics = protocols.statistics_from_partitions(spn, Dataset([[1], [0], [0]], 1).split(3))
            model = protocols.learn_exact(spn, statistics)
        store = ModelStore(tmp_path)
        store.save(model, session)
        other, _, _ = open_session(3, prime=SMALL_PRIME, fixed_point=FixedPointParams(d=1000, e=256, rho=16))
        with pytest.raises(ConfigurationError):
            store.load(spn, other)

    def test_degree_must_match(self, tmp_path):
        spn = single_sum_spn()
        session, _, protocols = open_session(3)
        with session:
            statistics = protocols.statistics_from_partitions(spn, Dataset([[1], [0], [0]], 1).split(3))
            model = protocols.learn_exact(spn, statistics)
        store = ModelStore(tmp_path)
        store.save(model, session)
        document = yaml.safe_load(store.path(2).read_text())
        document["threshold"] = 2
        store.path(2).write_text(yaml.safe_dump(document))
        restarted, _, _ = open_session(3, seed=8)
        with pytest.raises(ConfigurationError) as raised:
            store.load(spn, restarted)
        assert "degree 2" in str(raised.value)
