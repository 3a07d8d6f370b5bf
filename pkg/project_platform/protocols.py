"""
Private learning and inference over a public SPN topology.

Members hold horizontally partitioned rows. Learning turns their local
counts into shared sum-edge weights at scale d; inference evaluates the
shared model on leaf values provided by the client, who alone learns the
two root values and their ratio.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from api.errors import ConfigurationError, DegenerateModelError, UndefinedConditionalError
from api.models.dataset import Dataset
from api.models.graph import SpnGraph
from api.models.node import NodeKind
from api.models.query import EvidenceQuery
from mpc.arithmetic import SecureEngine
from mpc.sharing import PartyId
from network.session import Session
from project_platform.spn_operations import SpnOperations, uniform_weights

log = logging.getLogger(__name__)


def num_key(edge_id: str) -> str:
    return f"num:{edge_id}"


def den_key(node_id: str) -> str:
    return f"den:{node_id}"


def inverse_scale(total_rows: int, d: int) -> int:
    """Smallest d * 2^s that is at least the (public) number of rows."""
    scale = d
    while scale < total_rows:
        scale *= 2
    return scale


@dataclass
class LocalStatistics:
    """One party's counts: num per sum edge, den per sum node (sum of its edges' nums)."""

    party_id: PartyId
    nums: Dict[str, int]
    dens: Dict[str, int]
    rows: int

    def __post_init__(self):
        for name, value in list(self.nums.items()) + list(self.dens.items()):
            if value < 0:
                raise ConfigurationError(f"Party {self.party_id}: negative count {value} for '{name}'")

    @classmethod
    def compute(cls, party_id: PartyId, spn: SpnGraph, data: Dataset,
                operations: Optional[SpnOperations] = None) -> 'LocalStatistics':
        counts = (operations or SpnOperations()).count_contributions(spn, data)
        dens = {node.id: sum(counts[e.id] for e in spn.out_edges(node.id)) for node in spn.sum_nodes()}
        return cls(party_id, counts, dens, len(data))

    def private_inputs(self) -> Dict[str, int]:
        inputs = {num_key(edge_id): value for edge_id, value in self.nums.items()}
        inputs.update({den_key(node_id): value for node_id, value in self.dens.items()})
        return inputs


@dataclass
class SharedWeightModel:
    """
    Public topology plus, per sum edge, the data-id under which every member
    stores its share of d * w. Additive models come from the averaged-fraction
    protocol and must be converted before inference.
    """

    topology: SpnGraph
    scale: int
    data_ids: Dict[str, str]
    additive: bool = False
    public_weights: Dict[str, int] = field(default_factory=dict)

    @property
    def scheme(self) -> str:
        return "additive" if self.additive else "shamir"

    def edge_ids(self) -> List[str]:
        return [edge.id for edge in self.topology.sum_edges()]


class SpnProtocols:
    """
    Runs the private protocols on a session. The session hosts every party,
    so this class also places each party's private inputs in its own store.
    """

    def __init__(self, session: Session, engine: SecureEngine, batching: bool = False,
                 operations: Optional[SpnOperations] = None):
        self.session = session
        self.engine = engine
        self.batching = batching
        self.operations = operations or SpnOperations()
        self.d = engine.fp.d

    def _groups(self, items: Sequence) -> List[List]:
        return [list(items)] if self.batching else [[item] for item in items]

    # ---- private inputs ----

    def load_statistics(self, statistics: Mapping[PartyId, LocalStatistics]):
        for party_id, stats in statistics.items():
            if party_id not in self.session.members:
                raise ConfigurationError(f"Statistics for unknown member {party_id}")
            self.session.members[party_id].state.private.update(stats.private_inputs())

    def statistics_from_partitions(self, spn: SpnGraph, partitions: Sequence[Dataset]) -> Dict[PartyId, LocalStatistics]:
        """Partition k goes to member k + 1."""
        if len(partitions) > self.session.sharing.n:
            raise ConfigurationError(f"{len(partitions)} partitions for {self.session.sharing.n} members")
        return {k + 1: LocalStatistics.compute(k + 1, spn, part, self.operations)
                for k, part in enumerate(partitions)}

    # ---- learning ----

    def learn_exact(self, spn: SpnGraph, statistics: Mapping[PartyId, LocalStatistics]) -> SharedWeightModel:
        """
        Shares the summed counts and divides them privately, one shared
        reciprocal per sum node. Nodes without data get public uniform weights;
        only the fact that a node is empty is disclosed (to the manager).
        """
        self.load_statistics(statistics)
        owners = sorted(statistics)
        total_rows = sum(s.rows for s in statistics.values())
        scale = inverse_scale(total_rows, self.d)
        log.info("Exact learning: %d rows from %d parties, inverse scale %d", total_rows, len(owners), scale)

        nodes = [node.id for node in spn.sum_nodes() if spn.out_edges(node.id)]
        data_ids: Dict[str, str] = {}
        public_weights: Dict[str, int] = {}
        for group in self._groups(nodes):
            dens = self.engine.input(owners, [den_key(n) for n in group])
            empty = self.engine.is_zero(dens)
            live = [(n, den) for n, den, zero in zip(group, dens, empty) if not zero]
            for node_id, zero in zip(group, empty):
                if zero:
                    log.warning("Sum node '%s' has no data; using public uniform weights", node_id)
                    edges = spn.out_edges(node_id)
                    weights = uniform_weights(len(edges), self.d)
                    public_weights.update({e.id: w for e, w in zip(edges, weights)})
                    data_ids.update(zip([e.id for e in edges], self.engine.public(weights)))
            if not live:
                continue
            inverses = self.engine.approx_inverse([den for _, den in live], scale)
            edges, per_edge_inverse = [], []
            for (node_id, _), inverse in zip(live, inverses):
                for edge in spn.out_edges(node_id):
                    edges.append(edge.id)
                    per_edge_inverse.append(inverse)
            for chunk in self._groups(list(zip(edges, per_edge_inverse))):
                nums = self.engine.input(owners, [num_key(e) for e, _ in chunk])
                products = self.engine.mul(nums, [inv for _, inv in chunk])
                weights = self.engine.div_by_public(products, scale * self.engine.fp.e // self.d)
                data_ids.update(zip([e for e, _ in chunk], weights))
        self.engine.flush()
        return SharedWeightModel(spn, self.d, data_ids, False, public_weights)

    def learn_approximate(self, spn: SpnGraph, statistics: Mapping[PartyId, LocalStatistics]) -> SharedWeightModel:
        """
        Every member rounds d * num / (den * n) locally and masks it with its
        share of a joint sharing of zero; the shares add up to the average of
        the local fractions.
        """
        members = self.session.sharing.parties
        missing = [pid for pid in members if pid not in statistics]
        if missing:
            raise DegenerateModelError(f"Members {missing} hold no data; every member must take part")
        self.load_statistics(statistics)
        edges = spn.sum_edges()
        data_ids: Dict[str, str] = {}
        for group in self._groups(edges):
            masks = self.engine.jrsz(len(group))
            shares = self.engine.approx_fraction([num_key(e.id) for e in group],
                                                 [den_key(e.source) for e in group], masks, len(members))
            data_ids.update(zip([e.id for e in group], shares))
        self.engine.flush()
        return SharedWeightModel(spn, self.d, data_ids, additive=True)

    def to_polynomial(self, model: SharedWeightModel) -> SharedWeightModel:
        if not model.additive:
            return model
        edges = model.edge_ids()
        data_ids: Dict[str, str] = {}
        for group in self._groups(edges):
            converted = self.engine.sq2pq([model.data_ids[e] for e in group])
            data_ids.update(zip(group, converted))
        self.engine.flush()
        return SharedWeightModel(model.topology, model.scale, data_ids, False, dict(model.public_weights))

    def share_plaintext_model(self, spn: SpnGraph, owner: Optional[PartyId] = None) -> SharedWeightModel:
        """Secret-shares the weights of a plaintext model, input by one member."""
        if spn.scale is None:
            raise ConfigurationError("The plaintext model has no weights")
        if spn.scale != self.d:
            raise ConfigurationError(f"Model scale {spn.scale} differs from the session's d={self.d}")
        owner = owner or self.engine.session.alice
        edges = spn.sum_edges()
        self.session.members[owner].state.private.update({f"w:{e.id}": e.weight for e in edges})
        data_ids = dict(zip([e.id for e in edges], self.engine.input([owner], [f"w:{e.id}" for e in edges])))
        self.engine.flush()
        topology = spn.with_weights({e.id: None for e in edges}, None)
        return SharedWeightModel(topology, self.d, data_ids)

    def reconstruct(self, model: SharedWeightModel) -> Dict[str, int]:
        """Opens every weight to the manager. Diagnostic use only."""
        log.warning("Debug reconstruction: opening %d shared weights", len(model.data_ids))
        edges = model.edge_ids()
        values = self.engine.open([model.data_ids[e] for e in edges], model.scheme)
        return dict(zip(edges, values))

    # ---- inference ----

    def infer_marginal(self, model: SharedWeightModel, query: EvidenceQuery) -> Fraction:
        """
        Pr(x | e) = S(xe) / S(e). Only the client sees the two root values.

        Raises:
            UndefinedConditionalError: when S(e) evaluates to zero.
        """
        if model.additive:
            raise ConfigurationError("Inference needs polynomial shares; convert the model first")
        client = self.session.client
        if client is None:
            raise ConfigurationError("The session has no inference client")
        spn = model.topology
        leaf_keys = sorted({(leaf.var, leaf.negated) for leaf in spn.leaves()})
        passes = ("xe", "e")
        configurations = dict(zip(passes, query.configurations(spn.num_vars, self.d)))
        names = [f"leaf:{p}:{var}:{int(neg)}" for p in passes for var, neg in leaf_keys]
        client.state.private.update({
            f"leaf:{p}:{var}:{int(neg)}": configurations[p][(var, neg)] for p in passes for var, neg in leaf_keys
        })
        leaf_ids = dict(zip(names, self.engine.input([client.party_id], names)))

        values: Dict[Tuple[str, str], str] = {}
        for p in passes:
            for leaf in spn.leaves():
                values[(p, leaf.id)] = leaf_ids[f"leaf:{p}:{leaf.var}:{int(leaf.negated)}"]

        for level in spn.levels():
            jobs = [(p, node_id) for node_id in level for p in passes]
            for group in self._groups(jobs):
                self._evaluate_level(model, group, values)

        roots = [values[(p, spn.root)] for p in passes]
        opened = self.engine.reveal(roots, client.party_id)
        self.engine.flush()
        joint, evidence = (client.state.revealed(data_id) for data_id in opened)
        log.info("Client received S(xe)=%d, S(e)=%d at scale %d", joint, evidence, self.d)
        if evidence == 0:
            raise UndefinedConditionalError(f"The evidence {query} has probability zero under the model")
        return Fraction(joint, evidence)

    def _evaluate_level(self, model: SharedWeightModel, jobs: List[Tuple[str, str]],
                        values: Dict[Tuple[str, str], str]):
        spn = model.topology
        sums = [job for job in jobs if spn.nodes[job[1]].kind == NodeKind.SUM]
        products = [job for job in jobs if spn.nodes[job[1]].kind == NodeKind.PRODUCT]

        if sums:
            terms = [[(model.data_ids[e.id], values[(p, e.target)]) for e in spn.out_edges(node_id)]
                     for p, node_id in sums]
            results = self.engine.div_by_public(self.engine.dot(terms), self.d)
            values.update(zip(sums, results))

        if products:
            acc = {job: values[(job[0], spn.children(job[1])[0])] for job in products}
            longest = max(len(spn.children(node_id)) for _, node_id in products)
            for k in range(1, longest):
                step = [job for job in products if len(spn.children(job[1])) > k]
                factors = [values[(p, spn.children(node_id)[k])] for p, node_id in step]
                folded = self.engine.div_by_public(self.engine.mul([acc[job] for job in step], factors), self.d)
                acc.update(zip(step, folded))
            values.update(acc)

