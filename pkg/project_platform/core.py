import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import yaml

from api.errors import ConfigurationError, UndefinedConditionalError
from api.models.dataset import Dataset
from api.models.graph import SpnGraph
from api.models.query import EvidenceQuery, build_leaf_configuration, format_assignment
from mpc.arithmetic import SecureEngine
from network.session import Session
from network.traffic import TrafficCounters
from project_platform.model_store import ModelStore
from project_platform.plugin_manager import PluginManager
from project_platform.protocols import SharedWeightModel, SpnProtocols
from project_platform.run_config import RunConfig
from project_platform.spn_operations import SpnOperations

log = logging.getLogger(__name__)

ORACLE = "oracle"
EXACT_MPC = "exact-mpc"
APPROX_MPC = "approx-mpc"
LEARN_MODES = (ORACLE, EXACT_MPC, APPROX_MPC)
INFER_MODES = (ORACLE, "mpc")

TRAFFIC_FILE = "traffic.yaml"


@dataclass
class RunResult:
    """Outcome of one command: a renderable report plus whatever it produced."""

    report: Dict[str, Any]
    model: Optional[SpnGraph] = None
    shared: Optional[SharedWeightModel] = None
    counters: Optional[TrafficCounters] = None
    probability: Optional[Fraction] = None
    files: List[Path] = field(default_factory=list)


class SpnPlatform:
    """
    Facade used by the command line: loads structures and partitions through
    the plugins, builds sessions from a RunConfig and runs the protocols.
    """

    def __init__(self, config: Optional[RunConfig] = None):
        self.config = config or RunConfig()
        self.plugin_manager = PluginManager()
        self.operations = SpnOperations()
        self.current_structure: Optional[SpnGraph] = None

    # ---- files ----

    def load_structure(self, path: Optional[str] = None) -> SpnGraph:
        path = path or self.config.structure
        if not path:
            raise ConfigurationError("No structure file given (--structure)")
        plugin = self.plugin_manager.structure_plugin_for(str(path))
        log.debug("Parsing %s with the %s structure plugin", path, plugin.get_name())
        self.current_structure = plugin.parse(str(path))
        return self.current_structure

    def save_structure(self, spn: SpnGraph, path: str) -> Path:
        self.plugin_manager.structure_plugin_for(str(path)).dump(spn, str(path))
        return Path(path)

    def load_partitions(self, spn: SpnGraph) -> List[Dataset]:
        if not self.config.data:
            raise ConfigurationError("No dataset given (--data)")
        return [Dataset.load(path, spn.num_vars) for path in self.config.data]

    def member_partitions(self, spn: SpnGraph) -> List[Dataset]:
        """One file is split evenly over the members; several files are used as given."""
        partitions = self.load_partitions(spn)
        if len(partitions) == 1 and self.config.parties > 1:
            return partitions[0].split(self.config.parties)
        if len(partitions) > self.config.parties:
            raise ConfigurationError(f"{len(partitions)} data files for {self.config.parties} members")
        return partitions

    # ---- sessions ----

    def open_session(self, config: Optional[RunConfig] = None) -> Tuple[Session, SpnProtocols]:
        config = config or self.config
        protocol = config.protocol()
        session = Session(protocol.sharing, config.transport_config(), seed=config.seed,
                          session_id=config.session_id, timeout=config.timeout)
        engine = SecureEngine(session.manager, config.protocol_session(protocol))
        return session, SpnProtocols(session, engine, config.batching, self.operations)

    # ---- commands ----

    def validate(self, path: Optional[str] = None) -> RunResult:
        spn = self.load_structure(path)
        violations = self.operations.validate(spn)
        summary: Dict[str, Any] = {"structure": str(path or self.config.structure)}
        summary.update(self.operations.statistics(spn).to_dict())
        summary["violations"] = len(violations)
        rows = [{"node": v.node, "property": v.property, "detail": v.detail} for v in violations]
        return RunResult({"title": "SPN validation", "summary": summary, "rows": rows}, model=spn)

    def learn(self, mode: str = ORACLE) -> RunResult:
        if mode not in LEARN_MODES:
            raise ConfigurationError(f"Unknown learning mode '{mode}'; expected one of {LEARN_MODES}")
        spn = self.load_structure()
        self.operations.require_valid(spn)
        if mode == ORACLE:
            return self._learn_oracle(spn)
        return self._learn_private(spn, mode)

    def _learn_oracle(self, spn: SpnGraph) -> RunResult:
        data = Dataset.concat(self.load_partitions(spn))
        model = self.operations.oracle_learn(spn, data, self.config.scale_d, self.config.laplace_alpha)
        files = [self.save_structure(model, self.config.out)] if self.config.out else []
        rows = [{"edge": edge_id, "weight": weight} for edge_id, weight in model.weights().items()]
        summary = {"mode": ORACLE, "rows": len(data), "scale": self.config.scale_d,
                   "laplace_alpha": self.config.laplace_alpha}
        return RunResult({"title": "Oracle learning", "summary": summary, "rows": rows},
                         model=model, files=files)

    def _learn_private(self, spn: SpnGraph, mode: str, write: bool = True) -> RunResult:
        partitions = self.member_partitions(spn)
        session, protocols = self.open_session()
        with session:
            statistics = protocols.statistics_from_partitions(spn, partitions)
            before = session.counters.snapshot()
            if mode == EXACT_MPC:
                shared = protocols.learn_exact(spn, statistics)
            else:
                shared = protocols.learn_approximate(spn, statistics)
            counters = session.counters.snapshot() - before
            reconstructed = protocols.reconstruct(shared) if self.config.debug_reconstruct else None
        log.info("%s learning finished: %s", mode, counters)

        summary: Dict[str, Any] = {"mode": mode, "parties": self.config.parties,
                                   "threshold": session.sharing.t, "rows": sum(len(p) for p in partitions),
                                   "scheme": shared.scheme, "messages": counters.messages_sent,
                                   "bytes": counters.bytes_sent, "wall_time": round(counters.wall_time, 3)}
        rows: List[Dict[str, Any]] = []
        if reconstructed is not None:
            rows, deviation = self._compare_with_oracle(spn, partitions, reconstructed)
            summary["max_deviation"] = deviation
            summary["tolerance"] = self.config.fixed_point.tolerance

        files: List[Path] = []
        if write and self.config.out:
            store = ModelStore(self.config.out)
            files = store.save(shared, session, self.config.structure)
            traffic_path = store.directory / TRAFFIC_FILE
            with open(traffic_path, 'w', encoding='utf-8') as f:
                yaml.safe_dump(counters.to_dict(), f, sort_keys=False)
            files.append(traffic_path)
        title = "Exact private learning" if mode == EXACT_MPC else "Approximate private learning"
        return RunResult({"title": title, "summary": summary, "rows": rows},
                         shared=shared, counters=counters, files=files)

    def _compare_with_oracle(self, spn: SpnGraph, partitions: Sequence[Dataset],
                             reconstructed: Dict[str, int]) -> Tuple[List[Dict[str, Any]], int]:
        oracle = self.operations.oracle_learn(spn, Dataset.concat(partitions), self.config.scale_d)
        rows, deviation = [], 0
        for edge_id, expected in oracle.weights().items():
            diff = reconstructed[edge_id] - expected
            deviation = max(deviation, abs(diff))
            rows.append({"edge": edge_id, "private": reconstructed[edge_id], "oracle": expected, "diff": diff})
        return rows, deviation

    def infer(self, query: EvidenceQuery, model_path: str, mode: str = "mpc") -> RunResult:
        """
        Pr(x | e) from a plaintext model file or a directory of share files.
        Oracle mode evaluates a plaintext model in the clear.
        """
        if mode not in INFER_MODES:
            raise ConfigurationError(f"Unknown inference mode '{mode}'; expected one of {INFER_MODES}")
        model_dir = Path(model_path)
        if mode == ORACLE:
            if model_dir.is_dir():
                raise ConfigurationError("Oracle inference needs a plaintext model file")
            spn = self.load_structure(model_path)
            probability = self._infer_plaintext(spn, query)
            counters = None
            depth = spn.depth()
        else:
            probability, counters, depth = self._infer_private(query, model_dir)

        summary: Dict[str, Any] = {"query": format_assignment(query.x) or "-",
                                   "evidence": format_assignment(query.e) or "-",
                                   "probability": float(probability),
                                   "tolerance": 0.0 if mode == ORACLE else 2 * depth / self.config.scale_d}
        if counters is not None:
            summary.update({"messages": counters.messages_sent, "bytes": counters.bytes_sent})
        return RunResult({"title": "Marginal inference", "summary": summary, "rows": []},
                         counters=counters, probability=probability)

    def _infer_plaintext(self, spn: SpnGraph, query: EvidenceQuery) -> Fraction:
        self.operations.require_valid(spn)
        joint = self.operations.evaluate(spn, build_leaf_configuration(query.joint, spn.num_vars, 1))
        evidence = self.operations.evaluate(spn, build_leaf_configuration(query.e, spn.num_vars, 1))
        if evidence == 0:
            raise UndefinedConditionalError(f"The evidence {query} has probability zero under the model")
        return joint / evidence

    def _infer_private(self, query: EvidenceQuery, model_path: Path) -> Tuple[Fraction, TrafficCounters, int]:
        session, protocols = self.open_session()
        with session:
            if model_path.is_dir():
                store = ModelStore(model_path)
                topology = self.load_structure(self.config.structure or store.structure_reference())
                shared = store.load(topology, session)
                shared = protocols.to_polynomial(shared)
            else:
                spn = self.load_structure(str(model_path))
                self.operations.require_valid(spn)
                shared = protocols.share_plaintext_model(spn)
            before = session.counters.snapshot()
            probability = protocols.infer_marginal(shared, query)
            counters = session.counters.snapshot() - before
        return probability, counters, shared.topology.depth()

    def bench(self, party_counts: Sequence[int], mode: str = EXACT_MPC) -> RunResult:
        """
        Runs the same learning plan for every party count. The ratio column
        compares message totals with the first row; `quadratic` is (n / n0)^2.
        """
        if mode not in (EXACT_MPC, APPROX_MPC):
            raise ConfigurationError(f"Benchmarks run a private learning mode, not '{mode}'")
        if not party_counts:
            raise ConfigurationError("No party counts to benchmark")
        spn = self.load_structure()
        self.operations.require_valid(spn)
        dataset = Path(self.config.structure).stem
        base_config = self.config
        rows: List[Dict[str, Any]] = []
        try:
            for n in party_counts:
                self.config = replace(base_config, parties=n, threshold=None, debug_reconstruct=False)
                counters = self._learn_private(spn, mode, write=False).counters
                rows.append({"dataset": dataset, "n": n, "messages": counters.messages_sent,
                             "bytes": counters.bytes_sent, "wall_time": round(counters.wall_time, 3)})
        finally:
            self.config = base_config
        first = rows[0]
        for row in rows:
            row["ratio"] = round(row["messages"] / first["messages"], 3)
            row["quadratic"] = round((row["n"] / first["n"]) ** 2, 3)
        summary = {"mode": mode, "transport": base_config.transport, "batching": base_config.batching}
        return RunResult({"title": "Traffic benchmark", "summary": summary, "rows": rows})
