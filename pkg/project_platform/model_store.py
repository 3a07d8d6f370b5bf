import logging
from pathlib import Path
from typing import Dict, List, Optional, Union

import yaml

from api.errors import ConfigurationError, StructureParseError
from api.models.graph import SpnGraph
from mpc.sharing import PartyId
from network.session import Session
from project_platform.protocols import SharedWeightModel

log = logging.getLogger(__name__)

SHARES_FORMAT = "spn-shares/1"


class ModelStore:
    """
    One YAML file per member holding its shares of the learned weights:

    format: spn-shares/1
    party: 3
    modulus: 13558774610046711780701
    scale: 256
    scheme: shamir
    structure: nltcs.yaml
    public_weights: {}
    shares: {S0->P0: 1234...}
    """

    def __init__(self, directory: Union[str, Path]):
        self.directory = Path(directory)

    def path(self, party_id: PartyId) -> Path:
        return self.directory / f"party-{party_id}.yaml"

    def save(self, model: SharedWeightModel, session: Session, structure: Optional[str] = None) -> List[Path]:
        self.directory.mkdir(parents=True, exist_ok=True)
        written = []
        for party_id, member in sorted(session.members.items()):
            document = {
                "format": SHARES_FORMAT,
                "party": party_id,
                "modulus": session.sharing.field.p,
                "threshold": session.sharing.t,
                "scale": model.scale,
                "scheme": model.scheme,
                "structure": structure,
                "public_weights": dict(model.public_weights),
                "shares": {edge_id: member.state.share(model.data_ids[edge_id]).value
                           for edge_id in model.edge_ids()},
            }
            path = self.path(party_id)
            with open(path, 'w', encoding='utf-8') as f:
                yaml.safe_dump(document, f, sort_keys=False)
            written.append(path)
        log.info("Wrote %d share files to %s", len(written), self.directory)
        return written

    def read(self, party_id: PartyId) -> Dict:
        path = self.path(party_id)
        try:
            with open(path, 'r', encoding='utf-8') as f:
                document = yaml.safe_load(f)
        except OSError as e:
            raise StructureParseError(f"Cannot read share file {path}: {e}") from e
        except yaml.YAMLError as e:
            raise StructureParseError(f"Invalid YAML in {path}: {e}") from e
        if not isinstance(document, dict) or document.get("format") != SHARES_FORMAT:
            raise StructureParseError(f"{path} is not a {SHARES_FORMAT} file")
        if document.get("party") != party_id:
            raise StructureParseError(f"{path} belongs to party {document.get('party')}, not {party_id}")
        if not isinstance(document.get("shares"), dict):
            raise StructureParseError(f"{path}: 'shares' must be a mapping")
        return document

    def structure_reference(self) -> Optional[str]:
        return self.read(1).get("structure")

    def load(self, topology: SpnGraph, session: Session) -> SharedWeightModel:
        """Binds every member's stored shares in its data store."""
        documents = {pid: self.read(pid) for pid in session.sharing.parties}
        first = documents[1]
        for pid, document in documents.items():
            if document.get("modulus") != session.sharing.field.p:
                raise ConfigurationError(f"Party {pid} shares use modulus {document.get('modulus')}, "
                                         f"the session uses {session.sharing.field.p}")
            if document.get("threshold") != session.sharing.t:
                raise ConfigurationError(f"Party {pid} shares have degree {document.get('threshold')}, "
                                         f"the session uses t={session.sharing.t}")
            if document.get("scheme") != first.get("scheme") or document.get("scale") != first.get("scale"):
                raise ConfigurationError("Share files disagree on scheme or scale")
        edges = [edge.id for edge in topology.sum_edges()]
        data_ids = {edge_id: f"w:{edge_id}" for edge_id in edges}
        field = session.sharing.field
        for pid, document in documents.items():
            shares = document["shares"]
            missing = [e for e in edges if e not in shares]
            if missing:
                raise StructureParseError(f"{self.path(pid)} has no share for edges {missing}")
            state = session.members[pid].state
            for edge_id in edges:
                state.bind_share(data_ids[edge_id], field.element(int(shares[edge_id])))
        return SharedWeightModel(topology, first["scale"], data_ids, first.get("scheme") == "additive",
                                 dict(first.get("public_weights") or {}))
