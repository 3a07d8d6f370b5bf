from abc import ABC, abstractmethod
from typing import Any, Dict, List, Optional

from api.errors import StructureParseError
from api.models.graph import SpnGraph
from api.models.node import NodeKind

STRUCTURE_FORMAT = "spn-structure/1"


class StructureSourcePlugin(ABC):

    @abstractmethod
    def parse(self, path: str, **kwargs) -> SpnGraph:
        """
        Parse a structure file and return an SpnGraph.
        """
        pass

    @abstractmethod
    def dump(self, graph: SpnGraph, path: str, **kwargs):
        """
        Write an SpnGraph so that parse() gives it back unchanged.
        """
        pass

    @abstractmethod
    def get_name(self) -> str:
        """
        Return the name of the structure format.
        """
        pass

    @classmethod
    def get_parameters_spec(cls) -> List[Dict[str, Any]]:
        return [
            {
                'name': 'path',
                'type': 'string',
                'required': True,
                'description': 'Path to the structure file',
            }
        ]


def structure_to_dict(graph: SpnGraph) -> Dict[str, Any]:
    """Serialisable form shared by every structure format. Variables are 1-based (X1...)."""
    nodes = []
    for node in graph.nodes.values():
        entry: Dict[str, Any] = {"id": node.id, "kind": node.kind.value}
        if node.is_leaf:
            entry["var"] = node.var + 1
            entry["negated"] = node.negated
        nodes.append(entry)
    edges = []
    for edge in graph.edges.values():
        entry = {"id": edge.id, "source": edge.source, "target": edge.target}
        if edge.weight is not None:
            entry["weight"] = edge.weight
        edges.append(entry)
    data: Dict[str, Any] = {"format": STRUCTURE_FORMAT, "num_vars": graph.num_vars, "root": graph.root}
    if graph.scale is not None:
        data["scale"] = graph.scale
    data["nodes"] = nodes
    data["edges"] = edges
    return data


def _require(entry: Dict, key: str, where: str, kind=None):
    if key not in entry:
        raise StructureParseError(f"{where}: missing '{key}'")
    value = entry[key]
    if kind is not None and (not isinstance(value, kind) or isinstance(value, bool) and kind is int):
        raise StructureParseError(f"{where}: '{key}' must be of type {kind.__name__}, got {value!r}")
    return value


def structure_from_dict(data: Any, source: str = "structure") -> SpnGraph:
    """
    Builds an SpnGraph from its serialisable form.

    Raises:
        StructureParseError: naming the offending element.
    """
    if not isinstance(data, dict):
        raise StructureParseError(f"{source}: expected a mapping at the top level")
    declared = data.get("format", STRUCTURE_FORMAT)
    if declared != STRUCTURE_FORMAT:
        raise StructureParseError(f"{source}: unsupported format '{declared}'")
    num_vars = _require(data, "num_vars", source, int)
    scale: Optional[int] = data.get("scale")
    if scale is not None and (not isinstance(scale, int) or scale < 1):
        raise StructureParseError(f"{source}: 'scale' must be a positive integer")
    nodes = data.get("nodes")
    edges = data.get("edges", [])
    if not isinstance(nodes, list) or not nodes:
        raise StructureParseError(f"{source}: 'nodes' must be a non-empty list")
    if not isinstance(edges, list):
        raise StructureParseError(f"{source}: 'edges' must be a list")

    builder = SpnGraph.builder(num_vars, scale)
    for index, entry in enumerate(nodes):
        where = f"{source}: node #{index + 1}"
        if not isinstance(entry, dict):
            raise StructureParseError(f"{where}: expected a mapping")
        node_id = str(_require(entry, "id", where))
        kind = _require(entry, "kind", where)
        if kind == NodeKind.SUM.value:
            builder.add_sum(node_id)
        elif kind == NodeKind.PRODUCT.value:
            builder.add_product(node_id)
        elif kind == NodeKind.LEAF.value:
            var = _require(entry, "var", where, int)
            if not 1 <= var <= num_vars:
                raise StructureParseError(f"{where}: variable X{var} is outside X1..X{num_vars}")
            builder.add_leaf(node_id, var - 1, bool(entry.get("negated", False)))
        else:
            raise StructureParseError(f"{where} ('{node_id}'): unknown node kind '{kind}'")

    for index, entry in enumerate(edges):
        where = f"{source}: edge #{index + 1}"
        if not isinstance(entry, dict):
            raise StructureParseError(f"{where}: expected a mapping")
        weight = entry.get("weight")
        if weight is not None and (not isinstance(weight, int) or isinstance(weight, bool)):
            raise StructureParseError(f"{where}: weight must be an integer at the file's scale")
        builder.add_edge(str(_require(entry, "source", where)), str(_require(entry, "target", where)),
                         weight, entry.get("id"))

    root = data.get("root")
    if root is not None:
        builder.set_root(str(root))
    graph = builder.build()
    if graph.root not in graph.nodes:
        raise StructureParseError(f"{source}: root '{graph.root}' is not a node")
    return graph
