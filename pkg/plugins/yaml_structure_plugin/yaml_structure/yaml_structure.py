import os

import yaml

from api.errors import StructureParseError
from api.models.graph import SpnGraph
from api.structure_source import StructureSourcePlugin, structure_from_dict, structure_to_dict


class YAMLStructureSource(StructureSourcePlugin):
    """
    Reads an SPN from a YAML file. Expected structure:

    format: spn-structure/1
    num_vars: 2
    scale: 1000
    root: S
    nodes:
      - {id: S, kind: sum}
      - {id: P1, kind: product}
      - {id: X1, kind: leaf, var: 1, negated: false}
    edges:
      - {id: S->P1, source: S, target: P1, weight: 400}
    """

    plugin_name = 'yaml'

    def get_name(self) -> str:
        return self.plugin_name

    def parse(self, path: str, encoding: str = "utf-8", **kwargs) -> SpnGraph:
        """
        Parse a YAML structure file.

        Raises:
            StructureParseError: if the file is missing, is not valid YAML or
                does not describe a network.
        """
        if not os.path.exists(path):
            raise StructureParseError(f"Structure file not found: {path}")
        try:
            with open(path, 'r', encoding=encoding) as f:
                data = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise StructureParseError(f"Invalid YAML in {path}: {e}") from e
        return structure_from_dict(data, source=path)

    def dump(self, graph: SpnGraph, path: str, encoding: str = "utf-8", **kwargs):
        with open(path, 'w', encoding=encoding) as f:
            yaml.safe_dump(structure_to_dict(graph), f, sort_keys=False, default_flow_style=None)
