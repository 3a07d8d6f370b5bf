import json
import os
from typing import Any, Dict, List

from api.errors import StructureParseError
from api.models.graph import SpnGraph
from api.structure_source import StructureSourcePlugin, structure_from_dict, structure_to_dict


class JSONStructureSource(StructureSourcePlugin):
    """Same document as the YAML format, written as JSON."""

    plugin_name = "json"

    def get_name(self) -> str:
        return self.plugin_name

    @classmethod
    def get_parameters_spec(cls) -> List[Dict[str, Any]]:
        return [
            {
                'name': 'path',
                'type': 'string',
                'required': True,
                'description': 'Path to the JSON structure file',
                'placeholder': '/path/to/structure.json'
            },
            {
                'name': 'encoding',
                'type': 'string',
                'required': False,
                'default': 'utf-8',
                'description': 'File encoding',
            }
        ]

    def parse(self, path: str, encoding: str = "utf-8", **kwargs) -> SpnGraph:
        if not os.path.exists(path):
            raise StructureParseError(f"Structure file not found: {path}")
        try:
            with open(path, 'r', encoding=encoding) as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise StructureParseError(f"Invalid JSON in {path} at line {e.lineno}: {e.msg}") from e
        return structure_from_dict(data, source=path)

    def dump(self, graph: SpnGraph, path: str, encoding: str = "utf-8", **kwargs):
        with open(path, 'w', encoding=encoding) as f:
            json.dump(structure_to_dict(graph), f, indent=2)
            f.write("\n")
