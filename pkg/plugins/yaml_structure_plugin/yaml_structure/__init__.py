"""
YAML structure format for the SPN platform.

Reads and writes sum-product network topologies (and optional weights) as
YAML documents tagged `format: spn-structure/1`.
"""

from .yaml_structure import YAMLStructureSource

__all__ = ['YAMLStructureSource']
__version__ = '0.2.0'
__plugin_name__ = 'yaml'
__plugin_type__ = 'structure_source'
