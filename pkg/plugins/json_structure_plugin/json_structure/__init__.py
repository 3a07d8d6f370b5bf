from .json_structure import JSONStructureSource

__all__ = ['JSONStructureSource']
__version__ = '0.2.0'
__plugin_name__ = 'json'
__plugin_type__ = 'structure_source'
