import importlib
import importlib.metadata
import logging
from typing import Dict, Optional, Type

from api.errors import ConfigurationError
from api.report_renderer import ReportRenderer
from api.structure_source import StructureSourcePlugin

log = logging.getLogger(__name__)

STRUCTURE_GROUP = 'spn_platform.structure_sources'
RENDERER_GROUP = 'spn_platform.report_renderers'

# Used when no plugin package is installed, so a plain checkout still works.
BUNDLED_PLUGINS = {
    STRUCTURE_GROUP: {
        'yaml': 'plugins.yaml_structure_plugin.yaml_structure:YAMLStructureSource',
        'json': 'plugins.json_structure_plugin.json_structure:JSONStructureSource',
    },
    RENDERER_GROUP: {
        'table': 'plugins.table_report_plugin.table_report:TableReport',
        'json': 'plugins.json_report_plugin.json_report:JSONReport',
    },
}


class PluginManager:
    """
    Manages discovery and access to structure-source and report-renderer plugins.
    Installed entry points take precedence; bundled plugins fill the gaps.
    """
    _instance = None
    _initialized = False

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __init__(self):
        if self._initialized:
            return

        self._structure_plugins: Dict[str, Type[StructureSourcePlugin]] = {}
        self._renderer_plugins: Dict[str, Type[ReportRenderer]] = {}
        self._loaded = False
        self._initialized = True

    def _load_plugins(self):
        if self._loaded:
            return

        self._load_installed_plugins()
        self._load_bundled_plugins()

        self._loaded = True

    @staticmethod
    def _import(target: str):
        module_name, _, attr = target.partition(':')
        module = importlib.import_module(module_name)
        return getattr(module, attr)

    def _load_installed_plugins(self):
        """
        Finds plugins installed with `pip install -e plugins/<name>` through
        the entry-point mechanism.
        """
        try:
            entry_points = importlib.metadata.entry_points()
            if hasattr(entry_points, 'select'):
                structure_eps = entry_points.select(group=STRUCTURE_GROUP)
                renderer_eps = entry_points.select(group=RENDERER_GROUP)
            else:
                structure_eps = entry_points.get(STRUCTURE_GROUP, [])
                renderer_eps = entry_points.get(RENDERER_GROUP, [])
        except Exception as e:
            log.warning("Error discovering plugins: %s", e)
            return

        for registry, eps in ((self._structure_plugins, structure_eps), (self._renderer_plugins, renderer_eps)):
            for entry_point in eps:
                try:
                    registry[entry_point.name] = entry_point.load()
                    log.debug("Loaded plugin %s from %s", entry_point.name, entry_point.value)
                except Exception as e:
                    log.warning("Error loading %s: %s: %s", entry_point.name, type(e).__name__, e)

    def _load_bundled_plugins(self):
        for group, registry in ((STRUCTURE_GROUP, self._structure_plugins),
                                (RENDERER_GROUP, self._renderer_plugins)):
            for name, target in BUNDLED_PLUGINS[group].items():
                if name in registry:
                    continue
                try:
                    registry[name] = self._import(target)
                except (ImportError, AttributeError) as e:
                    log.warning("Bundled plugin %s unavailable: %s", target, e)

    def get_structure_plugins(self) -> Dict[str, Type[StructureSourcePlugin]]:
        self._load_plugins()
        return dict(self._structure_plugins)

    def get_renderer_plugins(self) -> Dict[str, Type[ReportRenderer]]:
        self._load_plugins()
        return dict(self._renderer_plugins)

    def get_structure_plugin_class(self, name: str) -> Optional[Type[StructureSourcePlugin]]:
        self._load_plugins()
        return self._structure_plugins.get(name)

    def get_renderer_plugin_class(self, name: str) -> Optional[Type[ReportRenderer]]:
        self._load_plugins()
        return self._renderer_plugins.get(name)

    def instantiate_structure_plugin(self, name: str) -> StructureSourcePlugin:
        plugin_class = self.get_structure_plugin_class(name)
        if plugin_class is None:
            raise ConfigurationError(
                f"No structure format '{name}'; available: {sorted(self._structure_plugins)}"
            )
        return plugin_class()

    def instantiate_renderer(self, name: str) -> ReportRenderer:
        plugin_class = self.get_renderer_plugin_class(name)
        if plugin_class is None:
            raise ConfigurationError(
                f"No report renderer '{name}'; available: {sorted(self._renderer_plugins)}"
            )
        return plugin_class()

    def structure_plugin_for(self, path: str) -> StructureSourcePlugin:
        """Picks the structure format from the file extension (.yaml/.yml or .json)."""
        suffix = path.rsplit('.', 1)[-1].lower() if '.' in path else ''
        return self.instantiate_structure_plugin('yaml' if suffix == 'yml' else suffix or 'yaml')

