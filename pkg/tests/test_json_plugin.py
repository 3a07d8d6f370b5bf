import json

import pytest

from api.errors import ConfigurationError, StructureParseError
from plugins.json_structure_plugin.json_structure import JSONStructureSource
from plugins.yaml_structure_plugin.yaml_structure import YAMLStructureSource
from project_platform.plugin_manager import PluginManager


class TestJSONStructureSource:

    @pytest.fixture
    def json_source(self):
        return JSONStructureSource()

    def test_get_name(self, json_source):
        assert json_source.get_name() == "json"

    def test_parameters_spec(self):
        names = [p['name'] for p in JSONStructureSource.get_parameters_spec()]
        assert names == ['path', 'encoding']

    def test_invalid_json(self, json_source, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"num_vars": 1,')
        with pytest.raises(StructureParseError) as raised:
            json_source.parse(str(path))
        assert "line 1" in str(raised.value)

    def test_same_document_as_yaml(self, json_source, test_data_dir, tmp_path, fig1):
        path = tmp_path / "fig1.json"
        json_source.dump(YAMLStructureSource().parse(str(test_data_dir / "fig1.yaml")), str(path))
        document = json.loads(path.read_text())
        assert document["format"] == "spn-structure/1"
        assert document["scale"] == 1000
        assert {"id": "S->P1", "source": "S", "target": "P1", "weight": 400} in document["edges"]
        assert json_source.parse(str(path)) == fig1

    def test_unweighted_edges_have_no_weight_key(self, json_source, single_sum, tmp_path):
        path = tmp_path / "single.json"
        json_source.dump(single_sum, str(path))
        document = json.loads(path.read_text())
        assert "scale" not in document
        assert all("weight" not in edge for edge in document["edges"])


class TestPluginManager:

    def test_bundled_plugins_are_found(self):
        manager = PluginManager()
        assert {'yaml', 'json'} <= set(manager.get_structure_plugins())
        assert {'table', 'json'} <= set(manager.get_renderer_plugins())

    def test_singleton(self):
        assert PluginManager() is PluginManager()

    @pytest.mark.parametrize("path, name", [
        ("model.yaml", "yaml"), ("model.yml", "yaml"), ("model.JSON", "json"), ("model", "yaml"),
    ])
    def test_format_follows_the_extension(self, path, name):
        assert PluginManager().structure_plugin_for(path).get_name() == name

    def test_unknown_format(self):
        with pytest.raises(ConfigurationError):
            PluginManager().structure_plugin_for("model.xml")

    def test_unknown_renderer(self):
        with pytest.raises(ConfigurationError):
            PluginManager().instantiate_renderer("html")
