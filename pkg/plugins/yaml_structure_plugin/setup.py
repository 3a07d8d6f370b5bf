from setuptools import setup, find_packages

setup(
    name="yaml_structure",
    version="0.2.0",
    packages=find_packages(),
    python_requires=">=3.10",
    description="YAML structure format for the SPN platform",
    install_requires=["PyYAML"],
    entry_points={
        "spn_platform.structure_sources": [
            "yaml = yaml_structure:YAMLStructureSource",
        ],
    },
)
