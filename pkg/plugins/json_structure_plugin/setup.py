from setuptools import setup, find_packages

setup(
    name="json_structure",
    version="0.2.0",
    packages=find_packages(),
    python_requires=">=3.10",
    description="JSON structure format for the SPN platform",
    install_requires=[],
    entry_points={
        "spn_platform.structure_sources": [
            "json = json_structure:JSONStructureSource",
        ],
    },
)
