from setuptools import setup, find_packages

setup(
    name="table_report",
    version="0.2.0",
    packages=find_packages(),
    python_requires=">=3.10",
    description="Plain-text table reports for the SPN platform",
    install_requires=[],
    entry_points={
        "spn_platform.report_renderers": [
            "table = table_report:TableReport",
        ],
    },
)
