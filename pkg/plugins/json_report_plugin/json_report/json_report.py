import json
from fractions import Fraction
from typing import Any, Dict

from api.report_renderer import ReportRenderer


def _default(value: Any):
    if isinstance(value, Fraction):
        return float(value)
    if hasattr(value, "to_dict"):
        return value.to_dict()
    raise TypeError(f"Cannot serialise {type(value).__name__}")


class JSONReport(ReportRenderer):
    plugin_name = "json"

    def get_name(self) -> str:
        return self.plugin_name

    def render(self, report: Dict[str, Any]) -> str:
        return json.dumps(report, indent=2, sort_keys=True, default=_default) + "\n"
