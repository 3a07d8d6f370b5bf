from abc import ABC, abstractmethod
from typing import Any, Dict


class ReportRenderer(ABC):
    """
    Turns a run report into text. A report is a plain dict with a "title",
    optional "summary" key/value pairs and optional "rows" (list of dicts
    sharing the same keys).
    """

    @abstractmethod
    def render(self, report: Dict[str, Any]) -> str:
        """
        Generate a textual representation of the report.
        """
        pass

    @abstractmethod
    def get_name(self) -> str:
        """
        Return the name of the renderer.
        """
        pass
