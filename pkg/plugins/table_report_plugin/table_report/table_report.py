from typing import Any, Dict, List

from api.report_renderer import ReportRenderer


def _cell(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    if value is None:
        return "-"
    return str(value)


class TableReport(ReportRenderer):
    plugin_name = "table"

    def get_name(self) -> str:
        return self.plugin_name

    def render(self, report: Dict[str, Any]) -> str:
        lines: List[str] = []
        title = report.get("title")
        if title:
            lines += [title, "=" * len(title)]

        summary = report.get("summary") or {}
        if summary:
            width = max(len(str(k)) for k in summary)
            lines += [f"{str(k).ljust(width)} : {_cell(v)}" for k, v in summary.items()]

        rows = report.get("rows") or []
        if rows:
            if summary:
                lines.append("")
            columns = list(rows[0].keys())
            cells = [[_cell(row.get(c)) for c in columns] for row in rows]
            widths = [max(len(c), *(len(r[i]) for r in cells)) for i, c in enumerate(columns)]
            lines.append("  ".join(c.ljust(w) for c, w in zip(columns, widths)))
            lines.append("  ".join("-" * w for w in widths))
            for r in cells:
                lines.append("  ".join(v.rjust(w) for v, w in zip(r, widths)))
        return "\n".join(lines)
