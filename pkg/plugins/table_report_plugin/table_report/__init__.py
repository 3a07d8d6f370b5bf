"""
Plain-text report renderer: a key/value summary followed by an aligned table.
"""

from .table_report import TableReport

__all__ = ['TableReport']
__version__ = '0.2.0'
__plugin_name__ = 'table'
__plugin_type__ = 'report_renderer'
