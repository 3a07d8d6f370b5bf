from .json_report import JSONReport

__all__ = ['JSONReport']
__version__ = '0.2.0'
__plugin_name__ = 'json'
__plugin_type__ = 'report_renderer'
