"""
Post-processing and studies: run queries, validation, scaling
"""

from .run_analysis import RunAnalyzer
