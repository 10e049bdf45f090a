"""
Verification suite behind the ``verify`` command
"""

from .check_bank import CheckBank, CheckOutcome, load_fixtures
from .check_runner import CheckRunner
from .results_analyzer import ResultsAnalyzer

__all__ = ['CheckBank', 'CheckOutcome', 'load_fixtures', 'CheckRunner', 'ResultsAnalyzer']
