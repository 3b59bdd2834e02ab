"""Utility subpackage for helpers shared across pffc.

Currently holds trajectory reporting (CSV output and gap summaries). The
numerical code does not depend on it except for summary statistics.
"""

__all__ = [
    "reporting",
]
