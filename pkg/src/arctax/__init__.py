"""Taxonomy classification and diagnostics for ARC-style generator corpora.

The package reads three kinds of input: procedural generator source files
(one function per task), task-to-category mappings, and per-task experiment
results. It classifies generators into a nine-category taxonomy by static
rule analysis and computes curriculum and performance diagnostics from the
result files.
"""

__version__ = "0.1.0"

from .model import Category, GeneratorUnit, SolveRateRecord, TaskResult

__all__ = [
    "Category",
    "GeneratorUnit",
    "SolveRateRecord",
    "TaskResult",
    "__version__",
]
