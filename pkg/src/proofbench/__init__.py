"""Workbench for the implicational fragment of intuitionistic logic.

Formulas, natural-deduction and Hilbert-style proofs, a decision
procedure with Kripke countermodels, monotone circuits, interpolant
extraction, proof translations with size tracking, and a command-line
surface for reproducible pipelines.
"""

__version__ = "0.1.0"
