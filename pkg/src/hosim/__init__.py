"""Workbench for higher-order structural operational semantics."""

__version__ = "0.1.0"
