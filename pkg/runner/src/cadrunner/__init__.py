"""Sandboxed runner for generated parametric-CAD scripts: executes untrusted
code against an embedded CadQuery-compatible kernel, classifies failures,
and exports geometry artifacts for the evaluator."""

__version__ = "0.1.0"
