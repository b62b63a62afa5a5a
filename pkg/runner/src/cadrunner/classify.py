"""Failure taxonomy for script runs.

Type I: response/syntax problems (the script never parsed).
Type II: API misuse against the CAD library surface (bad attributes,
         arguments or types).
Type III: geometric constraint violations raised by the kernel, plus
          anything unmatched (flagged "unclassified") and timeouts.
"""

from __future__ import annotations

TYPE_I = "TypeI"
TYPE_II = "TypeII"
TYPE_III = "TypeIII"

SYNTAX_KINDS = ("SyntaxError", "IndentationError", "TabError")
API_KINDS = ("AttributeError", "TypeError")

GEOMETRY_PATTERNS = (
    "no pending wires present",
    "null-entity",
    "null entity",
    "non-coplanar",
    "no solid found",
)


def classify_error(kind: str, message: str) -> tuple[str, str]:
    """Map an exception (class name, message) to a failure type.

    Returns ``(type, note)`` where note is "" or "unclassified".
    """
    lowered = message.lower()
    if any(pattern in lowered for pattern in GEOMETRY_PATTERNS):
        return TYPE_III, ""
    if kind in SYNTAX_KINDS:
        return TYPE_I, ""
    if kind in API_KINDS:
        return TYPE_II, ""
    return TYPE_III, "unclassified"
