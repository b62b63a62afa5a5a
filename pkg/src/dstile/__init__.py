"""Design-spec tiling: coverage-maximizing exemplar selection for CAD code
generation, baseline selectors, and geometric evaluation of the results."""

__version__ = "0.1.0"
