from __future__ import annotations

from .evaluator import FeasibilityReport


class PlacementError(RuntimeError):
    """An algorithm could not produce a feasible placement."""


class NoHostFits(PlacementError):
    pass


class NoFeasibleAssignment(PlacementError):
    pass


class CannotSeedPool(PlacementError):
    pass


class InfeasiblePlacement(PlacementError):
    """The algorithm completed an assignment that fails the final check."""

    def __init__(self, report: FeasibilityReport, placement=None):
        self.report = report
        self.placement = placement
        super().__init__(f"placement violates {sorted(report.kinds())} constraints")


class KTooLarge(ValueError):
    pass
