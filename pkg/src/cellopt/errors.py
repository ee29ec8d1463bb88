"""Exception types. Every error carries a machine-readable ``code``."""


class CelloptError(Exception):
    code = "INTERNAL"

    def __init__(self, message="", code=None):
        super().__init__(message)
        if code is not None:
            self.code = code

    def __str__(self):
        msg = super().__str__()
        return f"{self.code}: {msg}" if msg else self.code


class SpecError(CelloptError):
    """Spec file could not be read, parsed or understood."""

    code = "INVALID_SPEC"


class DimensionError(CelloptError, ValueError):
    code = "DIMENSION_MISMATCH"


class InfeasibleError(CelloptError):
    """No constraint-respecting design could be produced."""

    code = "INFEASIBLE_AFTER_MAX_TRIES"


class PlanningError(CelloptError):
    code = "UNREACHABLE"


class ScheduleError(CelloptError):
    code = "CYCLE"


class DegenerateKpiError(CelloptError):
    code = "DEGENERATE_KPI"
