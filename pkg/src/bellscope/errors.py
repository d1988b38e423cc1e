"""Exception hierarchy.

Every error carries a short machine-readable ``code`` and the CLI exit status
it maps to, so the command line can report failures uniformly.
"""


class BellscopeError(Exception):
    code = "error"
    exit_status = 3


class DimensionError(BellscopeError, ValueError):
    code = "dimension"


class ShapeError(BellscopeError, ValueError):
    code = "shape"


class UnitarityError(BellscopeError, ValueError):
    code = "non-unitary"

    def __init__(self, message: str, deviation: float):
        super().__init__(message)
        self.deviation = deviation


class ArityError(BellscopeError, ValueError):
    code = "arity"


class StatisticsError(BellscopeError, ValueError):
    code = "statistics"


class LabelError(BellscopeError, ValueError):
    code = "label"


class ResourceError(BellscopeError, ValueError):
    code = "resource"


class WiringError(BellscopeError, ValueError):
    code = "wiring"


class ContractError(BellscopeError, ValueError):
    code = "contract"


class CircuitParseError(BellscopeError, ValueError):
    code = "parse"


class ReproductionMismatch(BellscopeError):
    code = "mismatch"
    exit_status = 4


class ConsistencyError(BellscopeError, RuntimeError):
    """A theory bound was violated; this points at a simulator bug."""

    code = "consistency"
    exit_status = 5
