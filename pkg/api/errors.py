class SpnPlatformError(Exception):
    """Base class for every error raised by the platform."""


class ConfigurationError(SpnPlatformError, ValueError):
    """Invalid parameters (field, sharing, fixed-point, run configuration)."""


class FieldDomainError(SpnPlatformError, ArithmeticError):
    """Arithmetic outside the domain of an operation, e.g. inverting zero."""


class StructureParseError(SpnPlatformError, ValueError):
    """A structure, dataset, query or share file could not be parsed."""


class StructureValidationError(SpnPlatformError, ValueError):
    """An SPN violates completeness, decomposability or normalisation."""

    def __init__(self, violations):
        self.violations = list(violations)
        details = "; ".join(str(v) for v in self.violations)
        super().__init__(f"{len(self.violations)} structural violation(s): {details}")


class SelectivityError(SpnPlatformError, ValueError):
    """More than one child of a sum node is positive for a data row."""

    def __init__(self, row: int, node_id: str):
        self.row = row
        self.node_id = node_id
        super().__init__(f"Row {row} is not selective at sum node '{node_id}'")


class ProtocolError(SpnPlatformError):
    """A protocol instance failed or was aborted."""


class DataStoreError(ProtocolError):
    """A data-id was bound twice or read before it was produced."""


class SchedulingError(ProtocolError):
    """An exercise could not be placed in the manager's queue."""


class SessionTimeout(ProtocolError):
    """No progress was made before the configured timeout (deadlock detector)."""


class ConnectivityError(SpnPlatformError):
    """A party could not be reached over the transport."""


class UndefinedConditionalError(SpnPlatformError, ArithmeticError):
    """The evidence has probability zero, so Pr(x|e) is undefined."""


class DegenerateModelError(SpnPlatformError, ArithmeticError):
    """A party holds no data for a sum node required by the protocol."""
