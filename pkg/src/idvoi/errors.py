"""Exception types. Every error carries a short machine-readable ``code``."""

from __future__ import annotations


class IDVoiError(Exception):
    code = "error"

    def __init__(self, message: str = "", *variables: str):
        super().__init__(message or self.code)
        self.variables = variables


class UnknownVariable(IDVoiError, KeyError):
    code = "unknown_variable"

    def __str__(self) -> str:
        return self.args[0]


class DuplicateVariable(IDVoiError, ValueError):
    code = "duplicate_variable"


class ConflictingObservation(IDVoiError, ValueError):
    code = "conflicting_observation"


class InvalidDiagram(IDVoiError, ValueError):
    """Raised when an operation needs an admissible diagram and got one with errors."""

    code = "invalid_diagram"

    def __init__(self, report):
        self.report = report
        lines = [f"{f.code}: {f.message}" for f in report.errors]
        super().__init__("; ".join(lines))


class CardinalityMismatch(IDVoiError, ValueError):
    code = "cardinality_mismatch"


class VariableNotInScope(IDVoiError, KeyError):
    code = "variable_not_in_scope"

    def __str__(self) -> str:
        return self.args[0]


class InvalidLikelihood(IDVoiError, ValueError):
    code = "invalid_likelihood"


class ImproperTree(IDVoiError, RuntimeError):
    code = "improper_tree"


class NoHostingCluster(IDVoiError, RuntimeError):
    code = "no_hosting_cluster"


class DecisionNotEliminated(IDVoiError, RuntimeError):
    code = "decision_not_eliminated"


class UnsupportedValuePattern(IDVoiError, RuntimeError):
    code = "unsupported_value_pattern"


class IllegalObservation(IDVoiError, ValueError):
    code = "illegal_observation"


class IncompleteAssignment(IDVoiError, ValueError):
    code = "incomplete_assignment"


class TooLarge(IDVoiError, ValueError):
    code = "too_large"
