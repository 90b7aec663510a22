"""Exception hierarchy. Each class carries the CLI exit code for its category."""


class BDTilesError(Exception):
    exit_code = 5


class UsageError(BDTilesError):
    exit_code = 1


class RuleError(BDTilesError):
    """Base for problems with a rule document."""

    exit_code = 2


class RuleFormatError(RuleError):
    """Malformed JSON."""


class RuleSchemaError(RuleError):
    """Well-formed JSON that does not follow the rule schema."""


class RuleValidationError(RuleError):
    """The rule parses but its children do not tile the inflated prototiles."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = tuple(violations)


class CriticalClassificationError(BDTilesError):
    exit_code = 3


class BudgetExceeded(BDTilesError):
    exit_code = 4


class InvariantError(BDTilesError):
    exit_code = 5


class NotPrimitiveError(BDTilesError, ValueError):
    exit_code = 2


class DefectiveEigenspaceError(BDTilesError, ValueError):
    exit_code = 5
