"""Exception hierarchy; the CLI maps these to distinct exit codes."""


class MvanovaError(Exception):
    """Base class for all package errors."""


class InputValidationError(MvanovaError):
    """Bad user input: missing files, misaligned ids, non-finite values, shape mismatches."""

    exit_code = 2


class NumericalError(MvanovaError):
    """Non-finite values or failed factorizations encountered during computation."""

    exit_code = 3


class InfeasibleDesignError(MvanovaError):
    """The covariate design cannot support the requested operation (empty cells, impossible folds)."""

    exit_code = 4
