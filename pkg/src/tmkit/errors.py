"""Exception types shared across the toolkit."""


class TMError(Exception):
    """Base class for every error raised by tmkit."""


class ModelError(TMError):
    """A static model operation was rejected."""


class DuplicateId(ModelError):
    pass


class UnknownParent(ModelError):
    pass


class NestingCycle(ModelError):
    pass


class UnknownAction(ModelError):
    pass


class IllegalFlowPair(ModelError):
    pass


class BoundaryViolation(ModelError):
    pass


class SameThimacTrigger(ModelError):
    pass


class RejectsInvalidModel(ModelError):
    """Raised when printing or rendering a model that has validation errors."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        lines = [f"{d.code} {d.location}: {d.message}" for d in self.diagnostics]
        super().__init__("model has errors:\n" + "\n".join(lines))


InvalidModel = RejectsInvalidModel


class ReplayError(TMError):
    """Actualization of a schedule failed."""


class EmptyRegion(ReplayError):
    pass


class UnknownEvent(ReplayError):
    pass


class NegativeTick(ReplayError):
    pass


class TriggerTargetAmbiguous(ReplayError):
    pass


class UnknownOccurrence(ReplayError):
    pass


class AlreadyClosed(ReplayError):
    pass


class MultiTokenUnsupported(ReplayError):
    pass


class TickOutOfRange(ReplayError):
    pass


class RegionNotInModel(ReplayError):
    pass


class ImportFailure(TMError):
    """Importer input is malformed or inconsistent."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f"{line}:{column}: " if line is not None else ""
        super().__init__(where + message)


class ConflictingNesting(ImportFailure):
    pass


class UnknownEndpoint(ImportFailure):
    pass
