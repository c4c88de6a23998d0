class StatelError(ValueError):
    """Base class for model and evaluation errors."""


class NonUnitMass(StatelError):
    pass


class NegativeWeight(StatelError):
    pass


class UnknownVariable(StatelError):
    pass


class UnknownPredicate(StatelError):
    pass


class ArityError(StatelError):
    pass


class UnknownState(StatelError):
    pass


class UnknownWorld(StatelError):
    pass


class UnknownRelation(StatelError):
    pass


class DuplicateWorld(StatelError):
    pass


class ClosureError(StatelError):
    """A modality was evaluated at a distribution that is not a declared world."""


class DimensionMismatch(StatelError):
    pass


class UndefinedInput(StatelError):
    pass


class EmptyDataset(StatelError):
    pass


class MissingScore(StatelError):
    pass


class InconsistentLabels(StatelError):
    pass


class MissingRelation(StatelError):
    pass


class MissingDatasetWorld(StatelError):
    pass
