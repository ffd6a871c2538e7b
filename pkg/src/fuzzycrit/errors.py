"""Exception hierarchy shared by all fuzzycrit modules."""


class FuzzycritError(Exception):
    """Base class for every error raised by this package."""


class KnowledgeError(FuzzycritError):
    """A knowledge document could not be turned into a library.

    ``location`` is a dotted path into the document (``plans[0].body[1]``)
    or ``line:col`` for syntax errors.
    """

    def __init__(self, message, location=None):
        self.location = location
        if location:
            message = f"{location}: {message}"
        super().__init__(message)


class SchemaError(KnowledgeError):
    pass


class DanglingReferenceError(KnowledgeError):
    pass


class DuplicateIdError(KnowledgeError):
    pass


class UnitMismatchError(KnowledgeError):
    pass


class LibraryValidationError(KnowledgeError):
    """Raised by strict parsing when the validator reports error findings."""

    def __init__(self, findings):
        self.findings = list(findings)
        first = self.findings[0]
        super().__init__(
            f"{len(self.findings)} validation error(s); first: {first.message}",
            first.location,
        )


class MappingError(FuzzycritError):
    """Invalid mapping table (e.g. zero unit factor)."""


class ConversionError(FuzzycritError):
    pass


class IngestError(FuzzycritError):
    pass


class UnknownConceptError(FuzzycritError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class UnknownPlanError(FuzzycritError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class ScenarioError(FuzzycritError):
    """A synthetic scenario cannot be realized on the given guideline."""
