"""Error hierarchy.

Three families, matching the interface contract:
  InputError        -> malformed or inconsistent input data (CLI exit 2, HTTP 400)
  PreconditionError -> structurally valid input outside an operation's domain (CLI exit 3, HTTP 422)
  ObstructionFound  -> a genuine topological obstruction where a factorization
                       was requested; carries a certificate (CLI exit 4, HTTP 409)
"""


class LinefieldError(Exception):
    """Base class for all package errors."""


class InputError(LinefieldError):
    pass


class PreconditionError(LinefieldError):
    pass


class ObstructionFound(LinefieldError):
    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate


# fibre-level

class VanishingFibre(PreconditionError):
    pass


class NotRankOne(PreconditionError):
    def __init__(self, message, vertex=None):
        super().__init__(message)
        self.vertex = vertex


class LengthExceeded(PreconditionError):
    pass


class PreconditionViolated(PreconditionError):
    pass


class BoundViolated(LinefieldError):
    """Certified bound failed after preconditions held: an implementation bug."""


class NotCauchy(PreconditionError):
    pass


# field-level

class ValidationError(InputError):
    def __init__(self, message, edges=()):
        super().__init__(message)
        self.edges = tuple(edges)


class LengthMismatch(PreconditionError):
    pass


class IndependenceLost(PreconditionError):
    def __init__(self, message, vertex=None):
        super().__init__(message)
        self.vertex = vertex


# bundle-level

class OverlapTooSmall(PreconditionError):
    def __init__(self, message, edge=None):
        super().__init__(message)
        self.edge = edge


class MarginTooSmall(PreconditionError):
    def __init__(self, message, triangle=None):
        super().__init__(message)
        self.triangle = triangle


class NontrivialClass(ObstructionFound):
    pass


class SpanNotLine(PreconditionError):
    def __init__(self, message, vertex=None):
        super().__init__(message)
        self.vertex = vertex


# closure-level

class EpsTooLarge(PreconditionError):
    pass


class InnerProductVanished(PreconditionError):
    def __init__(self, message, vertex=None):
        super().__init__(message)
        self.vertex = vertex


class ObstructedOnCompact(ObstructionFound):
    def __init__(self, message, stage=None, certificate=None):
        super().__init__(message, certificate)
        self.stage = stage


# telescope-level

class SizeCap(PreconditionError):
    pass


class UnsupportedTail(PreconditionError):
    pass
