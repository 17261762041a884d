"""Exception hierarchy shared by all stdstate modules."""


class StdStateError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(StdStateError, ValueError):
    """Malformed input: non-unitary matrix, unnormalized pair, bad pattern, ..."""


class SizeError(StdStateError, ValueError):
    """Qubit count or index outside the supported range."""


class ScriptParseError(StdStateError, ValueError):
    """A gate script or state file could not be parsed."""


class DegenerateTrioError(StdStateError):
    """All three ratio tests compare two (numerically) zero products."""


class DegeneratePairError(StdStateError):
    """A level pair cannot be recovered because a reference coefficient is zero."""


class DegenerateLocationError(StdStateError):
    """A decomposition location has both branch amplitudes below the zero threshold."""

    def __init__(self, locations):
        self.locations = list(locations)
        super().__init__(f"{len(self.locations)} degenerate location(s), first: {self.locations[:3]}")


class NotStandardFormError(StdStateError):
    """The state has weight outside the even-parity subspace standard states live in."""


class FileFormatError(StdStateError, ValueError):
    """A state, spec or report file is unreadable or does not match its format."""
