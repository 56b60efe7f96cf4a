"""Exception hierarchy shared by all modules."""


class MatchstabError(Exception):
    """Base class for library errors."""


class InputError(MatchstabError, ValueError):
    """Malformed or inconsistent input (unknown node, bad file, wrong graph class...)."""


class ResourceError(MatchstabError):
    """An enumeration guard was exceeded."""


class ReversibilityError(InputError):
    """Detailed balance does not hold for a (walk, measure) pair."""

    def __init__(self, message, edge=None):
        super().__init__(message)
        self.edge = edge
