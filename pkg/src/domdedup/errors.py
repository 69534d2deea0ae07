"""Exception types raised by the dedup pipeline."""


class DedupError(Exception):
    """Base class for all errors raised by domdedup."""


class InputEmpty(DedupError):
    pass


class EncodingError(DedupError):
    pass


class InvalidParam(DedupError, ValueError):
    pass


class BothEmpty(DedupError, ValueError):
    """Jaccard similarity of two empty sets is undefined."""


class EmptySet(DedupError, ValueError):
    pass


class FamilyMismatch(DedupError, ValueError):
    """Sketches or indexes built from different hash families were mixed."""


class DuplicateId(DedupError, KeyError):
    pass


class MissingLabel(DedupError, KeyError):
    pass
