"""Exception hierarchy shared by the library and the command line."""


class RandomFamilyError(Exception):
    """Base class for all errors raised by :mod:`randfam`."""


class DomainError(RandomFamilyError, ValueError):
    """An argument lies outside the domain of the requested operation."""


class DegenerateInputError(DomainError):
    """Input data has zero spread where a statistic needs spread."""


class CountRangeError(DomainError, OverflowError):
    """An exact count would exceed the supported unsigned 128-bit range."""


class SizeRefusalError(RandomFamilyError):
    """Exhaustive enumeration was refused because the family is too large."""


class InputFormatError(RandomFamilyError, ValueError):
    """A data file could not be parsed."""
