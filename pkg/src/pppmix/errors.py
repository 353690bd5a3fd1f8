"""Exception types shared across the package."""


class PppmixError(Exception):
    """Base class for every package-specific error."""


class DataFormatError(PppmixError):
    """Dataset or samples file does not match the expected CSV schema."""


class DegenerateDensityError(PppmixError):
    """A per-point mixture density underflowed to zero."""


class ZeroRangeError(PppmixError):
    """Data range is zero, so range-based hyperparameters are undefined."""


class SelectorMismatchError(PppmixError):
    """A penalty references a parameter the supplied values do not carry."""


class PenaltyParseError(PppmixError):
    """A penalty specification string does not match the grammar."""


class InvalidStateError(PppmixError):
    """The chain occupies a zero-penalty state, which must never happen."""


class InitializationError(PppmixError):
    """No penalty-admissible starting point found within the retry budget."""


class DegenerateSampleError(PppmixError):
    """Density estimation asked of a constant (or empty) sample."""


class UnknownColumnError(PppmixError):
    """A requested analysis column does not exist for these samples."""


class GridMismatchError(PppmixError):
    """Two density grids with different axes were combined."""


class AllCellsZeroError(PppmixError):
    """Every grid cell has zero posterior mass (e.g. threshold too wide)."""
