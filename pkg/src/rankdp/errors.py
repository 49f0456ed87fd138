"""Exception types shared across the package."""


class RankDPError(Exception):
    """Base class for all rankdp errors."""


class NotAPermutation(RankDPError):
    """Raw rank vector is not a permutation of 1..m."""


class TooShort(RankDPError):
    """Rankings need at least two items."""


class SizeMismatch(RankDPError):
    """Two rankings (or a ranking and a mechanism) disagree on item count."""


class CapExceeded(RankDPError):
    """Requested an enumeration beyond the configured cap."""


class StageOutOfRange(RankDPError):
    """Stage index t must satisfy 2 <= t <= m."""


class NonFiniteScore(RankDPError):
    """Score vector contains NaN or infinity."""


class ZeroSamples(RankDPError):
    """Empirical estimate requested with no samples."""


class EmptySample(RankDPError):
    """Aggregation requested over an empty collection of rankings."""


class BadDimensions(RankDPError):
    """Dataset dimensions are inconsistent or too small."""


class NonFiniteLoss(RankDPError):
    """Training loss or gradient overflowed."""


class Diverged(RankDPError):
    """Training produced non-finite parameters."""


class EmptyTestSet(RankDPError):
    """Evaluation requested on an empty test set."""


class UnknownItemId(RankDPError):
    """Requested item id does not occur in the ingested file."""


class ParseError(RankDPError):
    """Malformed input file; carries the 1-based line number."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number
