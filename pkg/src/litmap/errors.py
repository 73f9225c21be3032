"""Exception hierarchy.

Every error carries the CLI exit code it maps to, so the command layer
never needs a lookup table.
"""


class LitmapError(Exception):
    exit_code = 4


class InputError(LitmapError):
    """Bad or unreadable input (exit 2)."""

    exit_code = 2


class PreconditionError(LitmapError):
    """Input is readable but a pipeline premise does not hold (exit 3)."""

    exit_code = 3


class NumericalError(LitmapError):
    """Degenerate numerics (exit 4)."""

    exit_code = 4


# input errors
class LengthMismatch(InputError):
    pass


class MalformedHeader(InputError):
    pass


class SizeMismatch(InputError):
    pass


class UnsupportedDataType(InputError):
    pass


class IoFailure(InputError):
    pass


class MissingEsun(InputError):
    pass


class SunBelowHorizon(InputError):
    pass


class EmptyLibrary(InputError):
    pass


class NonMonotonicWavelengths(InputError):
    pass


class RangeOutOfBounds(InputError):
    pass


class GridMismatch(InputError):
    pass


class InvalidSpec(InputError):
    pass


class SiteOutsideRaster(InputError):
    pass


class SiteOnNonSoilPixel(InputError):
    pass


class OutOfRangeBand(InputError):
    def __init__(self, bands, message=None):
        self.bands = list(bands)
        super().__init__(message or f"target bands outside source support: {self.bands}")


# precondition errors
class AlreadyReflectance(PreconditionError):
    pass


class TooFewPixels(PreconditionError):
    pass


class EmptyClass(PreconditionError):
    pass


class EmptySubclass(PreconditionError):
    def __init__(self, side, message=None):
        self.side = side
        super().__init__(message or f"subclass '{side}' is empty")


class EmptyBand(PreconditionError):
    def __init__(self, side, counts=None):
        self.side = side
        self.counts = counts or {}
        super().__init__(f"no pixels in the '{side}' relative-availability band; counts={self.counts}")


# numerical errors
class ZeroVector(NumericalError):
    pass


class ZeroVariance(NumericalError):
    pass


class RankDeficient(NumericalError):
    pass


class SingularScatter(NumericalError):
    pass


class DegenerateRepresentatives(NumericalError):
    pass


class IdenticalEndmembers(NumericalError):
    pass
