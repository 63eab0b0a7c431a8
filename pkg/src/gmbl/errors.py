"""Exception hierarchy shared by every gmbl module."""


class GmblError(Exception):
    """Base class; the CLI maps these to exit code 1."""


class NumericalError(GmblError):
    """Linear-algebra failure; the CLI maps these to exit code 2."""


class MismatchedSampleCount(GmblError):
    pass


class NonFiniteEntry(GmblError):
    pass


class MissingView(GmblError):
    pass


class AnchorCountExceedsSamples(GmblError):
    pass


class NonPositiveKernelWidth(GmblError):
    pass


class NeighborCountTooLarge(GmblError):
    pass


class WeightsNotSimplex(GmblError):
    pass


class TooManyClusters(GmblError):
    pass


class LengthMismatch(GmblError):
    pass


class ViewOutOfRange(GmblError):
    pass


class ConfigError(GmblError):
    pass


class SingularLocalGram(NumericalError):
    pass


class SingularNormalMatrix(NumericalError):
    pass
