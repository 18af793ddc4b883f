class DespeckleError(Exception):
    """Root of every error raised by the toolkit."""


class MalformedFile(DespeckleError, ValueError):
    pass


class UnsupportedDepth(DespeckleError, ValueError):
    pass


class DomainMismatch(DespeckleError, ValueError):
    pass


class DimensionMismatch(DespeckleError, ValueError):
    pass


class InvalidVariance(DespeckleError, ValueError):
    pass


class InvalidWindow(DespeckleError, ValueError):
    pass


class WindowTooLarge(DespeckleError, ValueError):
    pass


class MissingSeries(DespeckleError, ValueError):
    pass
