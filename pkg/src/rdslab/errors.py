"""Exception hierarchy shared by every module of the package."""


class RdsError(Exception):
    """Base class for all errors raised by rdslab."""


class TailOverflow(RdsError):
    """A noise draw fell in the neglected tail of the phase law (k > 33)."""


class IndexOverflow(RdsError):
    """A triangle index left the supported wide-integer range."""


class EmbedOverflow(RdsError):
    """A point is too tall to be embedded in double precision."""


class SetBlowup(RdsError):
    """The brute-force preimage set grew past its size cap."""


class SearchExhausted(RdsError):
    """No candidate within the search bounds met the target frequency."""


class ConfigError(RdsError):
    """An experiment configuration failed validation."""
