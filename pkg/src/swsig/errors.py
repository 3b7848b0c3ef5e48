"""Exception hierarchy shared by all swsig modules."""


class SwsigError(Exception):
    """Base class for library errors."""


class ConfigurationError(SwsigError, ValueError):
    """A configuration or parameter invariant was violated."""


class DegenerateInputError(SwsigError, ValueError):
    """Input carries no usable signal (e.g. zero power with finite SNR)."""


class DomainError(SwsigError, ValueError):
    """A value lies outside the domain of a conversion."""


class ModelMismatchError(SwsigError, ValueError):
    """A closed form was requested for a model it does not describe."""
