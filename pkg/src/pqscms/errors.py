"""Exception hierarchy shared across the package."""


class ScmsError(Exception):
    """Base class for every error raised by :mod:`pqscms`."""


class UnsupportedScheme(ScmsError):
    pass


class BackendFailure(ScmsError):
    pass


class DecryptionFailure(ScmsError):
    pass


class InvalidPoint(ScmsError):
    pass


class FieldOverflow(ScmsError):
    pass


class DecodeError(ScmsError):
    pass


class SchemeMismatch(ScmsError):
    pass


class PolicyViolation(ScmsError):
    pass


class InvalidCount(ScmsError):
    pass


class SignatureInvalid(ScmsError):
    pass


class KeyMismatch(ScmsError):
    """A private key does not match the public key it should control."""


class ZeroKey(ScmsError):
    """A derived key collapsed to zero / the identity; the index must be re-requested."""


class ConfigError(ScmsError):
    pass
