"""Exception hierarchy shared by all geoquery modules."""


class GeoQueryError(Exception):
    """Base class for all errors raised by this package."""

    code = "GeoQueryError"


class InputError(GeoQueryError):
    """A caller-supplied value violates a precondition."""

    code = "InputError"


class DimensionError(GeoQueryError):
    """Embedding dimensions disagree where they must match."""

    code = "DimensionError"


class DegenerateVectorError(GeoQueryError):
    """An all-zero vector was supplied where a direction is required."""

    code = "DegenerateVectorError"


class DegenerateInputError(GeoQueryError):
    """A statistic is undefined on the given input (e.g. constant series)."""

    code = "DegenerateInputError"


class DuplicateKeyError(GeoQueryError):
    """The same tile key appeared twice in a corpus or index build."""

    code = "DuplicateKeyError"


class FormatError(GeoQueryError):
    """A persisted artifact is malformed; carries an offset or ordinal when known."""

    code = "FormatError"

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message if offset is None else f"{message} (offset {offset})")
        self.offset = offset


class VersionError(GeoQueryError):
    """A persisted artifact was written by an incompatible format version."""

    code = "VersionError"


class ProviderUnavailable(GeoQueryError):
    """The remote embedding service could not be reached (retriable)."""

    code = "ProviderUnavailable"


class MissingDescriptionError(GeoQueryError):
    """A fixture describe oracle has no entry for a requested tile key."""

    code = "MissingDescriptionError"


class NotFoundError(GeoQueryError):
    """A tile key is absent from the corpus being queried."""

    code = "NotFoundError"


class NotReadyError(GeoQueryError):
    """The engine has no corpus loaded yet."""

    code = "NotReadyError"


class ConfigError(GeoQueryError):
    """An unknown search-configuration name was requested."""

    code = "ConfigError"


class EmptyResultError(GeoQueryError):
    """A query produced no results to score."""

    code = "EmptyResultError"


class AllCandidatesFailed(GeoQueryError):
    """Every prompt candidate errored during ranking."""

    code = "AllCandidatesFailed"
