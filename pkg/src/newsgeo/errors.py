"""Exception hierarchy shared across the package."""


class NewsGeoError(Exception):
    """Base class for all package errors."""


class ValidationError(NewsGeoError, ValueError):
    """A value violates a domain invariant."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class NoCandidatesError(NewsGeoError):
    """A geocoder received no places to work with."""


class DegenerateCentroidError(NewsGeoError):
    """The weighted mean falls on the rotation axis, so longitude is undefined."""


class BackendError(NewsGeoError):
    """Base for failures talking to an agent or service backend."""


class TransportError(BackendError):
    """The backend could not be reached or returned a non-success status."""


class MalformedResponseError(BackendError):
    """The backend answered, but the payload did not match the expected schema."""
