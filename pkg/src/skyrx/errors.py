"""Shared exception types."""


class FormatError(ValueError):
    """A serialized artifact (file or packet) is malformed."""


class ProtocolError(ValueError):
    """Received frames/packets violate the link protocol."""
