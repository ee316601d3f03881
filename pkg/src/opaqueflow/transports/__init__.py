"""Sink transports for the trusted API."""

from typing import Optional

from opaqueflow.config.loader import resolve_transport_kind
from opaqueflow.errors import InvalidArgumentError
from opaqueflow.models import TransportKind
from opaqueflow.transports.base import Transport
from opaqueflow.transports.http import HttpTransport
from opaqueflow.transports.recording import Delivery, RecordingTransport

__all__ = [
    "Delivery",
    "HttpTransport",
    "RecordingTransport",
    "Transport",
    "TransportKind",
    "create_transport_from_config",
]


def create_transport_from_config(config: dict, kind: Optional[str] = None) -> Transport:
    """
    Create a transport from configuration.

    Args:
        config: Settings dictionary
        kind: "fake" or "http"; defaults to OPAQUEFLOW_TRANSPORT / transport.kind

    Returns:
        Configured transport

    Raises:
        InvalidArgumentError: unknown transport kind
    """
    raw = (kind or resolve_transport_kind(config)).lower()
    try:
        transport_kind = TransportKind(raw)
    except ValueError:
        expected = ", ".join(k.value for k in TransportKind)
        raise InvalidArgumentError(f"unknown transport kind {raw!r}; expected one of {expected}") from None

    if transport_kind == TransportKind.FAKE:
        return RecordingTransport()

    http_config = config.get("transport", {}).get("http", {})
    return HttpTransport(
        timeout=int(http_config.get("timeout", 10)),
        user_agent=str(http_config.get("user_agent", "opaqueflow/0.1.0")),
    )
