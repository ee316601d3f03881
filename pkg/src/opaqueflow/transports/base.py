"""Transport interface used by the trusted API to reach sinks."""

from abc import ABC, abstractmethod

from pydantic import BaseModel

from opaqueflow.models import DeliveryResult, SinkKind


class Transport(BaseModel, ABC):
    """
    Delivers an already-allowed payload to a sink destination.

    Only the trusted API calls deliver, and only for attempts whose
    Decision allowed the flow.
    """

    name: str = "transport"
    description: str = ""

    @abstractmethod
    def deliver(self, sink: SinkKind, destination: str, payload: bytes) -> DeliveryResult:
        """
        Deliver one payload.

        Args:
            sink: NETWORK or SMS
            destination: normalized URL or phone number
            payload: canonical JSON bytes

        Returns:
            DeliveryResult; raise TransportError on failure.
        """
