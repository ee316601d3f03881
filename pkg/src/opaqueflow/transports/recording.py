"""In-memory transport that records every delivery."""

import threading
from typing import Optional

from pydantic import BaseModel, Field, PrivateAttr

from opaqueflow.errors import TransportError
from opaqueflow.models import DeliveryResult, SinkKind
from opaqueflow.transports.base import Transport


class Delivery(BaseModel):
    """One payload the transport accepted."""

    sink: SinkKind
    destination: str
    payload: bytes


class RecordingTransport(Transport):
    """Hermetic transport for scenarios and tests; nothing leaves the process."""

    name: str = "recording"
    description: str = """
    Record deliveries in an inspectable log instead of sending them.
    Set fail_with to make every delivery raise TransportError.
    """

    fail_with: Optional[str] = Field(
        default=None, description="If set, deliveries fail with this message"
    )
    deliveries: list[Delivery] = Field(default_factory=list)

    _lock: threading.Lock = PrivateAttr(default_factory=threading.Lock)

    def deliver(self, sink: SinkKind, destination: str, payload: bytes) -> DeliveryResult:
        if self.fail_with is not None:
            raise TransportError(self.fail_with)
        with self._lock:
            self.deliveries.append(Delivery(sink=sink, destination=destination, payload=payload))
        return DeliveryResult(ok=True, detail="recorded")

    def clear(self) -> None:
        with self._lock:
            self.deliveries.clear()

    def __len__(self) -> int:
        return len(self.deliveries)
