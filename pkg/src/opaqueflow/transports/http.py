"""Transport that performs real HTTP POSTs."""

import requests
from pydantic import Field

from opaqueflow.errors import TransportError
from opaqueflow.models import DeliveryResult, SinkKind
from opaqueflow.transports.base import Transport


class HttpTransport(Transport):
    """POST the canonical JSON payload to the destination URL."""

    name: str = "http"
    description: str = """
    Deliver NETWORK payloads with an HTTP POST. SMS is not supported.
    """

    timeout: int = Field(default=10, description="Request timeout in seconds")
    user_agent: str = Field(default="opaqueflow/0.1.0", description="User-Agent header")

    def deliver(self, sink: SinkKind, destination: str, payload: bytes) -> DeliveryResult:
        if sink != SinkKind.NETWORK:
            raise TransportError(f"{sink.value} delivery is not supported by the HTTP transport")

        headers = {
            "Content-Type": "application/json",
            "User-Agent": self.user_agent,
        }

        try:
            response = requests.post(
                destination,
                data=payload,
                headers=headers,
                timeout=self.timeout,
            )
            response.raise_for_status()
        except requests.exceptions.Timeout as e:
            raise TransportError(f"request to {destination} timed out") from e
        except requests.RequestException as e:
            raise TransportError(f"request to {destination} failed: {e}") from e

        return DeliveryResult(ok=True, detail=response.reason or "", status_code=response.status_code)
