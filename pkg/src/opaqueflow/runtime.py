"""One runtime instance: handles, QMs, sensitive fields and the sink gateway."""

from collections.abc import Iterable
from typing import Any, Optional

from opaqueflow.labels import HandleTable
from opaqueflow.models import Manifest, OpaqueHandle, SinkAttempt, TaintSet
from opaqueflow.sandbox import QmFunction, QmRegistry, qm_call
from opaqueflow.sensitive_store import SensitiveStore
from opaqueflow.transports import Transport, create_transport_from_config
from opaqueflow.trusted_api import TrustedApi


class FlowRuntime:
    """
    The trusted service for one app.

    Owns the handle table, the QM registry, the sensitive field store and
    the trusted API, all bound to a single immutable manifest.
    """

    def __init__(
        self,
        manifest: Manifest,
        transport: Optional[Transport] = None,
        handle_bytes: int = 16,
    ):
        self.manifest = manifest
        self.handles = HandleTable(handle_bytes=handle_bytes)
        self.registry = QmRegistry()
        self.store = SensitiveStore(manifest.declared_labels)
        self.trusted_api = TrustedApi(manifest, transport)

    @classmethod
    def from_config(
        cls, manifest: Manifest, config: dict, transport_kind: Optional[str] = None
    ) -> "FlowRuntime":
        """Build a runtime whose transport and handle size come from settings."""
        return cls(
            manifest,
            transport=create_transport_from_config(config, transport_kind),
            handle_bytes=int(config.get("runtime", {}).get("handle_bytes", 16)),
        )

    def register_qm(self, name: str, fn: QmFunction) -> None:
        self.registry.register(name, fn)

    def qm_call(self, name: str, args: Iterable[Any] = ()) -> OpaqueHandle:
        return qm_call(self, name, args)

    def handle_taints(self, handle: OpaqueHandle) -> TaintSet:
        return self.handles.taints_of(handle)

    def set_transport(self, transport: Transport) -> None:
        self.trusted_api.set_transport(transport)

    def attempt_log(self) -> list[SinkAttempt]:
        return self.trusted_api.attempt_log()
