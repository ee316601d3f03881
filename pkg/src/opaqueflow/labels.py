"""Taint propagation and the runtime's opaque handle table."""

import logging
import secrets
import threading
from collections.abc import Iterable

from opaqueflow.errors import HandleUnknownError
from opaqueflow.models import OpaqueHandle, TaintSet

logger = logging.getLogger(__name__)


def taint_union(a: TaintSet, b: TaintSet) -> TaintSet:
    """Union of two taint sets."""
    return a.union(b)


def taint_union_all(sets: Iterable[TaintSet]) -> TaintSet:
    result = TaintSet()
    for taints in sets:
        result = result.union(taints)
    return result


class HandleTable:
    """
    Owner of every payload a runtime has produced.

    Handles are minted with random lowercase hex ids and stay live for the
    lifetime of the table. A handle is only honoured if both its id and its
    taint set match what the table minted, so a hand-built OpaqueHandle with
    a real id but fewer taints is rejected as unknown.
    """

    def __init__(self, handle_bytes: int = 16):
        self.handle_bytes = handle_bytes
        self._entries: dict[str, tuple[TaintSet, bytes]] = {}
        self._lock = threading.Lock()

    def mint(self, taints: TaintSet, payload: bytes) -> OpaqueHandle:
        with self._lock:
            handle_id = secrets.token_hex(self.handle_bytes)
            while handle_id in self._entries:
                handle_id = secrets.token_hex(self.handle_bytes)
            self._entries[handle_id] = (taints, payload)
        logger.debug("minted handle %s taints=%s", handle_id[:8], taints.render())
        return OpaqueHandle(handle_id=handle_id, taints=taints)

    def _lookup(self, handle: OpaqueHandle) -> tuple[TaintSet, bytes]:
        with self._lock:
            entry = self._entries.get(handle.handle_id)
        if entry is None or entry[0] != handle.taints:
            raise HandleUnknownError(handle.handle_id)
        return entry

    def taints_of(self, handle: OpaqueHandle) -> TaintSet:
        return self._lookup(handle)[0]

    def _payload_of(self, handle: OpaqueHandle) -> bytes:
        """Raw payload. Only the sandbox layer reads this."""
        return self._lookup(handle)[1]

    def __contains__(self, handle: object) -> bool:
        if not isinstance(handle, OpaqueHandle):
            return False
        try:
            self._lookup(handle)
        except HandleUnknownError:
            return False
        return True

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)


def handle_taints(table: HandleTable, handle: OpaqueHandle) -> TaintSet:
    """Taint set of a live handle; never exposes the payload."""
    return table.taints_of(handle)
