"""Key-value store of sensitive UI field values.

Each field is a `<id, sensitive_value, taint_label>` triple. Anyone may
write a field (that is the user typing); only code running inside a QM can
read it back, and doing so taints the QM's result with the field's label.
"""

from __future__ import annotations

import logging
import threading
from collections.abc import Iterable
from typing import TYPE_CHECKING

from opaqueflow.errors import DuplicateFieldError, UndeclaredLabelError, UnknownFieldError
from opaqueflow.models import SensitiveEntry, TaintLabel, TaintSet

if TYPE_CHECKING:
    from opaqueflow.sandbox import SandboxContext

logger = logging.getLogger(__name__)


class SensitiveStore:
    """Sensitive field values, readable only through a live sandbox context."""

    def __init__(self, declared_labels: Iterable[TaintLabel] = ()):
        self._declared = frozenset(declared_labels)
        self._entries: dict[str, SensitiveEntry] = {}
        self._lock = threading.Lock()

    def register_field(self, field_id: str, label: TaintLabel) -> None:
        if label not in self._declared:
            raise UndeclaredLabelError(str(label))
        with self._lock:
            if field_id in self._entries:
                raise DuplicateFieldError(field_id)
            self._entries[field_id] = SensitiveEntry(field_id=field_id, label=label)
        logger.debug("registered sensitive field %s (%s)", field_id, label)

    def set_value(self, field_id: str, value: str) -> None:
        with self._lock:
            entry = self._entry(field_id)
            self._entries[field_id] = entry.model_copy(update={"value": str(value)})

    def get_text_untrusted(self, field_id: str) -> str:
        """What code outside a QM sees: always the empty string."""
        with self._lock:
            self._entry(field_id)
        return ""

    def trusted_get_text(self, ctx: "SandboxContext", field_id: str) -> str:
        ctx.ensure_live("sensitive read")
        with self._lock:
            entry = self._entry(field_id)
        ctx.acquire(TaintSet.of(entry.label))
        return entry.value

    def label_of(self, field_id: str) -> TaintLabel:
        with self._lock:
            return self._entry(field_id).label

    def field_ids(self) -> list[str]:
        with self._lock:
            return list(self._entries)

    def _entry(self, field_id: str) -> SensitiveEntry:
        entry = self._entries.get(field_id)
        if entry is None:
            raise UnknownFieldError(field_id)
        return entry


def register_field(store: SensitiveStore, field_id: str, label: TaintLabel) -> None:
    store.register_field(field_id, label)


def set_value(store: SensitiveStore, field_id: str, value: str) -> None:
    store.set_value(field_id, value)


def get_text_untrusted(store: SensitiveStore, field_id: str) -> str:
    return store.get_text_untrusted(field_id)


def trusted_get_text(ctx: "SandboxContext", store: SensitiveStore, field_id: str) -> str:
    return store.trusted_get_text(ctx, field_id)
