"""Quarantine Modules available to every scenario runtime."""

from typing import Any

from opaqueflow.sandbox import QmRegistry, SandboxContext


def qm_get_ui_value(ctx: SandboxContext, field_id: str) -> str:
    """Read a sensitive UI field through the trusted API."""
    return ctx.get_text(field_id)


def qm_login(ctx: SandboxContext, email: str, password: str, url: str) -> None:
    """Continue the log-in process by posting the credentials to url."""
    ctx.network_post([email, password], url)


def qm_concat(ctx: SandboxContext, *parts: Any) -> str:
    return "".join(str(part) for part in parts)


def qm_network_post(ctx: SandboxContext, url: str, *payload: Any) -> None:
    ctx.network_post(list(payload), url)


def qm_sms_send(ctx: SandboxContext, number: str, *payload: Any) -> None:
    ctx.sms_send(list(payload), number)


BUILTIN_QMS = {
    "QM_getUIValue": qm_get_ui_value,
    "QM_login": qm_login,
    "QM_concat": qm_concat,
    "QM_networkPost": qm_network_post,
    "QM_smsSend": qm_sms_send,
}


def register_builtin_qms(registry: QmRegistry) -> None:
    for name, fn in BUILTIN_QMS.items():
        registry.register(name, fn)
