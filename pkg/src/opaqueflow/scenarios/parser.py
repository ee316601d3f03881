"""
Scenario file parser.

A scenario is a line-oriented script. Lines are split with shell quoting
rules, `#` starts a comment, and `$name` refers to a handle bound earlier
with `call ... as name`.

    scenario login-ok
    manifest login.manifest
    field passwordUI Taint_UI
    set passwordUI hunter2
    call QM_getUIValue passwordUI as password
    post $password url http://appcloudserver.com
    expect delivered 1
"""

import re
import shlex
from pathlib import Path
from typing import Optional

from opaqueflow.errors import ScenarioError
from opaqueflow.models import (
    CallQm,
    Exfiltrate,
    ExpectBlocked,
    ExpectDelivered,
    ExpectDenied,
    ExpectUntrustedRead,
    NetworkPost,
    RegisterField,
    Scenario,
    ScenarioArg,
    SetValue,
    SmsSend,
    Step,
)

BUILTIN_DIR = Path(__file__).parent / "builtin"

VAR_PATTERN = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")

_COUNTED_EXPECTATIONS = {
    "delivered": ExpectDelivered,
    "denied": ExpectDenied,
    "blocked": ExpectBlocked,
}


class _ParseState:
    def __init__(self, base_dir: Path):
        self.base_dir = base_dir
        self.name: Optional[str] = None
        self.manifest_path: Optional[Path] = None
        self.fields: set[str] = set()
        self.variables: set[str] = set()
        self.steps: list[Step] = []


def _split(raw: str, lineno: int) -> list[str]:
    try:
        return shlex.split(raw, comments=True)
    except ValueError as e:
        raise ScenarioError(f"cannot tokenize line: {e}", lineno) from e


def _args(state: _ParseState, tokens: list[str], lineno: int) -> list[ScenarioArg]:
    args = []
    for token in tokens:
        if token.startswith("$"):
            var = token[1:]
            if not VAR_PATTERN.match(var):
                raise ScenarioError(f"invalid variable reference: {token}", lineno)
            if var not in state.variables:
                raise ScenarioError(f"variable ${var} used before it is bound", lineno)
            args.append(ScenarioArg(var=var))
        else:
            args.append(ScenarioArg(value=token))
    return args


def _known_field(state: _ParseState, field_id: str, lineno: int) -> str:
    if field_id not in state.fields:
        raise ScenarioError(f"field {field_id} is not registered", lineno)
    return field_id


def _with_keyword(tokens: list[str], keyword: str, lineno: int) -> tuple[list[str], str]:
    """Split `<directive> args... <keyword> <target>` into (args, target)."""
    if len(tokens) < 3 or tokens[-2] != keyword:
        raise ScenarioError(f"{tokens[0]} expects '... {keyword} <target>'", lineno)
    return tokens[1:-2], tokens[-1]


def _parse_line(state: _ParseState, tokens: list[str], lineno: int) -> None:
    directive = tokens[0]

    if state.name is None:
        if directive != "scenario" or len(tokens) != 2:
            raise ScenarioError("first directive must be 'scenario <name>'", lineno)
        state.name = tokens[1]
        return

    if directive == "scenario":
        raise ScenarioError("duplicate 'scenario' directive", lineno)

    if directive == "manifest":
        if len(tokens) != 2:
            raise ScenarioError("usage: manifest <path>", lineno)
        if state.manifest_path is not None:
            raise ScenarioError("duplicate 'manifest' directive", lineno)
        state.manifest_path = state.base_dir / tokens[1]
        return

    if state.manifest_path is None:
        raise ScenarioError(f"'{directive}' before 'manifest'", lineno)

    if directive == "field":
        if len(tokens) != 3:
            raise ScenarioError("usage: field <id> <label>", lineno)
        if tokens[1] in state.fields:
            raise ScenarioError(f"field {tokens[1]} registered twice", lineno)
        state.fields.add(tokens[1])
        state.steps.append(RegisterField(line=lineno, field_id=tokens[1], label_name=tokens[2]))

    elif directive == "set":
        if len(tokens) not in (2, 3):
            raise ScenarioError("usage: set <id> [<value>]", lineno)
        field_id = _known_field(state, tokens[1], lineno)
        value = tokens[2] if len(tokens) == 3 else ""
        state.steps.append(SetValue(line=lineno, field_id=field_id, value=value))

    elif directive == "call":
        if len(tokens) < 2:
            raise ScenarioError("usage: call <QM> [args...] [as <var>]", lineno)
        rest, bind_as = tokens[2:], None
        if len(rest) >= 2 and rest[-2] == "as":
            rest, bind_as = rest[:-2], rest[-1]
            if not VAR_PATTERN.match(bind_as):
                raise ScenarioError(f"invalid variable name: {bind_as}", lineno)
        args = _args(state, rest, lineno)
        if bind_as:
            state.variables.add(bind_as)
        state.steps.append(CallQm(line=lineno, qm=tokens[1], args=args, bind_as=bind_as))

    elif directive == "post":
        rest, url = _with_keyword(tokens, "url", lineno)
        state.steps.append(NetworkPost(line=lineno, args=_args(state, rest, lineno), url=url))

    elif directive == "sms":
        rest, number = _with_keyword(tokens, "to", lineno)
        state.steps.append(SmsSend(line=lineno, args=_args(state, rest, lineno), number=number))

    elif directive == "exfiltrate":
        rest, url = _with_keyword(tokens, "url", lineno)
        state.steps.append(Exfiltrate(line=lineno, args=_args(state, rest, lineno), url=url))

    elif directive == "expect":
        _parse_expect(state, tokens, lineno)

    else:
        raise ScenarioError(f"unknown directive '{directive}'", lineno)


def _parse_expect(state: _ParseState, tokens: list[str], lineno: int) -> None:
    if len(tokens) < 2:
        raise ScenarioError("usage: expect <what> ...", lineno)
    what = tokens[1]

    if what in _COUNTED_EXPECTATIONS:
        if len(tokens) != 3 or not tokens[2].isdigit():
            raise ScenarioError(f"usage: expect {what} <count>", lineno)
        state.steps.append(_COUNTED_EXPECTATIONS[what](line=lineno, count=int(tokens[2])))
        return

    if what == "untrusted-read":
        if len(tokens) not in (3, 4):
            raise ScenarioError('usage: expect untrusted-read <id> ["<value>"]', lineno)
        field_id = _known_field(state, tokens[2], lineno)
        expected = tokens[3] if len(tokens) == 4 else ""
        state.steps.append(ExpectUntrustedRead(line=lineno, field_id=field_id, expected=expected))
        return

    raise ScenarioError(f"unknown expectation '{what}'", lineno)


def parse_scenario(text: str, base_dir: Path | str = ".") -> Scenario:
    """
    Parse scenario text. The manifest path is resolved against base_dir.

    Raises:
        ScenarioError: with the 1-based line of the offending directive
    """
    state = _ParseState(Path(base_dir))

    for lineno, raw in enumerate(text.splitlines(), start=1):
        tokens = _split(raw, lineno)
        if tokens:
            _parse_line(state, tokens, lineno)

    if state.name is None:
        raise ScenarioError("missing 'scenario' directive")
    if state.manifest_path is None:
        raise ScenarioError("missing 'manifest' directive")

    return Scenario(name=state.name, manifest_path=state.manifest_path, steps=state.steps)


def load_scenario(path: Path | str) -> Scenario:
    path = Path(path)
    return parse_scenario(path.read_text(encoding="utf-8"), path.parent)


def builtin_scenarios() -> dict[str, Path]:
    """Name -> path of every scenario shipped with the package."""
    return {p.stem: p for p in sorted(BUILTIN_DIR.glob("*.scenario"))}


def resolve_scenario(name_or_path: str) -> Path:
    """A built-in scenario name, or else a filesystem path."""
    return builtin_scenarios().get(name_or_path, Path(name_or_path))
