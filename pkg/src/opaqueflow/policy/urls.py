"""URL normalization and endpoint-filter matching for NETWORK rules."""

import ipaddress
import re
from urllib.parse import urlsplit

from opaqueflow.errors import (
    EmptyHostError,
    InvalidHostError,
    MalformedPortError,
    UnsupportedSchemeError,
    UrlError,
    UserInfoRejectedError,
)
from opaqueflow.models import NormalizedUrl, UrlFilter

DEFAULT_PORTS = {"http": 80, "https": 443}

_DNS_LABEL = re.compile(r"[a-z0-9_](?:[a-z0-9_-]{0,61}[a-z0-9_])?")


def _remove_dot_segments(path: str) -> str:
    """Resolve "." and ".." segments of an absolute path without decoding it."""
    if not path:
        return "/"
    segments = path.split("/")
    output: list[str] = []
    for segment in segments[1:]:
        if segment == ".":
            continue
        if segment == "..":
            if output:
                output.pop()
            continue
        output.append(segment)
    result = "/" + "/".join(output)
    if segments[-1] in (".", "..") and not result.endswith("/"):
        result += "/"
    return result


def _check_host(host: str, raw: str) -> str:
    host = host.rstrip(".")
    if not host:
        raise EmptyHostError(f"empty host in {raw!r}")
    if re.fullmatch(r"[0-9.]+", host):
        try:
            ipaddress.IPv4Address(host)
        except ValueError as e:
            raise InvalidHostError(f"invalid IPv4 literal {host!r}") from e
        return host
    if len(host) > 253 or not all(_DNS_LABEL.fullmatch(label) for label in host.split(".")):
        raise InvalidHostError(f"invalid host {host!r}")
    return host


def normalize_url(raw: str) -> NormalizedUrl:
    """
    Bring a URL into canonical form.

    Scheme and host are lowercased, the default port is made explicit,
    dot segments are resolved, an empty path becomes "/", the fragment is
    dropped and the query is kept verbatim.

    Raises:
        UnsupportedSchemeError: scheme other than http/https
        EmptyHostError: no host
        MalformedPortError: non-numeric or out-of-range port
        UserInfoRejectedError: credentials embedded in the URL
        InvalidHostError: host that is neither a DNS name nor IPv4
    """
    text = raw.strip()
    try:
        parts = urlsplit(text)
    except ValueError as e:
        raise UrlError(f"unparseable URL {raw!r}: {e}") from e

    scheme = parts.scheme.lower()
    if scheme not in DEFAULT_PORTS:
        raise UnsupportedSchemeError(f"unsupported scheme {parts.scheme!r} in {raw!r}")

    if "@" in parts.netloc:
        raise UserInfoRejectedError(f"credentials in URL are refused: {scheme}://…@{parts.hostname}")

    if parts.netloc.startswith("["):
        raise InvalidHostError(f"IPv6 literals are not supported: {raw!r}")

    host = _check_host((parts.hostname or "").lower(), raw)

    if parts.netloc.endswith(":"):
        raise MalformedPortError(f"empty port in {raw!r}")

    try:
        port = parts.port
    except ValueError as e:
        raise MalformedPortError(f"malformed port in {raw!r}") from e
    if port is None:
        port = DEFAULT_PORTS[scheme]
    if not 1 <= port <= 65535:
        raise MalformedPortError(f"port {port} out of range in {raw!r}")

    return NormalizedUrl(
        scheme=scheme,
        host=host,
        port=port,
        path=_remove_dot_segments(parts.path),
        query=parts.query,
    )


def parse_filter(raw: str) -> UrlFilter:
    """Normalize a rule's URL filter; filters name endpoints, not queries."""
    url = normalize_url(raw)
    if url.query:
        raise UrlError(f"URL filter must not carry a query: {raw!r}")
    return UrlFilter(scheme=url.scheme, host=url.host, port=url.port, path_prefix=url.path)


def filter_matches(url_filter: UrlFilter, url: NormalizedUrl) -> bool:
    """
    Exact scheme, host and port; path prefix on a segment boundary.

    "/a" matches "/a" and "/a/b" but not "/ab".
    """
    if (url_filter.scheme, url_filter.host, url_filter.port) != (url.scheme, url.host, url.port):
        return False
    prefix = url_filter.path_prefix.rstrip("/")
    if not prefix:
        return True
    return url.path == prefix or url.path.startswith(prefix + "/")
