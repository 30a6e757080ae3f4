"""Built-in feed reader engine: resolve a feed URL, fetch, parse, render.

A packaged app whose entry file ends in ``.feedapp`` is interpreted by
this engine. The config is line-oriented ``key=value`` text::

    engine=feedreader
    source=clipboard            # or source=url:http://example.net/feed
    output=html                 # optional, html (default) or text

The clipboard source reproduces the runtime's signature trick: the feed
URL is taken from the clipboard, and an empty clipboard aborts with the
exact user message in EMPTY_CLIPBOARD_MESSAGE before any network I/O.
"""

from __future__ import annotations

import socket
import urllib.error
import urllib.request
from dataclasses import dataclass
from enum import Enum
from urllib.parse import urljoin, urlsplit

from .errors import (
    BadConfig,
    BadUrl,
    BodyTooLarge,
    ConnectFailure,
    EmptyClipboard,
    FetchTimeout,
    HttpStatus,
    MiniairError,
    SandboxDenied,
    StageError,
    TooManyRedirects,
    WrongEngine,
)
from .rss import parse_feed, render_feed_html, render_feed_text
from .runtime_api import ApplicationOrigin, SandboxContext, clipboard_get, store_put

ENGINE_NAME = "feedreader"
APP_EXTENSION = ".feedapp"
EMPTY_CLIPBOARD_MESSAGE = "Please copy a RSS feed link to the clipboard."

_REDIRECT_CODES = (301, 302, 303, 307, 308)


class OutputMode(Enum):
    HTML = "html"
    TEXT = "text"


@dataclass(frozen=True)
class ClipboardSource:
    pass


@dataclass(frozen=True)
class UrlSource:
    url: str


FeedSource = ClipboardSource | UrlSource


@dataclass(frozen=True)
class FeedAppConfig:
    source: FeedSource
    output: OutputMode = OutputMode.HTML


@dataclass(frozen=True)
class FetchPolicy:
    max_redirects: int = 5
    timeout: float = 10.0
    max_body: int = 8 * 1024 * 1024

    def __post_init__(self) -> None:
        if self.max_redirects <= 0 or self.timeout <= 0 or self.max_body <= 0:
            raise ValueError("fetch policy values must be strictly positive")


def _is_http_url(text: str) -> bool:
    if any(c.isspace() or ord(c) < 0x20 for c in text):
        return False
    parts = urlsplit(text)
    return parts.scheme in ("http", "https") and bool(parts.netloc)


def parse_feedapp_config(data: bytes) -> FeedAppConfig:
    """Parse a .feedapp entry file; unknown or duplicate keys are errors."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError:
        raise BadConfig("config is not UTF-8") from None
    seen: dict[str, str] = {}
    for line in text.split("\n"):
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise BadConfig(f"expected key=value: {line!r}")
        if key in seen:
            raise BadConfig(f"duplicate key: {key!r}")
        if key not in ("engine", "source", "output"):
            raise BadConfig(f"unknown key: {key!r}")
        seen[key] = value

    engine = seen.get("engine")
    if engine is None:
        raise BadConfig("missing engine")
    if engine != ENGINE_NAME:
        raise WrongEngine(f"engine {engine!r} is not provided by this runtime")

    source_text = seen.get("source")
    if source_text is None:
        raise BadConfig("missing source")
    source: FeedSource
    if source_text == "clipboard":
        source = ClipboardSource()
    elif source_text.startswith("url:"):
        url = source_text[len("url:"):]
        if not _is_http_url(url):
            raise BadConfig(f"source url is not an absolute http(s) URL: {url!r}")
        source = UrlSource(url)
    else:
        raise BadConfig(f"source must be 'clipboard' or 'url:<URL>': {source_text!r}")

    output = OutputMode.HTML
    if "output" in seen:
        try:
            output = OutputMode(seen["output"])
        except ValueError:
            raise BadConfig(f"output must be 'html' or 'text': {seen['output']!r}") from None
    return FeedAppConfig(source=source, output=output)


def resolve_feed_url(ctx: SandboxContext, cfg: FeedAppConfig) -> str:
    """The URL to fetch: configured directly, or read from the clipboard."""
    if isinstance(cfg.source, UrlSource):
        return cfg.source.url
    text = clipboard_get(ctx)
    if text is None:
        raise EmptyClipboard(EMPTY_CLIPBOARD_MESSAGE)
    if not _is_http_url(text):
        raise BadUrl(f"clipboard does not hold an absolute http(s) URL: {text!r}")
    return text


class _NoRedirect(urllib.request.HTTPRedirectHandler):
    def redirect_request(self, req, fp, code, msg, headers, newurl):  # noqa: N802
        return None


def fetch_url(url: str, policy: FetchPolicy) -> bytes:
    """HTTP GET with bounded redirects, deadline, and body size."""
    opener = urllib.request.build_opener(_NoRedirect())
    current = url
    for _ in range(policy.max_redirects + 1):
        if not _is_http_url(current):
            raise BadUrl(f"not an absolute http(s) URL: {current!r}")
        request = urllib.request.Request(
            current, method="GET", headers={"User-Agent": "miniair/0.1"}
        )
        try:
            response = opener.open(request, timeout=policy.timeout)
        except urllib.error.HTTPError as exc:
            if exc.code in _REDIRECT_CODES:
                location = exc.headers.get("Location")
                exc.close()
                if location is None:
                    raise HttpStatus(exc.code) from None
                current = urljoin(current, location)
                continue
            exc.close()
            raise HttpStatus(exc.code) from None
        except urllib.error.URLError as exc:
            if isinstance(exc.reason, (socket.timeout, TimeoutError)):
                raise FetchTimeout(str(exc.reason)) from None
            raise ConnectFailure(str(exc.reason)) from None
        except (socket.timeout, TimeoutError) as exc:
            raise FetchTimeout(str(exc)) from None
        except OSError as exc:
            raise ConnectFailure(str(exc)) from None

        with response:
            if response.status != 200:
                raise HttpStatus(response.status)
            try:
                body = response.read(policy.max_body + 1)
            except (socket.timeout, TimeoutError) as exc:
                raise FetchTimeout(str(exc)) from None
            except OSError as exc:
                raise ConnectFailure(str(exc)) from None
        if len(body) > policy.max_body:
            raise BodyTooLarge(f"body exceeds {policy.max_body} bytes")
        return body
    raise TooManyRedirects(f"more than {policy.max_redirects} redirects")


def run_feed_app(
    ctx: SandboxContext, cfg: FeedAppConfig, policy: FetchPolicy | None = None
) -> str:
    """Full pipeline; failures carry the stage that raised them.

    Remembers the resolved URL under the store key ``last_feed``. No
    network I/O happens unless URL resolution succeeds.
    """
    policy = policy or FetchPolicy()
    if not isinstance(ctx.origin, ApplicationOrigin):
        raise SandboxDenied("the feed app requires an application-origin context")

    def stage(name, thunk):
        try:
            return thunk()
        except MiniairError as exc:
            raise StageError(name, exc) from exc

    url = stage("resolve", lambda: resolve_feed_url(ctx, cfg))
    stage("store", lambda: store_put(ctx, "last_feed", url))
    body = stage("fetch", lambda: fetch_url(url, policy))
    feed = stage("parse", lambda: parse_feed(body))
    if cfg.output is OutputMode.TEXT:
        return render_feed_text(feed)
    return render_feed_html(feed)
