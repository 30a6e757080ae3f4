"""Sandboxed local-API surface: clipboard, scoped files, store, message bus.

Access is decided by origin alone: application-origin contexts (installed
apps) get every capability; network-origin contexts get network access
only. Every operation checks its capability before touching the
filesystem, so a denied call has no side effects.

On-disk surfaces under the runtime home:
  clipboard.txt              runtime-global clipboard (exact contents)
  bus/<channel>.log          append-only message log, one record per line
  apps/<id>/data/store.tsv   per-app key-value store, rewritten atomically
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from pathlib import Path
from urllib.parse import urlsplit

from .errors import (
    BadChannel,
    BadKey,
    BadUrl,
    IoFailure,
    NotFound,
    NotInstalled,
    PathEscape,
    SandboxDenied,
)
from .fsutil import (
    atomic_write_bytes,
    check_rel_path,
    format_utc,
    locked_file,
    parse_utc,
    percent_decode,
    percent_encode,
    utc_now,
)
from .installer import Registry, get_installed

CHANNEL_RE = re.compile(r"^[A-Za-z0-9._-]{1,64}$")


class Capability(Enum):
    FILE_READ = "file_read"
    FILE_WRITE = "file_write"
    CLIPBOARD = "clipboard"
    LOCAL_STORE = "local_store"
    BUS = "bus"
    NETWORK = "network"


class Access(Enum):
    ALLOW = "allow"
    DENY = "deny"


@dataclass(frozen=True)
class ApplicationOrigin:
    app_id: str


@dataclass(frozen=True)
class NetworkOrigin:
    url: str


Origin = ApplicationOrigin | NetworkOrigin


@dataclass(frozen=True)
class SandboxContext:
    origin: Origin
    home: Path
    data_dir: Path | None  # None for network origins (no local scope)


@dataclass(frozen=True)
class BusMessage:
    seq: int
    sender: str
    at: datetime
    payload: str


def open_context(origin: Origin, registry: Registry) -> SandboxContext:
    """Bind an origin to the registry; application ids must be installed."""
    if isinstance(origin, ApplicationOrigin):
        app = get_installed(registry, origin.app_id)
        if app is None:
            raise NotInstalled(f"{origin.app_id} is not installed")
        return SandboxContext(origin=origin, home=registry.root, data_dir=app.data_dir)
    parts = urlsplit(origin.url)
    if not parts.scheme or not parts.netloc:
        raise BadUrl(f"not an absolute URL: {origin.url!r}")
    return SandboxContext(origin=origin, home=registry.root, data_dir=None)


def check_access(ctx: SandboxContext, cap: Capability) -> Access:
    """The full decision matrix: installed apps get everything, network
    content gets network access only."""
    if isinstance(ctx.origin, ApplicationOrigin):
        return Access.ALLOW
    return Access.ALLOW if cap is Capability.NETWORK else Access.DENY


def _require(ctx: SandboxContext, cap: Capability) -> None:
    if check_access(ctx, cap) is Access.DENY:
        raise SandboxDenied(f"origin denied capability {cap.value}")


# -- clipboard -------------------------------------------------------------

def clipboard_path(home: Path) -> Path:
    return Path(home) / "clipboard.txt"


def clipboard_read(home: Path) -> str | None:
    """Unsandboxed read used by the runtime itself; empty counts as unset."""
    path = clipboard_path(home)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        return None
    except OSError as exc:
        raise IoFailure(str(exc)) from None
    return text if text else None


def clipboard_write(home: Path, text: str) -> None:
    try:
        atomic_write_bytes(clipboard_path(home), text.encode("utf-8"))
    except OSError as exc:
        raise IoFailure(str(exc)) from None


def clipboard_get(ctx: SandboxContext) -> str | None:
    _require(ctx, Capability.CLIPBOARD)
    return clipboard_read(ctx.home)


def clipboard_set(ctx: SandboxContext, text: str) -> None:
    _require(ctx, Capability.CLIPBOARD)
    clipboard_write(ctx.home, text)


# -- scoped files ----------------------------------------------------------

def _scoped_path(ctx: SandboxContext, rel: str) -> Path:
    reason = check_rel_path(rel)
    if reason is not None:
        raise PathEscape(f"{rel!r}: {reason}")
    assert ctx.data_dir is not None  # capability check keeps network out
    target = ctx.data_dir / rel
    scope = os.path.realpath(ctx.data_dir)
    resolved = os.path.realpath(target)
    if resolved != scope and not resolved.startswith(scope + os.sep):
        raise PathEscape(f"{rel!r} resolves outside the data directory")
    return target


def file_read(ctx: SandboxContext, rel: str) -> bytes:
    _require(ctx, Capability.FILE_READ)
    target = _scoped_path(ctx, rel)
    try:
        return target.read_bytes()
    except FileNotFoundError:
        raise NotFound(f"no such file: {rel}") from None
    except OSError as exc:
        raise IoFailure(str(exc)) from None


def file_write(ctx: SandboxContext, rel: str, data: bytes) -> None:
    _require(ctx, Capability.FILE_WRITE)
    target = _scoped_path(ctx, rel)
    try:
        atomic_write_bytes(target, data)
    except OSError as exc:
        raise IoFailure(str(exc)) from None


# -- key-value store -------------------------------------------------------

def _check_key(key: str) -> None:
    if not key:
        raise BadKey("store key must not be empty")
    if any(ord(c) < 0x20 or ord(c) == 0x7F for c in key):
        raise BadKey("store key must not contain control characters")


def _store_path(ctx: SandboxContext) -> Path:
    assert ctx.data_dir is not None
    return ctx.data_dir / "store.tsv"


def _store_load(path: Path) -> dict[str, str]:
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        return {}
    except OSError as exc:
        raise IoFailure(str(exc)) from None
    table: dict[str, str] = {}
    for line in text.split("\n")[:-1]:
        fields = line.split("\t")
        if len(fields) != 2:
            raise IoFailure(f"corrupt store line: {line!r}")
        table[percent_decode(fields[0])] = percent_decode(fields[1])
    return table


def _store_save(path: Path, table: dict[str, str]) -> None:
    lines = [
        f"{percent_encode(key)}\t{percent_encode(table[key])}\n"
        for key in sorted(table, key=lambda k: k.encode("utf-8"))
    ]
    try:
        atomic_write_bytes(path, "".join(lines).encode("utf-8"))
    except OSError as exc:
        raise IoFailure(str(exc)) from None


def store_put(ctx: SandboxContext, key: str, value: str) -> None:
    _require(ctx, Capability.LOCAL_STORE)
    _check_key(key)
    path = _store_path(ctx)
    table = _store_load(path)
    table[key] = value
    _store_save(path, table)


def store_get(ctx: SandboxContext, key: str) -> str | None:
    _require(ctx, Capability.LOCAL_STORE)
    _check_key(key)
    return _store_load(_store_path(ctx)).get(key)


def store_delete(ctx: SandboxContext, key: str) -> None:
    """Idempotent: deleting an absent key is not an error."""
    _require(ctx, Capability.LOCAL_STORE)
    _check_key(key)
    path = _store_path(ctx)
    table = _store_load(path)
    if key in table:
        del table[key]
        _store_save(path, table)


def store_list(ctx: SandboxContext) -> list[str]:
    _require(ctx, Capability.LOCAL_STORE)
    table = _store_load(_store_path(ctx))
    return sorted(table, key=lambda k: k.encode("utf-8"))


# -- message bus -----------------------------------------------------------

def _channel_log(home: Path, channel: str) -> Path:
    if not CHANNEL_RE.match(channel):
        raise BadChannel(f"bad channel name: {channel!r}")
    return Path(home) / "bus" / f"{channel}.log"


def _complete_lines(data: bytes) -> list[bytes]:
    # Everything after the final newline is a partial record; ignore it.
    return data.split(b"\n")[:-1]


def _parse_record(line: bytes) -> BusMessage:
    fields = line.decode("utf-8").split("\t")
    if len(fields) != 4:
        raise IoFailure(f"corrupt bus record: {line!r}")
    try:
        seq = int(fields[0])
        at = parse_utc(fields[2])
    except ValueError:
        raise IoFailure(f"corrupt bus record: {line!r}") from None
    return BusMessage(seq=seq, sender=fields[1], at=at, payload=percent_decode(fields[3]))


def bus_publish(ctx: SandboxContext, channel: str, payload: str) -> int:
    """Append one record under an exclusive lock; returns the assigned seq."""
    _require(ctx, Capability.BUS)
    log = _channel_log(ctx.home, channel)
    log.parent.mkdir(parents=True, exist_ok=True)
    assert isinstance(ctx.origin, ApplicationOrigin)
    try:
        with locked_file(log) as fd:
            os.lseek(fd, 0, os.SEEK_SET)
            data = b""
            while True:
                chunk = os.read(fd, 1 << 20)
                if not chunk:
                    break
                data += chunk
            lines = _complete_lines(data)
            last_seq = _parse_record(lines[-1]).seq if lines else 0
            record = (
                f"{last_seq + 1}\t{ctx.origin.app_id}\t{format_utc(utc_now())}\t"
                f"{percent_encode(payload)}\n"
            )
            os.lseek(fd, 0, os.SEEK_END)
            os.write(fd, record.encode("utf-8"))
            os.fsync(fd)
    except OSError as exc:
        raise IoFailure(str(exc)) from None
    return last_seq + 1


def bus_poll(ctx: SandboxContext, channel: str, after_seq: int = 0) -> list[BusMessage]:
    """Messages with seq > after_seq in ascending order; no lock taken."""
    _require(ctx, Capability.BUS)
    log = _channel_log(ctx.home, channel)
    try:
        data = log.read_bytes()
    except FileNotFoundError:
        return []
    except OSError as exc:
        raise IoFailure(str(exc)) from None
    messages = [_parse_record(line) for line in _complete_lines(data)]
    return [m for m in messages if m.seq > after_seq]
