"""Filesystem and encoding helpers shared across the toolkit."""

from __future__ import annotations

import fcntl
import hashlib
import os
import tempfile
from contextlib import contextmanager
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterator


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def atomic_write_bytes(path: Path, data: bytes) -> None:
    """Write data to path via a same-directory temp file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


@contextmanager
def locked_file(path: Path, exclusive: bool = True) -> Iterator[int]:
    """Hold an advisory flock on path (created if absent)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd = os.open(path, os.O_CREAT | os.O_RDWR, 0o644)
    try:
        fcntl.flock(fd, fcntl.LOCK_EX if exclusive else fcntl.LOCK_SH)
        yield fd
    finally:
        fcntl.flock(fd, fcntl.LOCK_UN)
        os.close(fd)


def utc_now() -> datetime:
    """Current UTC time at second precision."""
    return datetime.now(timezone.utc).replace(microsecond=0)


def format_utc(dt: datetime) -> str:
    """RFC 3339 with Z suffix, second precision."""
    return dt.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_utc(text: str) -> datetime:
    """Parse the exact format produced by format_utc; raises ValueError."""
    return datetime.strptime(text, "%Y-%m-%dT%H:%M:%SZ").replace(tzinfo=timezone.utc)


# Percent-encoding for TSV-hosted text: the four bytes that would break a
# tab-separated, line-oriented record. Decode must expand %25 last.
_ENCODE = (("%", "%25"), ("\t", "%09"), ("\n", "%0A"), ("\r", "%0D"))


def percent_encode(text: str) -> str:
    for raw, enc in _ENCODE:
        text = text.replace(raw, enc)
    return text


def percent_decode(text: str) -> str:
    for raw, enc in reversed(_ENCODE):
        text = text.replace(enc, raw)
    return text


def check_rel_path(path: str) -> str | None:
    """Validate a package-relative path; returns a reason string or None.

    Rules: nonempty, '/' separators only, no leading '/', no empty, '.'
    or '..' segments, no backslash, no control characters.
    """
    if not path:
        return "empty path"
    if path.startswith("/"):
        return "leading '/'"
    if "\\" in path:
        return "backslash separator"
    if any(ord(c) < 0x20 or ord(c) == 0x7F for c in path):
        return "control character"
    for segment in path.split("/"):
        if not segment:
            return "empty segment"
        if segment == ".":
            return "'.' segment"
        if segment == "..":
            return "'..' segment"
    return None
