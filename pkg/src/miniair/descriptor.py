"""Application descriptor: parse, validate, canonical serialization.

The descriptor is the XML file that names an application (id, name,
filename, version) and configures its initial window. Canonical bytes are
pinned exactly so package builds are deterministic: LF line endings,
2-space indentation, fixed element order, absent optionals omitted.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from . import xmlutil
from .errors import InvalidDescriptor, InvalidValue, MissingElement
from .fsutil import check_rel_path

ID_RE = re.compile(
    r"^[A-Za-z0-9]([A-Za-z0-9-]*[A-Za-z0-9])?"
    r"(\.[A-Za-z0-9]([A-Za-z0-9-]*[A-Za-z0-9])?)*$"
)
VERSION_RE = re.compile(r"^[0-9]+(\.[0-9]+){0,2}$")
MAX_ID_LENGTH = 212

# Violation codes reported by validate_descriptor.
BAD_ID = "BAD_ID"
EMPTY_NAME = "EMPTY_NAME"
BAD_FILENAME = "BAD_FILENAME"
BAD_VERSION = "BAD_VERSION"
BAD_CONTENT_PATH = "BAD_CONTENT_PATH"
TRANSPARENT_REQUIRES_CUSTOM_CHROME = "TRANSPARENT_REQUIRES_CUSTOM_CHROME"
BAD_DIMENSION = "BAD_DIMENSION"
WIDTH_BOUNDS = "WIDTH_BOUNDS"
HEIGHT_BOUNDS = "HEIGHT_BOUNDS"


class SystemChrome(Enum):
    STANDARD = "standard"
    NONE = "none"


@dataclass(frozen=True)
class WindowConfig:
    content: str
    system_chrome: SystemChrome = SystemChrome.STANDARD
    transparent: bool = False
    width: int | None = None
    height: int | None = None
    min_width: int | None = None
    min_height: int | None = None
    max_width: int | None = None
    max_height: int | None = None


@dataclass(frozen=True)
class AppDescriptor:
    id: str
    name: str
    filename: str
    version: str
    window: WindowConfig


# (element name, WindowConfig field) in canonical order.
_SIZE_ELEMENTS = (
    ("width", "width"),
    ("height", "height"),
    ("minWidth", "min_width"),
    ("minHeight", "min_height"),
    ("maxWidth", "max_width"),
    ("maxHeight", "max_height"),
)


def _filename_ok(filename: str) -> bool:
    if not filename:
        return False
    if "/" in filename or "\\" in filename or ".." in filename:
        return False
    if any(ord(c) < 0x20 or ord(c) == 0x7F for c in filename):
        return False
    return True


def parse_descriptor(xml: bytes) -> AppDescriptor:
    """Parse descriptor XML; structural and grammar errors raise here.

    Unknown elements are ignored. Missing window options default to
    standard chrome, opaque, no size constraints.
    """
    root = xmlutil.parse_xml(xml)
    if xmlutil.local_name(root.tag) != "application":
        raise MissingElement("application")

    def required_text(name: str) -> str:
        elem = xmlutil.first_child(root, name)
        if elem is None:
            raise MissingElement(f"application/{name}")
        return xmlutil.text_content(elem)

    app_id = required_text("id")
    if not ID_RE.match(app_id) or len(app_id) > MAX_ID_LENGTH:
        raise InvalidValue("application/id", "not a reverse-DNS identifier")
    name = required_text("name")
    if not name:
        raise InvalidValue("application/name", "empty name")
    filename = required_text("filename")
    if not _filename_ok(filename):
        raise InvalidValue("application/filename", "not a file-safe base name")
    version = required_text("version")
    if not VERSION_RE.match(version):
        raise InvalidValue("application/version", "not a dotted numeric version")

    window_elem = xmlutil.first_child(root, "initialWindow")
    if window_elem is None:
        raise MissingElement("application/initialWindow")
    content_elem = xmlutil.first_child(window_elem, "content")
    if content_elem is None:
        raise MissingElement("application/initialWindow/content")
    content = xmlutil.text_content(content_elem)
    reason = check_rel_path(content)
    if reason is not None:
        raise InvalidValue("application/initialWindow/content", reason)

    system_chrome = SystemChrome.STANDARD
    chrome_elem = xmlutil.first_child(window_elem, "systemChrome")
    if chrome_elem is not None:
        text = xmlutil.text_content(chrome_elem)
        try:
            system_chrome = SystemChrome(text)
        except ValueError:
            raise InvalidValue(
                "application/initialWindow/systemChrome",
                "expected 'standard' or 'none'",
            ) from None

    transparent = False
    transparent_elem = xmlutil.first_child(window_elem, "transparent")
    if transparent_elem is not None:
        text = xmlutil.text_content(transparent_elem)
        if text not in ("true", "false"):
            raise InvalidValue(
                "application/initialWindow/transparent", "expected 'true' or 'false'"
            )
        transparent = text == "true"

    sizes: dict[str, int | None] = {}
    for elem_name, field in _SIZE_ELEMENTS:
        size_elem = xmlutil.first_child(window_elem, elem_name)
        if size_elem is None:
            sizes[field] = None
            continue
        text = xmlutil.text_content(size_elem)
        if not re.match(r"^[0-9]+$", text) or int(text) < 1:
            raise InvalidValue(
                f"application/initialWindow/{elem_name}", "expected a positive integer"
            )
        sizes[field] = int(text)

    return AppDescriptor(
        id=app_id,
        name=name,
        filename=filename,
        version=version,
        window=WindowConfig(
            content=content,
            system_chrome=system_chrome,
            transparent=transparent,
            **sizes,
        ),
    )


def validate_descriptor(d: AppDescriptor) -> list[str]:
    """Check every invariant; returns violation codes (empty = valid)."""
    report: list[str] = []
    if not ID_RE.match(d.id) or len(d.id) > MAX_ID_LENGTH:
        report.append(BAD_ID)
    if not d.name:
        report.append(EMPTY_NAME)
    if not _filename_ok(d.filename):
        report.append(BAD_FILENAME)
    if not VERSION_RE.match(d.version):
        report.append(BAD_VERSION)
    if check_rel_path(d.window.content) is not None:
        report.append(BAD_CONTENT_PATH)
    if d.window.transparent and d.window.system_chrome is not SystemChrome.NONE:
        report.append(TRANSPARENT_REQUIRES_CUSTOM_CHROME)

    w = d.window
    dims = [w.width, w.height, w.min_width, w.min_height, w.max_width, w.max_height]
    if any(v is not None and v < 1 for v in dims):
        report.append(BAD_DIMENSION)

    def bounds_ok(lo: int | None, mid: int | None, hi: int | None) -> bool:
        for a, b in ((lo, mid), (mid, hi), (lo, hi)):
            if a is not None and b is not None and a > b:
                return False
        return True

    if not bounds_ok(w.min_width, w.width, w.max_width):
        report.append(WIDTH_BOUNDS)
    if not bounds_ok(w.min_height, w.height, w.max_height):
        report.append(HEIGHT_BOUNDS)
    return report


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def canonical_descriptor(d: AppDescriptor) -> bytes:
    """Serialize to the canonical byte form; requires a valid descriptor."""
    report = validate_descriptor(d)
    if report:
        raise InvalidDescriptor(", ".join(report))
    w = d.window
    lines = [
        "<application>",
        f"  <id>{_escape(d.id)}</id>",
        f"  <name>{_escape(d.name)}</name>",
        f"  <filename>{_escape(d.filename)}</filename>",
        f"  <version>{_escape(d.version)}</version>",
        "  <initialWindow>",
        f"    <content>{_escape(w.content)}</content>",
        f"    <systemChrome>{w.system_chrome.value}</systemChrome>",
        f"    <transparent>{'true' if w.transparent else 'false'}</transparent>",
    ]
    for elem_name, field in _SIZE_ELEMENTS:
        value = getattr(w, field)
        if value is not None:
            lines.append(f"    <{elem_name}>{value}</{elem_name}>")
    lines += ["  </initialWindow>", "</application>", ""]
    return "\n".join(lines).encode("utf-8")


def reverse_domain_id(host: str) -> str:
    """Reverse a hostname's labels: myname.mypage.com -> com.mypage.myname."""
    labels = host.split(".")
    if any(not label for label in labels):
        raise InvalidValue("host", "empty label")
    return ".".join(reversed(labels))
