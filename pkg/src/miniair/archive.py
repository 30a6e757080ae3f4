"""The package container: build, read, extract, integrity-check.

Layout (bit-exact): magic ``MAIR``, format version as little-endian u16,
four length-prefixed sections (little-endian u64 length, then bytes) in
the order descriptor / manifest / certificate / signature, then the raw
content blobs concatenated in manifest order. No compression, no padding.

The manifest is line-oriented text: header ``MAIR-MANIFEST 1`` then one
``path<TAB>size<TAB>sha256hex`` line per file, strictly sorted by path
bytes. Because the signature covers the manifest bytes, parsing only
accepts the exact canonical form.
"""

from __future__ import annotations

import os
import re
import struct
from dataclasses import dataclass
from pathlib import Path

from .descriptor import AppDescriptor, canonical_descriptor, validate_descriptor
from .errors import (
    BadMagic,
    CertKeyMismatch,
    InvalidDescriptor,
    InvalidPath,
    IoFailure,
    ManifestFormat,
    MissingContentEntry,
    PathEscape,
    SectionOverflow,
    SortViolation,
    TrailingData,
    Truncated,
    UnsupportedFileType,
    UnsupportedVersion,
)
from .fsutil import check_rel_path, sha256_hex
from .signing import Certificate, KeyPair, canonical_certificate_bytes, sign_payload

MAGIC = b"MAIR"
FORMAT_VERSION = 1
MANIFEST_HEADER = b"MAIR-MANIFEST 1\n"

_DIGEST_RE = re.compile(r"^[0-9a-f]{64}$")
_SIZE_RE = re.compile(r"^(0|[1-9][0-9]*)$")


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    size: int
    digest: str


@dataclass(frozen=True)
class Manifest:
    entries: tuple[ManifestEntry, ...]


@dataclass
class PackageFile:
    descriptor_bytes: bytes
    manifest: Manifest
    certificate_bytes: bytes
    signature: bytes
    blobs: tuple[bytes, ...]


@dataclass(frozen=True)
class IntegrityEntry:
    path: str
    ok: bool
    reason: str | None = None  # "SizeMismatch" | "DigestMismatch" | "MissingBlob"


@dataclass(frozen=True)
class IntegrityReport:
    entries: tuple[IntegrityEntry, ...]
    ok: bool


def _check_entries(entries: tuple[ManifestEntry, ...]) -> None:
    previous: bytes | None = None
    for entry in entries:
        reason = check_rel_path(entry.path)
        if reason is not None:
            raise InvalidPath(f"{entry.path!r}: {reason}")
        if entry.size < 0:
            raise ManifestFormat(f"{entry.path!r}: negative size")
        if not _DIGEST_RE.match(entry.digest):
            raise ManifestFormat(f"{entry.path!r}: digest must be 64 lowercase hex chars")
        encoded = entry.path.encode("utf-8")
        if previous is not None and encoded <= previous:
            raise SortViolation(
                f"entries must be strictly sorted by path bytes ({entry.path!r})"
            )
        previous = encoded


def canonical_manifest_bytes(m: Manifest) -> bytes:
    """Serialize a manifest; rejects unsorted or malformed entries."""
    _check_entries(m.entries)
    out = [MANIFEST_HEADER.decode("ascii")]
    for entry in m.entries:
        out.append(f"{entry.path}\t{entry.size}\t{entry.digest}\n")
    return "".join(out).encode("utf-8")


def parse_manifest_bytes(data: bytes) -> Manifest:
    """Strict inverse of canonical_manifest_bytes."""
    if not data.startswith(MANIFEST_HEADER):
        raise ManifestFormat("missing manifest header")
    body = data[len(MANIFEST_HEADER):]
    if body and not body.endswith(b"\n"):
        raise ManifestFormat("manifest does not end with a newline")
    entries = []
    for line in body.split(b"\n")[:-1]:
        try:
            text = line.decode("utf-8")
        except UnicodeDecodeError:
            raise ManifestFormat("manifest line is not UTF-8") from None
        fields = text.split("\t")
        if len(fields) != 3:
            raise ManifestFormat(f"expected 3 tab-separated fields: {text!r}")
        path, size_text, digest = fields
        if not _SIZE_RE.match(size_text):
            raise ManifestFormat(f"{path!r}: non-canonical size {size_text!r}")
        entries.append(ManifestEntry(path=path, size=int(size_text), digest=digest))
    manifest = Manifest(entries=tuple(entries))
    _check_entries(manifest.entries)
    return manifest


def _collect_files(content_dir: Path) -> list[str]:
    """Relative paths of every regular file, sorted by UTF-8 bytes."""
    paths = []
    for dirpath, dirnames, filenames in os.walk(content_dir):
        for name in dirnames:
            if os.path.islink(os.path.join(dirpath, name)):
                raise UnsupportedFileType(f"symlink not allowed: {name}")
        for name in filenames:
            full = os.path.join(dirpath, name)
            if os.path.islink(full) or not os.path.isfile(full):
                raise UnsupportedFileType(f"not a regular file: {name}")
            rel = os.path.relpath(full, content_dir).replace(os.sep, "/")
            reason = check_rel_path(rel)
            if reason is not None:
                raise InvalidPath(f"{rel!r}: {reason}")
            paths.append(rel)
    return sorted(paths, key=lambda p: p.encode("utf-8"))


def build_package(
    content_dir: Path,
    descriptor: AppDescriptor,
    cert: Certificate,
    key: KeyPair,
) -> bytes:
    """Assemble the signed container. Deterministic for identical inputs."""
    report = validate_descriptor(descriptor)
    if report:
        raise InvalidDescriptor(", ".join(report))
    if cert.public_key != key.public_key:
        raise CertKeyMismatch("certificate public key does not match the signing key")
    content_dir = Path(content_dir)
    paths = _collect_files(content_dir)
    if descriptor.window.content not in paths:
        raise MissingContentEntry(
            f"descriptor entry {descriptor.window.content!r} not found in content"
        )

    entries = []
    blobs = []
    for rel in paths:
        try:
            data = (content_dir / rel).read_bytes()
        except OSError as exc:
            raise IoFailure(str(exc)) from None
        entries.append(ManifestEntry(path=rel, size=len(data), digest=sha256_hex(data)))
        blobs.append(data)

    descriptor_bytes = canonical_descriptor(descriptor)
    manifest_bytes = canonical_manifest_bytes(Manifest(entries=tuple(entries)))
    certificate_bytes = canonical_certificate_bytes(cert)
    signature = sign_payload(descriptor_bytes, manifest_bytes, key)

    parts = [MAGIC, struct.pack("<H", FORMAT_VERSION)]
    for section in (descriptor_bytes, manifest_bytes, certificate_bytes, signature):
        parts.append(struct.pack("<Q", len(section)))
        parts.append(section)
    parts.extend(blobs)
    return b"".join(parts)


def read_package(data: bytes) -> PackageFile:
    """Parse container bytes. Never checks signatures; that is trust, not parsing."""
    if len(data) < 4:
        raise Truncated("shorter than the magic")
    if data[:4] != MAGIC:
        raise BadMagic(f"bad magic {data[:4]!r}")
    if len(data) < 6:
        raise Truncated("missing format version")
    version = struct.unpack_from("<H", data, 4)[0]
    if version != FORMAT_VERSION:
        raise UnsupportedVersion(f"format version {version}")

    offset = 6
    sections = []
    for name in ("descriptor", "manifest", "certificate", "signature"):
        if len(data) - offset < 8:
            raise Truncated(f"missing length of {name} section")
        length = struct.unpack_from("<Q", data, offset)[0]
        offset += 8
        if length > len(data) - offset:
            raise SectionOverflow(f"{name} section claims {length} bytes")
        sections.append(data[offset : offset + length])
        offset += length

    descriptor_bytes, manifest_bytes, certificate_bytes, signature = sections
    manifest = parse_manifest_bytes(manifest_bytes)
    blobs = []
    for entry in manifest.entries:
        if entry.size > len(data) - offset:
            raise Truncated(f"blob for {entry.path!r} is cut short")
        blobs.append(data[offset : offset + entry.size])
        offset += entry.size
    if offset != len(data):
        raise TrailingData(f"{len(data) - offset} bytes after the last blob")
    return PackageFile(
        descriptor_bytes=descriptor_bytes,
        manifest=manifest,
        certificate_bytes=certificate_bytes,
        signature=signature,
        blobs=tuple(blobs),
    )


def extract_package(pkg: PackageFile, dest: Path) -> list[Path]:
    """Write every manifest entry under dest; refuses to escape it."""
    dest = Path(dest)
    dest_real = os.path.realpath(dest)
    written = []
    for entry, blob in zip(pkg.manifest.entries, pkg.blobs):
        reason = check_rel_path(entry.path)
        if reason is not None:
            raise PathEscape(f"{entry.path!r}: {reason}")
        target = dest / entry.path
        parent_real = os.path.realpath(target.parent)
        if parent_real != dest_real and not parent_real.startswith(dest_real + os.sep):
            raise PathEscape(f"{entry.path!r} resolves outside the destination")
        try:
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_bytes(blob)
        except OSError as exc:
            raise IoFailure(str(exc)) from None
        written.append(target)
    return written


def verify_integrity(pkg: PackageFile) -> IntegrityReport:
    """Recompute sizes and digests of the blobs against the manifest."""
    results = []
    for index, entry in enumerate(pkg.manifest.entries):
        if index >= len(pkg.blobs):
            results.append(IntegrityEntry(path=entry.path, ok=False, reason="MissingBlob"))
            continue
        blob = pkg.blobs[index]
        if len(blob) != entry.size:
            results.append(IntegrityEntry(path=entry.path, ok=False, reason="SizeMismatch"))
        elif sha256_hex(blob) != entry.digest:
            results.append(IntegrityEntry(path=entry.path, ok=False, reason="DigestMismatch"))
        else:
            results.append(IntegrityEntry(path=entry.path, ok=True))
    overall = all(r.ok for r in results) and len(pkg.blobs) == len(pkg.manifest.entries)
    return IntegrityReport(entries=tuple(results), ok=overall)
