"""Keys, self-signed certificates, package signatures, publisher trust.

Signatures are Ed25519 (deterministic, so package builds reproduce
bit-exactly). Certificates use a pinned line-oriented text format; the
to-be-signed region runs through the end of the not-after line and its
SHA-256 hex is the certificate fingerprint used for trust decisions.
"""

from __future__ import annotations

import hashlib
import os
import re
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from pathlib import Path

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

from .errors import (
    BadCertificateFormat,
    BadKeyFormat,
    BadPublisher,
    BadSeedLength,
    EmptyPublisher,
    InvalidValidityWindow,
)
from .fsutil import format_utc, parse_utc, sha256_hex

PAYLOAD_MAGIC = b"MAIR-SIG1\n"
CERT_HEADER = "MAIR-CERT 1"
KEY_HEADER = "MAIR-KEY 1"

# verify_certificate reasons
BAD_SELF_SIGNATURE = "BadSelfSignature"
EXPIRED = "Expired"
NOT_YET_VALID = "NotYetValid"


@dataclass(frozen=True)
class KeyPair:
    seed: bytes
    public_key: bytes

    def sign(self, message: bytes) -> bytes:
        return Ed25519PrivateKey.from_private_bytes(self.seed).sign(message)


@dataclass(frozen=True)
class Certificate:
    publisher: str
    subject_id: str
    public_key: bytes
    not_before: datetime
    not_after: datetime
    self_signature: bytes


class StatusKind(Enum):
    VERIFIED = "verified"
    UNVERIFIED = "unverified"
    INVALID = "invalid"


@dataclass(frozen=True)
class PublisherStatus:
    kind: StatusKind
    reason: str | None = None


@dataclass(frozen=True)
class TrustStore:
    """Set of certificate fingerprints treated as verified publishers."""

    trusted: frozenset[str] = frozenset()

    @classmethod
    def load(cls, directory: Path | None) -> "TrustStore":
        """Fingerprints of every *.mcert file in directory (may be absent)."""
        if directory is None:
            return cls()
        directory = Path(directory)
        if not directory.is_dir():
            return cls()
        prints = set()
        for path in sorted(directory.glob("*.mcert")):
            prints.add(fingerprint(parse_certificate(path.read_bytes())))
        return cls(frozenset(prints))


def generate_keypair(seed: bytes | None = None) -> KeyPair:
    """Derive an Ed25519 keypair; a fresh random seed when none is given."""
    if seed is None:
        seed = os.urandom(32)
    if len(seed) != 32:
        raise BadSeedLength(f"seed must be 32 bytes, got {len(seed)}")
    public = (
        Ed25519PrivateKey.from_private_bytes(seed)
        .public_key()
        .public_bytes(serialization.Encoding.Raw, serialization.PublicFormat.Raw)
    )
    return KeyPair(seed=seed, public_key=public)


def key_file_bytes(key: KeyPair) -> bytes:
    return f"{KEY_HEADER}\nseed: {key.seed.hex()}\n".encode("ascii")


def parse_key_file(data: bytes) -> KeyPair:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError:
        raise BadKeyFormat("not UTF-8") from None
    match = re.fullmatch(rf"{KEY_HEADER}\nseed: ([0-9a-f]{{64}})\n", text)
    if not match:
        raise BadKeyFormat("key file does not match the canonical format")
    return generate_keypair(bytes.fromhex(match.group(1)))


def _check_text_field(value: str, what: str) -> None:
    if any(ord(c) < 0x20 or ord(c) == 0x7F for c in value):
        raise BadPublisher(f"{what} contains control characters")


def _tbs_bytes(
    publisher: str,
    subject_id: str,
    public_key: bytes,
    not_before: datetime,
    not_after: datetime,
) -> bytes:
    lines = (
        f"{CERT_HEADER}\n"
        f"publisher: {publisher}\n"
        f"id: {subject_id}\n"
        f"pubkey: {public_key.hex()}\n"
        f"not-before: {format_utc(not_before)}\n"
        f"not-after: {format_utc(not_after)}\n"
    )
    return lines.encode("utf-8")


def certificate_tbs_bytes(cert: Certificate) -> bytes:
    """The signed region: every byte through the end of the not-after line."""
    return _tbs_bytes(
        cert.publisher, cert.subject_id, cert.public_key, cert.not_before, cert.not_after
    )


def canonical_certificate_bytes(cert: Certificate) -> bytes:
    return certificate_tbs_bytes(cert) + f"self-sig: {cert.self_signature.hex()}\n".encode(
        "ascii"
    )


def parse_certificate(data: bytes) -> Certificate:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError:
        raise BadCertificateFormat("not UTF-8") from None
    pattern = (
        rf"{CERT_HEADER}\n"
        r"publisher: (?P<publisher>[^\n]*)\n"
        r"id: (?P<id>[^\n]*)\n"
        r"pubkey: (?P<pubkey>[0-9a-f]{64})\n"
        r"not-before: (?P<nb>[^\n]*)\n"
        r"not-after: (?P<na>[^\n]*)\n"
        r"self-sig: (?P<sig>[0-9a-f]{128})\n"
    )
    match = re.fullmatch(pattern, text)
    if not match:
        raise BadCertificateFormat("certificate does not match the canonical format")
    try:
        not_before = parse_utc(match.group("nb"))
        not_after = parse_utc(match.group("na"))
    except ValueError:
        raise BadCertificateFormat("bad timestamp") from None
    return Certificate(
        publisher=match.group("publisher"),
        subject_id=match.group("id"),
        public_key=bytes.fromhex(match.group("pubkey")),
        not_before=not_before,
        not_after=not_after,
        self_signature=bytes.fromhex(match.group("sig")),
    )


def fingerprint(cert: Certificate) -> str:
    return sha256_hex(certificate_tbs_bytes(cert))


def self_sign_certificate(
    key: KeyPair,
    publisher: str,
    subject_id: str,
    not_before: datetime,
    not_after: datetime,
) -> Certificate:
    if not publisher:
        raise EmptyPublisher("publisher name must not be empty")
    _check_text_field(publisher, "publisher")
    _check_text_field(subject_id, "subject id")
    not_before = not_before.replace(microsecond=0)
    not_after = not_after.replace(microsecond=0)
    if not not_before < not_after:
        raise InvalidValidityWindow("not_before must precede not_after")
    tbs = _tbs_bytes(publisher, subject_id, key.public_key, not_before, not_after)
    return Certificate(
        publisher=publisher,
        subject_id=subject_id,
        public_key=key.public_key,
        not_before=not_before,
        not_after=not_after,
        self_signature=key.sign(tbs),
    )


def verify_certificate(cert: Certificate, now: datetime) -> str | None:
    """None when the certificate is good; otherwise the failure reason."""
    try:
        Ed25519PublicKey.from_public_bytes(cert.public_key).verify(
            cert.self_signature, certificate_tbs_bytes(cert)
        )
    except (InvalidSignature, ValueError):
        return BAD_SELF_SIGNATURE
    if now < cert.not_before:
        return NOT_YET_VALID
    if now > cert.not_after:
        return EXPIRED
    return None


def _payload(descriptor_bytes: bytes, manifest_bytes: bytes) -> bytes:
    # Fixed 74-byte message: magic + the two section digests.
    return (
        PAYLOAD_MAGIC
        + hashlib.sha256(descriptor_bytes).digest()
        + hashlib.sha256(manifest_bytes).digest()
    )


def sign_payload(descriptor_bytes: bytes, manifest_bytes: bytes, key: KeyPair) -> bytes:
    return key.sign(_payload(descriptor_bytes, manifest_bytes))


def verify_signature(
    descriptor_bytes: bytes,
    manifest_bytes: bytes,
    signature: bytes,
    cert: Certificate,
) -> bool:
    try:
        Ed25519PublicKey.from_public_bytes(cert.public_key).verify(
            signature, _payload(descriptor_bytes, manifest_bytes)
        )
    except (InvalidSignature, ValueError):
        return False
    return True


def classify_publisher(
    cert: Certificate, trust: TrustStore, now: datetime
) -> PublisherStatus:
    """Invalid(reason) / Verified (fingerprint trusted) / Unverified."""
    reason = verify_certificate(cert, now)
    if reason is not None:
        return PublisherStatus(StatusKind.INVALID, reason)
    if fingerprint(cert) in trust.trusted:
        return PublisherStatus(StatusKind.VERIFIED)
    return PublisherStatus(StatusKind.UNVERIFIED)
