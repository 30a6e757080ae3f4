"""Machine-local application registry: install, update, uninstall, list.

Registry root comes from ``MAIR_HOME`` (default ``~/.miniair``). The index
file ``registry.tsv`` is the source of truth for installed ids and is only
ever replaced atomically (temp file + rename), so a failed operation leaves
it byte-identical. Mutating operations hold an exclusive advisory lock on
``.lock`` at the root; readers take a shared lock.
"""

from __future__ import annotations

import shutil
from contextlib import contextmanager
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Callable, Iterator, Mapping

from . import archive, signing
from .descriptor import VERSION_RE, parse_descriptor
from .errors import (
    AlreadyInstalled,
    BadVersion,
    CertificateInvalid,
    ConsentRefused,
    CorruptIndex,
    Downgrade,
    IntegrityFailure,
    IoFailure,
    NotFound,
    NotInstalled,
    PublisherKeyMismatch,
    SignatureFailure,
)
from .fsutil import atomic_write_bytes, format_utc, locked_file, parse_utc, utc_now

ENV_HOME = "MAIR_HOME"
DEFAULT_HOME = "~/.miniair"

DISCLOSURE_ACCESS = "full local system access"


class Ordering(Enum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


def compare_versions(a: str, b: str) -> Ordering:
    """Component-wise numeric comparison; missing components count as 0."""
    for value in (a, b):
        if not VERSION_RE.match(value):
            raise BadVersion(f"not a dotted numeric version: {value!r}")

    def parts(v: str) -> tuple[int, int, int]:
        nums = [int(c) for c in v.split(".")]
        return tuple(nums + [0] * (3 - len(nums)))  # type: ignore[return-value]

    pa, pb = parts(a), parts(b)
    if pa < pb:
        return Ordering.LESS
    if pa > pb:
        return Ordering.GREATER
    return Ordering.EQUAL


@dataclass(frozen=True)
class Registry:
    root: Path

    @classmethod
    def from_env(cls, env: Mapping[str, str] | None = None) -> "Registry":
        import os

        env = os.environ if env is None else env
        root = env.get(ENV_HOME) or DEFAULT_HOME
        return cls(root=Path(root).expanduser())

    @property
    def index_path(self) -> Path:
        return self.root / "registry.tsv"

    def app_dir(self, app_id: str) -> Path:
        return self.root / "apps" / app_id

    def files_dir(self, app_id: str) -> Path:
        return self.app_dir(app_id) / "files"

    def data_dir(self, app_id: str) -> Path:
        return self.app_dir(app_id) / "data"

    @contextmanager
    def locked(self, exclusive: bool = True) -> Iterator[None]:
        with locked_file(self.root / ".lock", exclusive=exclusive):
            yield


@dataclass(frozen=True)
class InstalledApp:
    id: str
    version: str
    publisher_name: str
    publisher_fingerprint: str
    publisher_status_at_install: signing.PublisherStatus
    installed_at: datetime
    files_dir: Path
    data_dir: Path


@dataclass(frozen=True)
class Disclosure:
    """What the user is told before granting an install."""

    app_id: str
    version: str
    publisher_name: str
    publisher_status: signing.PublisherStatus
    access: str = DISCLOSURE_ACCESS


Consent = bool | Callable[[Disclosure], bool]


@dataclass(frozen=True)
class _IndexRow:
    id: str
    version: str
    fingerprint: str
    status: str  # "verified" | "unverified"
    installed_at: str  # RFC 3339

    def line(self) -> str:
        return (
            f"{self.id}\t{self.version}\t{self.fingerprint}\t"
            f"{self.status}\t{self.installed_at}\n"
        )


def _read_index(registry: Registry) -> list[_IndexRow]:
    path = registry.index_path
    if not path.exists():
        return []
    rows = []
    text = path.read_text(encoding="utf-8")
    for number, line in enumerate(text.split("\n")[:-1], start=1):
        fields = line.split("\t")
        if len(fields) != 5:
            raise CorruptIndex(f"line {number}: expected 5 fields")
        row = _IndexRow(*fields)
        if not VERSION_RE.match(row.version):
            raise CorruptIndex(f"line {number}: bad version")
        if row.status not in ("verified", "unverified"):
            raise CorruptIndex(f"line {number}: bad status {row.status!r}")
        try:
            parse_utc(row.installed_at)
        except ValueError:
            raise CorruptIndex(f"line {number}: bad timestamp") from None
        rows.append(row)
    if text and not text.endswith("\n"):
        raise CorruptIndex("index does not end with a newline")
    return rows


def _write_index(registry: Registry, rows: list[_IndexRow]) -> None:
    rows = sorted(rows, key=lambda r: r.id)
    atomic_write_bytes(
        registry.index_path, "".join(row.line() for row in rows).encode("utf-8")
    )


def _row_to_app(registry: Registry, row: _IndexRow) -> InstalledApp:
    cert_path = registry.app_dir(row.id) / "publisher.mcert"
    try:
        cert = signing.parse_certificate(cert_path.read_bytes())
    except OSError:
        raise CorruptIndex(f"missing publisher certificate for {row.id!r}") from None
    return InstalledApp(
        id=row.id,
        version=row.version,
        publisher_name=cert.publisher,
        publisher_fingerprint=row.fingerprint,
        publisher_status_at_install=signing.PublisherStatus(
            signing.StatusKind(row.status)
        ),
        installed_at=parse_utc(row.installed_at),
        files_dir=registry.files_dir(row.id),
        data_dir=registry.data_dir(row.id),
    )


def list_installed(registry: Registry) -> list[InstalledApp]:
    """Installed applications, ascending by id."""
    if not registry.index_path.exists():
        return []
    with registry.locked(exclusive=False):
        rows = _read_index(registry)
    return [_row_to_app(registry, row) for row in sorted(rows, key=lambda r: r.id)]


def get_installed(registry: Registry, app_id: str) -> InstalledApp | None:
    if not registry.index_path.exists():
        return None
    with registry.locked(exclusive=False):
        rows = _read_index(registry)
    for row in rows:
        if row.id == app_id:
            return _row_to_app(registry, row)
    return None


@dataclass(frozen=True)
class _VerifiedPackage:
    pkg: archive.PackageFile
    cert: signing.Certificate
    status: signing.PublisherStatus
    descriptor_id: str
    descriptor_version: str
    content_path: str


def _load_and_verify(
    package_path: Path,
    trust: signing.TrustStore,
    now: datetime,
) -> _VerifiedPackage:
    """Shared install/update gate: parse, integrity, signature, certificate."""
    try:
        data = Path(package_path).read_bytes()
    except FileNotFoundError:
        raise NotFound(f"no such package: {package_path}") from None
    except OSError as exc:
        raise IoFailure(str(exc)) from None
    pkg = archive.read_package(data)
    report = archive.verify_integrity(pkg)
    if not report.ok:
        failed = [e for e in report.entries if not e.ok]
        detail = f"{failed[0].path!r} ({failed[0].reason})" if failed else "no blobs"
        raise IntegrityFailure(f"integrity: {detail}")
    cert = signing.parse_certificate(pkg.certificate_bytes)
    manifest_bytes = archive.canonical_manifest_bytes(pkg.manifest)
    if not signing.verify_signature(
        pkg.descriptor_bytes, manifest_bytes, pkg.signature, cert
    ):
        raise SignatureFailure("signature does not verify under the package certificate")
    reason = signing.verify_certificate(cert, now)
    if reason is not None:
        raise CertificateInvalid(reason)
    status = signing.classify_publisher(cert, trust, now)
    desc = parse_descriptor(pkg.descriptor_bytes)
    return _VerifiedPackage(
        pkg=pkg,
        cert=cert,
        status=status,
        descriptor_id=desc.id,
        descriptor_version=desc.version,
        content_path=desc.window.content,
    )


def _ask_consent(consent: Consent, disclosure: Disclosure) -> bool:
    if callable(consent):
        return bool(consent(disclosure))
    return bool(consent)


def _place_app_files(registry: Registry, verified: _VerifiedPackage) -> None:
    app_dir = registry.app_dir(verified.descriptor_id)
    if app_dir.exists():
        shutil.rmtree(app_dir)
    try:
        registry.files_dir(verified.descriptor_id).mkdir(parents=True)
        registry.data_dir(verified.descriptor_id).mkdir(parents=True, exist_ok=True)
        (app_dir / "application.xml").write_bytes(verified.pkg.descriptor_bytes)
        (app_dir / "publisher.mcert").write_bytes(verified.pkg.certificate_bytes)
        archive.extract_package(verified.pkg, registry.files_dir(verified.descriptor_id))
    except OSError as exc:
        raise IoFailure(str(exc)) from None


def install(
    package_path: Path,
    registry: Registry,
    trust: signing.TrustStore,
    consent: Consent,
    now: datetime | None = None,
) -> InstalledApp:
    """Verify, disclose, and install a package into the registry.

    ``consent`` is either a boolean or a callable receiving the Disclosure
    and returning one; nothing is written unless it grants.
    """
    now = now or utc_now()
    verified = _load_and_verify(package_path, trust, now)
    with registry.locked():
        rows = _read_index(registry)
        if any(row.id == verified.descriptor_id for row in rows):
            raise AlreadyInstalled(f"{verified.descriptor_id} is already installed")
        disclosure = Disclosure(
            app_id=verified.descriptor_id,
            version=verified.descriptor_version,
            publisher_name=verified.cert.publisher,
            publisher_status=verified.status,
        )
        if not _ask_consent(consent, disclosure):
            raise ConsentRefused("installation was not confirmed")
        try:
            _place_app_files(registry, verified)
            row = _IndexRow(
                id=verified.descriptor_id,
                version=verified.descriptor_version,
                fingerprint=signing.fingerprint(verified.cert),
                status=verified.status.kind.value,
                installed_at=format_utc(now),
            )
            _write_index(registry, rows + [row])
        except BaseException:
            shutil.rmtree(registry.app_dir(verified.descriptor_id), ignore_errors=True)
            raise
    return _row_to_app(registry, row)


def update(
    package_path: Path,
    registry: Registry,
    trust: signing.TrustStore,
    consent: Consent,
    force: bool = False,
    now: datetime | None = None,
) -> InstalledApp:
    """Replace an installed app with a newer package from the same publisher key.

    The app's data directory is preserved. Without ``force`` the package
    version must be strictly greater than the installed one.
    """
    now = now or utc_now()
    verified = _load_and_verify(package_path, trust, now)
    app_id = verified.descriptor_id
    with registry.locked():
        rows = _read_index(registry)
        existing = next((row for row in rows if row.id == app_id), None)
        if existing is None:
            raise NotInstalled(f"{app_id} is not installed")
        try:
            installed_cert = signing.parse_certificate(
                (registry.app_dir(app_id) / "publisher.mcert").read_bytes()
            )
        except OSError:
            raise CorruptIndex(f"missing publisher certificate for {app_id!r}") from None
        if installed_cert.public_key != verified.cert.public_key:
            raise PublisherKeyMismatch(
                "update package is signed by a different publisher key"
            )
        order = compare_versions(verified.descriptor_version, existing.version)
        if order is not Ordering.GREATER and not force:
            raise Downgrade(
                f"{verified.descriptor_version} does not upgrade {existing.version}"
            )
        disclosure = Disclosure(
            app_id=app_id,
            version=verified.descriptor_version,
            publisher_name=verified.cert.publisher,
            publisher_status=verified.status,
        )
        if not _ask_consent(consent, disclosure):
            raise ConsentRefused("update was not confirmed")

        files_dir = registry.files_dir(app_id)
        try:
            if files_dir.exists():
                shutil.rmtree(files_dir)
            files_dir.mkdir(parents=True)
            archive.extract_package(verified.pkg, files_dir)
            app_dir = registry.app_dir(app_id)
            (app_dir / "application.xml").write_bytes(verified.pkg.descriptor_bytes)
            (app_dir / "publisher.mcert").write_bytes(verified.pkg.certificate_bytes)
        except OSError as exc:
            raise IoFailure(str(exc)) from None
        row = _IndexRow(
            id=app_id,
            version=verified.descriptor_version,
            fingerprint=signing.fingerprint(verified.cert),
            status=verified.status.kind.value,
            installed_at=format_utc(now),
        )
        _write_index(registry, [r for r in rows if r.id != app_id] + [row])
    return _row_to_app(registry, row)


def uninstall(app_id: str, registry: Registry) -> InstalledApp:
    """Remove the app, its files, and its data; errors if not installed."""
    with registry.locked():
        rows = _read_index(registry)
        existing = next((row for row in rows if row.id == app_id), None)
        if existing is None:
            raise NotInstalled(f"{app_id} is not installed")
        record = _row_to_app(registry, existing)
        _write_index(registry, [r for r in rows if r.id != app_id])
        shutil.rmtree(registry.app_dir(app_id), ignore_errors=True)
    return record
