"""Exception taxonomy for the miniair toolkit.

Every error raised by this package derives from MiniairError so callers
(notably the CLI) can map failures to exit codes without catching bare
Exception.
"""

from __future__ import annotations


class MiniairError(Exception):
    """Base class for all errors raised by this package."""


# -- XML / descriptor ----------------------------------------------------

class MalformedXml(MiniairError):
    """Input is not well-formed XML (or uses an unsupported construct)."""


class MissingElement(MiniairError):
    """A required descriptor element is absent."""

    def __init__(self, path: str):
        self.path = path
        super().__init__(f"missing element: {path}")


class InvalidValue(MiniairError):
    """An element or argument holds a value outside its grammar."""

    def __init__(self, path: str, reason: str):
        self.path = path
        self.reason = reason
        super().__init__(f"invalid value at {path}: {reason}")


class InvalidDescriptor(MiniairError):
    """Descriptor fails validation and cannot be serialized or packaged."""


# -- archive --------------------------------------------------------------

class SortViolation(MiniairError):
    """Manifest entries are not strictly sorted by path bytes."""


class ManifestFormat(MiniairError):
    """Manifest bytes or fields do not match the canonical grammar."""


class InvalidPath(MiniairError):
    """A package-relative path breaks the path rules."""


class MissingContentEntry(MiniairError):
    """The descriptor's entry file does not exist in the content directory."""


class UnsupportedFileType(MiniairError):
    """Content directory holds a symlink or other non-regular file."""


class CertKeyMismatch(MiniairError):
    """Signing key does not match the certificate's public key."""


class BadMagic(MiniairError):
    """Package bytes do not start with the container magic."""


class UnsupportedVersion(MiniairError):
    """Container format version is not supported."""


class Truncated(MiniairError):
    """Package bytes end before the declared structure is complete."""


class SectionOverflow(MiniairError):
    """A declared section length exceeds the remaining bytes."""


class TrailingData(MiniairError):
    """Extra bytes follow the final content blob."""


class PathEscape(MiniairError):
    """A path would resolve outside its permitted directory."""


class IoFailure(MiniairError):
    """An underlying filesystem operation failed."""


# -- signing --------------------------------------------------------------

class BadSeedLength(MiniairError):
    """Key seed is not exactly 32 bytes."""


class InvalidValidityWindow(MiniairError):
    """Certificate not_before does not precede not_after."""


class EmptyPublisher(MiniairError):
    """Certificate publisher name is empty."""


class BadPublisher(MiniairError):
    """Publisher or subject id contains characters the format cannot carry."""


class BadCertificateFormat(MiniairError):
    """Certificate bytes do not match the canonical text format."""


class BadKeyFormat(MiniairError):
    """Key file bytes do not match the canonical text format."""


# -- installer ------------------------------------------------------------

class IntegrityFailure(MiniairError):
    """Package contents do not match the manifest digests."""


class SignatureFailure(MiniairError):
    """Package signature does not verify under the embedded certificate."""


class CertificateInvalid(MiniairError):
    """Certificate failed verification (bad self-signature or validity)."""

    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(f"certificate invalid: {reason}")


class AlreadyInstalled(MiniairError):
    """An application with this id is already installed."""


class ConsentRefused(MiniairError):
    """The user declined the installation disclosure."""


class NotInstalled(MiniairError):
    """No application with this id is installed."""


class PublisherKeyMismatch(MiniairError):
    """Update package is signed by a different publisher key."""


class Downgrade(MiniairError):
    """Update package version is not greater than the installed version."""


class CorruptIndex(MiniairError):
    """Registry index file is malformed."""


class BadVersion(MiniairError):
    """Version string does not match the version grammar."""


# -- runtime api ----------------------------------------------------------

class SandboxDenied(MiniairError):
    """The context's origin lacks the required capability."""


class BadUrl(MiniairError):
    """String is not an acceptable absolute URL."""


class NotFound(MiniairError):
    """A file or resource does not exist."""


class BadKey(MiniairError):
    """Store key is empty or contains control characters."""


class BadChannel(MiniairError):
    """Bus channel name does not match the channel grammar."""


# -- feeds ------------------------------------------------------------------

class NoRssRoot(MiniairError):
    """Document root element is not rss."""


class NoChannel(MiniairError):
    """rss element has no channel child."""


# -- feed reader ----------------------------------------------------------

class BadConfig(MiniairError):
    """App config file is malformed."""


class WrongEngine(MiniairError):
    """App config names an engine this runtime does not provide."""


class EmptyClipboard(MiniairError):
    """Clipboard is empty where a feed URL was expected."""


class TooManyRedirects(MiniairError):
    """Redirect chain exceeded the policy limit."""


class FetchTimeout(MiniairError):
    """HTTP request exceeded the policy deadline."""


class HttpStatus(MiniairError):
    """Terminal non-200 HTTP status."""

    def __init__(self, code: int):
        self.code = code
        super().__init__(f"http status {code}")


class BodyTooLarge(MiniairError):
    """Response body exceeded the policy byte limit."""


class ConnectFailure(MiniairError):
    """Connection could not be established or was dropped."""


class StageError(MiniairError):
    """Pipeline failure tagged with the stage that raised it."""

    def __init__(self, stage: str, cause: MiniairError):
        self.stage = stage
        self.cause = cause
        super().__init__(f"{stage}: {cause}")
