"""Single command-line entry point for the whole toolchain.

Data goes to stdout, diagnostics to stderr as one ``error: `` line, and
every outcome maps onto a fixed exit code:

  0 success                4 sandbox denied
  1 usage                  5 not found / not installed
  2 integrity/signature    6 parse error (XML/feed/config)
  3 certificate invalid    7 precondition failure
"""

from __future__ import annotations

import argparse
import sys
from contextlib import redirect_stderr, redirect_stdout
from dataclasses import replace
from datetime import timedelta
from pathlib import Path
from typing import Mapping, TextIO

from . import archive, errors, feedreader, installer, runtime_api, signing
from .descriptor import parse_descriptor
from .fsutil import format_utc, percent_encode, utc_now

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INTEGRITY = 2
EXIT_CERTIFICATE = 3
EXIT_SANDBOX = 4
EXIT_NOT_FOUND = 5
EXIT_PARSE = 6
EXIT_PRECONDITION = 7


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: D102 - argparse hook
        raise _UsageError(message)


_EXIT_BY_ERROR: tuple[tuple[type, int], ...] = (
    (errors.IntegrityFailure, EXIT_INTEGRITY),
    (errors.SignatureFailure, EXIT_INTEGRITY),
    (errors.CertificateInvalid, EXIT_CERTIFICATE),
    (errors.SandboxDenied, EXIT_SANDBOX),
    (errors.PathEscape, EXIT_SANDBOX),
    (errors.NotInstalled, EXIT_NOT_FOUND),
    (errors.NotFound, EXIT_NOT_FOUND),
    (errors.HttpStatus, EXIT_NOT_FOUND),
    (errors.ConnectFailure, EXIT_NOT_FOUND),
    (errors.FetchTimeout, EXIT_NOT_FOUND),
    (errors.TooManyRedirects, EXIT_NOT_FOUND),
    (errors.BodyTooLarge, EXIT_NOT_FOUND),
    (errors.MalformedXml, EXIT_PARSE),
    (errors.MissingElement, EXIT_PARSE),
    (errors.InvalidValue, EXIT_PARSE),
    (errors.InvalidDescriptor, EXIT_PARSE),
    (errors.NoRssRoot, EXIT_PARSE),
    (errors.NoChannel, EXIT_PARSE),
    (errors.BadConfig, EXIT_PARSE),
    (errors.WrongEngine, EXIT_PARSE),
    (errors.BadMagic, EXIT_PARSE),
    (errors.UnsupportedVersion, EXIT_PARSE),
    (errors.Truncated, EXIT_PARSE),
    (errors.SectionOverflow, EXIT_PARSE),
    (errors.TrailingData, EXIT_PARSE),
    (errors.ManifestFormat, EXIT_PARSE),
    (errors.SortViolation, EXIT_PARSE),
    (errors.InvalidPath, EXIT_PARSE),
    (errors.BadCertificateFormat, EXIT_PARSE),
    (errors.BadKeyFormat, EXIT_PARSE),
    (errors.CorruptIndex, EXIT_PARSE),
    (errors.BadVersion, EXIT_PARSE),
    (errors.BadChannel, EXIT_USAGE),
)


def _map_exit(exc: errors.MiniairError) -> int:
    if isinstance(exc, errors.StageError):
        return _map_exit(exc.cause)
    for cls, code in _EXIT_BY_ERROR:
        if isinstance(exc, cls):
            return code
    # Everything else (consent refused, downgrade, empty clipboard, io
    # failures, ...) is a precondition-style failure.
    return EXIT_PRECONDITION


def _build_parser() -> _Parser:
    parser = _Parser(prog="miniair", description="miniature application runtime toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("certificate", help="generate a key and self-signed certificate")
    p.add_argument("--publisher", required=True)
    p.add_argument("--id", required=True, dest="subject_id")
    p.add_argument("--key-out", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", help="64 hex chars for deterministic key derivation")
    p.add_argument("--days", type=int, default=365)

    p = sub.add_parser("package", help="build a signed package from a content directory")
    p.add_argument("--dir", required=True)
    p.add_argument("--descriptor", required=True)
    p.add_argument("--cert", required=True)
    p.add_argument("--key", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("verify", help="check package integrity and publisher status")
    p.add_argument("package")
    p.add_argument("--trust-dir")

    p = sub.add_parser("install", help="install a package after disclosure and consent")
    p.add_argument("package")
    p.add_argument("--trust-dir")
    p.add_argument("--yes", action="store_true")

    p = sub.add_parser("uninstall", help="remove an installed application")
    p.add_argument("id")

    p = sub.add_parser("update", help="update an installed application")
    p.add_argument("package")
    p.add_argument("--trust-dir")
    p.add_argument("--force", action="store_true")
    p.add_argument("--yes", action="store_true")

    sub.add_parser("list", help="list installed applications")

    p = sub.add_parser("run", help="run an installed application")
    p.add_argument("id")
    p.add_argument("--output", choices=["html", "text"])

    p = sub.add_parser("clipboard", help="read or replace the runtime clipboard")
    clip_sub = p.add_subparsers(dest="clip_command", required=True)
    clip_sub.add_parser("get")
    clip_set = clip_sub.add_parser("set")
    clip_set.add_argument("text")

    p = sub.add_parser("bus", help="publish to or poll an inter-app channel")
    bus_sub = p.add_subparsers(dest="bus_command", required=True)
    bus_pub = bus_sub.add_parser("publish")
    bus_pub.add_argument("channel")
    bus_pub.add_argument("message")
    bus_pub.add_argument("--as", required=True, dest="sender")
    bus_poll = bus_sub.add_parser("poll")
    bus_poll.add_argument("channel")
    bus_poll.add_argument("--after", type=int, default=0)
    bus_poll.add_argument("--as", required=True, dest="sender")

    return parser


def _consent_prompt(stdout: TextIO, stdin: TextIO | None, assume_yes: bool):
    """Prints the disclosure; asks on stdin unless --yes was given."""

    def consent(disclosure: installer.Disclosure) -> bool:
        stdout.write(f"app: {disclosure.app_id} {disclosure.version}\n")
        stdout.write(
            f"publisher: {disclosure.publisher_name}"
            f" ({disclosure.publisher_status.kind.value.upper()})\n"
        )
        stdout.write(f"access: {disclosure.access}\n")
        if assume_yes:
            return True
        stdout.write("proceed? [y/N] ")
        stdout.flush()
        answer = stdin.readline() if stdin is not None else ""
        return answer.strip().lower() in ("y", "yes")

    return consent


def _cmd_certificate(ns, stdout: TextIO) -> int:
    seed = None
    if ns.seed is not None:
        try:
            seed = bytes.fromhex(ns.seed)
        except ValueError:
            raise _UsageError("--seed must be hex") from None
        if len(seed) != 32:
            raise _UsageError("--seed must be 64 hex chars")
    if ns.days <= 0:
        raise _UsageError("--days must be positive")
    key = signing.generate_keypair(seed)
    not_before = utc_now()
    cert = signing.self_sign_certificate(
        key, ns.publisher, ns.subject_id, not_before, not_before + timedelta(days=ns.days)
    )
    try:
        Path(ns.key_out).write_bytes(signing.key_file_bytes(key))
        Path(ns.out).write_bytes(signing.canonical_certificate_bytes(cert))
    except OSError as exc:
        raise errors.IoFailure(str(exc)) from None
    stdout.write(f"fingerprint: {signing.fingerprint(cert)}\n")
    return EXIT_OK


def _read_file(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except FileNotFoundError:
        raise errors.NotFound(f"no such file: {path}") from None
    except OSError as exc:
        raise errors.IoFailure(str(exc)) from None


def _cmd_package(ns) -> int:
    descriptor = parse_descriptor(_read_file(ns.descriptor))
    cert = signing.parse_certificate(_read_file(ns.cert))
    key = signing.parse_key_file(_read_file(ns.key))
    if not Path(ns.dir).is_dir():
        raise errors.NotFound(f"no such directory: {ns.dir}")
    data = archive.build_package(Path(ns.dir), descriptor, cert, key)
    try:
        Path(ns.out).write_bytes(data)
    except OSError as exc:
        raise errors.IoFailure(str(exc)) from None
    return EXIT_OK


def _cmd_verify(ns, stdout: TextIO, stderr: TextIO) -> int:
    pkg = archive.read_package(_read_file(ns.package))
    report = archive.verify_integrity(pkg)
    stdout.write(f"integrity: {'OK' if report.ok else 'FAIL'}\n")
    cert = signing.parse_certificate(pkg.certificate_bytes)
    trust = signing.TrustStore.load(Path(ns.trust_dir) if ns.trust_dir else None)
    status = signing.classify_publisher(cert, trust, utc_now())
    if status.kind is signing.StatusKind.INVALID:
        stdout.write(f"publisher: INVALID({status.reason})\n")
    else:
        stdout.write(f"publisher: {status.kind.value.upper()}\n")
    signature_ok = signing.verify_signature(
        pkg.descriptor_bytes,
        archive.canonical_manifest_bytes(pkg.manifest),
        pkg.signature,
        cert,
    )
    if not report.ok:
        stderr.write("error: integrity: package contents do not match the manifest\n")
        return EXIT_INTEGRITY
    if not signature_ok:
        stderr.write("error: signature: package signature does not verify\n")
        return EXIT_INTEGRITY
    if status.kind is signing.StatusKind.INVALID:
        stderr.write(f"error: certificate invalid: {status.reason}\n")
        return EXIT_CERTIFICATE
    return EXIT_OK


def _cmd_run(ns, registry: installer.Registry, stdout: TextIO) -> int:
    ctx = runtime_api.open_context(runtime_api.ApplicationOrigin(ns.id), registry)
    descriptor = parse_descriptor(
        _read_file(str(registry.app_dir(ns.id) / "application.xml"))
    )
    entry = registry.files_dir(ns.id) / descriptor.window.content
    if not descriptor.window.content.endswith(feedreader.APP_EXTENSION):
        raise errors.BadConfig(
            f"entry {descriptor.window.content!r} is not a {feedreader.APP_EXTENSION} file"
        )
    cfg = feedreader.parse_feedapp_config(_read_file(str(entry)))
    if ns.output is not None:
        cfg = replace(cfg, output=feedreader.OutputMode(ns.output))
    stdout.write(feedreader.run_feed_app(ctx, cfg))
    return EXIT_OK


def run_cli(
    argv: list[str],
    *,
    stdin: TextIO | None = None,
    stdout: TextIO | None = None,
    stderr: TextIO | None = None,
    env: Mapping[str, str] | None = None,
) -> int:
    """Parse argv and dispatch; returns the exit code, never raises."""
    stdin = sys.stdin if stdin is None else stdin
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = _build_parser()
    try:
        # argparse writes help straight to the process streams; keep it
        # on the caller's streams instead.
        with redirect_stdout(stdout), redirect_stderr(stderr):
            ns = parser.parse_args(argv)
    except _UsageError as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    registry = installer.Registry.from_env(env)
    try:
        if ns.command == "certificate":
            return _cmd_certificate(ns, stdout)
        if ns.command == "package":
            return _cmd_package(ns)
        if ns.command == "verify":
            return _cmd_verify(ns, stdout, stderr)
        if ns.command == "install":
            trust = signing.TrustStore.load(Path(ns.trust_dir) if ns.trust_dir else None)
            installer.install(
                Path(ns.package), registry, trust, _consent_prompt(stdout, stdin, ns.yes)
            )
            return EXIT_OK
        if ns.command == "update":
            trust = signing.TrustStore.load(Path(ns.trust_dir) if ns.trust_dir else None)
            installer.update(
                Path(ns.package),
                registry,
                trust,
                _consent_prompt(stdout, stdin, ns.yes),
                force=ns.force,
            )
            return EXIT_OK
        if ns.command == "uninstall":
            installer.uninstall(ns.id, registry)
            return EXIT_OK
        if ns.command == "list":
            for app in installer.list_installed(registry):
                stdout.write(
                    f"{app.id}\t{app.version}\t{app.publisher_fingerprint}\t"
                    f"{app.publisher_status_at_install.kind.value}\t"
                    f"{format_utc(app.installed_at)}\n"
                )
            return EXIT_OK
        if ns.command == "run":
            return _cmd_run(ns, registry, stdout)
        if ns.command == "clipboard":
            if ns.clip_command == "get":
                text = runtime_api.clipboard_read(registry.root)
                if text is not None:
                    stdout.write(text + "\n")
            else:
                runtime_api.clipboard_write(registry.root, ns.text)
            return EXIT_OK
        if ns.command == "bus":
            ctx = runtime_api.open_context(
                runtime_api.ApplicationOrigin(ns.sender), registry
            )
            if ns.bus_command == "publish":
                seq = runtime_api.bus_publish(ctx, ns.channel, ns.message)
                stdout.write(f"{seq}\n")
            else:
                for message in runtime_api.bus_poll(ctx, ns.channel, ns.after):
                    stdout.write(
                        f"{message.seq}\t{message.sender}\t{format_utc(message.at)}\t"
                        f"{percent_encode(message.payload)}\n"
                    )
            return EXIT_OK
        raise _UsageError(f"unknown command {ns.command!r}")
    except _UsageError as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except errors.MiniairError as exc:
        stderr.write(f"error: {exc}\n")
        return _map_exit(exc)
    except Exception as exc:  # total mapping: nothing may escape as a traceback
        stderr.write(f"error: internal: {exc}\n")
        return EXIT_PRECONDITION


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
