"""Shared test helpers: sample app builders and a loopback HTTP fixture."""

from __future__ import annotations

import io
import threading
import time
from dataclasses import dataclass, field
from datetime import timedelta
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from miniair import signing
from miniair.archive import build_package
from miniair.cli import run_cli
from miniair.descriptor import AppDescriptor, WindowConfig, canonical_descriptor
from miniair.fsutil import utc_now

SAMPLE_ID = "com.mypage.myname"
SAMPLE_SEED = bytes(range(32))

MINIMAL_FEED_XML = (Path(__file__).parent / "data" / "minimal_feed.xml").read_bytes()


def sample_keypair(seed: bytes = SAMPLE_SEED) -> signing.KeyPair:
    return signing.generate_keypair(seed)


def sample_certificate(
    key: signing.KeyPair | None = None,
    publisher: str = "Example Publisher",
    subject_id: str = SAMPLE_ID,
    days: int = 3650,
) -> tuple[signing.Certificate, signing.KeyPair]:
    key = key or sample_keypair()
    now = utc_now()
    cert = signing.self_sign_certificate(
        key, publisher, subject_id, now - timedelta(days=1), now + timedelta(days=days)
    )
    return cert, key


def sample_descriptor(
    app_id: str = SAMPLE_ID,
    version: str = "1.0",
    content: str = "index.feedapp",
    **window_kwargs,
) -> AppDescriptor:
    return AppDescriptor(
        id=app_id,
        name="MyApp",
        filename="myapp",
        version=version,
        window=WindowConfig(content=content, **window_kwargs),
    )


def write_feedapp(directory: Path, name: str = "index.feedapp", source: str = "clipboard") -> None:
    directory.mkdir(parents=True, exist_ok=True)
    (directory / name).write_text(f"engine=feedreader\nsource={source}\n")


def build_sample_package(
    tmp_path: Path,
    app_id: str = SAMPLE_ID,
    version: str = "1.0",
    key: signing.KeyPair | None = None,
    extra_files: dict[str, bytes] | None = None,
) -> bytes:
    """A ready-to-install package holding one feed-reader entry."""
    content = tmp_path / f"content-{app_id}-{version}"
    write_feedapp(content)
    for rel, data in (extra_files or {}).items():
        target = content / rel
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(data)
    cert, key = sample_certificate(key, subject_id=app_id)
    return build_package(content, sample_descriptor(app_id, version), cert, key)


def write_sample_inputs(tmp_path: Path) -> dict[str, Path]:
    """Descriptor, cert, key, and content dir on disk for CLI-level tests."""
    content = tmp_path / "content"
    write_feedapp(content)
    cert, key = sample_certificate()
    paths = {
        "content": content,
        "descriptor": tmp_path / "application.xml",
        "cert": tmp_path / "publisher.mcert",
        "key": tmp_path / "publisher.mkey",
        "package": tmp_path / "app.air",
    }
    paths["descriptor"].write_bytes(canonical_descriptor(sample_descriptor()))
    paths["cert"].write_bytes(signing.canonical_certificate_bytes(cert))
    paths["key"].write_bytes(signing.key_file_bytes(key))
    return paths


@dataclass
class CliResult:
    code: int
    out: str
    err: str


def cli(argv: list[str], env: dict[str, str], stdin: str = "") -> CliResult:
    out, err = io.StringIO(), io.StringIO()
    code = run_cli(argv, stdin=io.StringIO(stdin), stdout=out, stderr=err, env=env)
    return CliResult(code=code, out=out.getvalue(), err=err.getvalue())


@dataclass
class Route:
    status: int = 200
    body: bytes = b""
    headers: dict[str, str] = field(default_factory=dict)
    delay: float = 0.0


class FixtureServer:
    """Loopback HTTP server with fixed routes and a request counter."""

    def __init__(self, routes: dict[str, Route]):
        self.routes = dict(routes)
        self.request_count = 0
        fixture = self

        class Handler(BaseHTTPRequestHandler):
            def do_GET(self):  # noqa: N802 - http.server API
                fixture.request_count += 1
                route = fixture.routes.get(self.path)
                if route is None:
                    self.send_response(404)
                    self.send_header("Content-Length", "0")
                    self.end_headers()
                    return
                if route.delay:
                    time.sleep(route.delay)
                self.send_response(route.status)
                for name, value in route.headers.items():
                    self.send_header(name, value)
                self.send_header("Content-Length", str(len(route.body)))
                self.end_headers()
                self.wfile.write(route.body)

            def log_message(self, *args):
                pass

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def base_url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def url(self, path: str) -> str:
        return self.base_url + path

    def __enter__(self) -> "FixtureServer":
        self._thread.start()
        return self

    def __exit__(self, *exc) -> None:
        self._server.shutdown()
        self._server.server_close()
        self._thread.join(timeout=5)
