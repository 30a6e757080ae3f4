from __future__ import annotations

import random
from datetime import timedelta

import pytest
from reference_crypto import ed25519_public_key_reference, sha256_reference

from miniair import signing
from miniair.errors import (
    BadCertificateFormat,
    BadKeyFormat,
    BadPublisher,
    BadSeedLength,
    EmptyPublisher,
    InvalidValidityWindow,
)
from miniair.fsutil import utc_now

# RFC 8032 test vector 1, frozen after checking against the published values
# and the pure-Python derivation oracle.
TV1_SEED = bytes.fromhex(
    "9d61b19deffd5a60ba844af492ec2cc44449c5697b326919703bac031cae7f60"
)
TV1_PUBLIC = bytes.fromhex(
    "d75a980182b10ab7d54bfed3c964073a0ee172f3daa62325af021a68f707511a"
)


def _cert(key=None, publisher="Pub", subject="com.example.app", days=365):
    key = key or signing.generate_keypair(b"\x01" * 32)
    now = utc_now()
    return key, signing.self_sign_certificate(
        key, publisher, subject, now - timedelta(days=1), now + timedelta(days=days)
    )


def test_keypair_matches_published_vector():
    assert signing.generate_keypair(TV1_SEED).public_key == TV1_PUBLIC


def test_keypair_matches_reference_oracle():
    rng = random.Random(42)
    for _ in range(5):
        seed = bytes(rng.randrange(256) for _ in range(32))
        assert signing.generate_keypair(seed).public_key == ed25519_public_key_reference(seed)


def test_keypair_deterministic_for_seed():
    assert signing.generate_keypair(TV1_SEED) == signing.generate_keypair(TV1_SEED)


def test_keypair_random_without_seed():
    a, b = signing.generate_keypair(), signing.generate_keypair()
    assert len(a.seed) == 32 and a.public_key != b.public_key


def test_keypair_bad_seed_length():
    with pytest.raises(BadSeedLength):
        signing.generate_keypair(b"\x00" * 31)


def test_key_file_round_trip():
    key = signing.generate_keypair(TV1_SEED)
    data = signing.key_file_bytes(key)
    assert data.startswith(b"MAIR-KEY 1\nseed: ")
    assert signing.parse_key_file(data) == key


def test_key_file_rejects_garbage():
    with pytest.raises(BadKeyFormat):
        signing.parse_key_file(b"MAIR-KEY 1\nseed: zz\n")


def test_self_sign_then_verify():
    _, cert = _cert()
    assert signing.verify_certificate(cert, utc_now()) is None


def test_certificate_expired():
    key = signing.generate_keypair(b"\x02" * 32)
    now = utc_now()
    cert = signing.self_sign_certificate(
        key, "Pub", "id", now - timedelta(days=10), now - timedelta(days=1)
    )
    assert signing.verify_certificate(cert, now) == signing.EXPIRED


def test_certificate_not_yet_valid():
    key = signing.generate_keypair(b"\x02" * 32)
    now = utc_now()
    cert = signing.self_sign_certificate(
        key, "Pub", "id", now + timedelta(days=1), now + timedelta(days=2)
    )
    assert signing.verify_certificate(cert, now) == signing.NOT_YET_VALID


def test_certificate_window_bounds_inclusive():
    key = signing.generate_keypair(b"\x02" * 32)
    now = utc_now()
    cert = signing.self_sign_certificate(key, "Pub", "id", now, now + timedelta(seconds=1))
    assert signing.verify_certificate(cert, now) is None
    assert signing.verify_certificate(cert, cert.not_after) is None


def test_certificate_flipped_signature_byte_detected():
    # flip-one-byte oracle over sampled positions
    _, cert = _cert()
    rng = random.Random(1)
    for _ in range(8):
        pos = rng.randrange(64)
        sig = bytearray(cert.self_signature)
        sig[pos] ^= 0x40
        tampered = signing.Certificate(
            publisher=cert.publisher,
            subject_id=cert.subject_id,
            public_key=cert.public_key,
            not_before=cert.not_before,
            not_after=cert.not_after,
            self_signature=bytes(sig),
        )
        assert signing.verify_certificate(tampered, utc_now()) == signing.BAD_SELF_SIGNATURE


def test_invalid_validity_window():
    key = signing.generate_keypair(b"\x03" * 32)
    now = utc_now()
    with pytest.raises(InvalidValidityWindow):
        signing.self_sign_certificate(key, "Pub", "id", now, now)


def test_empty_publisher():
    key = signing.generate_keypair(b"\x03" * 32)
    now = utc_now()
    with pytest.raises(EmptyPublisher):
        signing.self_sign_certificate(key, "", "id", now, now + timedelta(days=1))


def test_publisher_control_chars_rejected():
    key = signing.generate_keypair(b"\x03" * 32)
    now = utc_now()
    with pytest.raises(BadPublisher):
        signing.self_sign_certificate(key, "a\nb", "id", now, now + timedelta(days=1))


def test_certificate_bytes_deterministic():
    _, a = _cert()
    _, b = _cert()
    assert signing.canonical_certificate_bytes(a) == signing.canonical_certificate_bytes(b)


def test_certificate_round_trip_and_fingerprint_stability():
    _, cert = _cert(publisher="Some Pub & Co")
    data = signing.canonical_certificate_bytes(cert)
    parsed = signing.parse_certificate(data)
    assert parsed == cert
    assert signing.canonical_certificate_bytes(parsed) == data
    assert signing.fingerprint(parsed) == signing.fingerprint(cert)


def test_certificate_fingerprint_is_sha256_of_tbs():
    _, cert = _cert()
    tbs = signing.certificate_tbs_bytes(cert)
    assert signing.fingerprint(cert) == sha256_reference(tbs)
    data = signing.canonical_certificate_bytes(cert)
    assert data.startswith(tbs)
    assert data[len(tbs):].startswith(b"self-sig: ")


def test_parse_certificate_rejects_bad_format():
    for bad in (b"", b"MAIR-CERT 2\n", b"MAIR-CERT 1\npublisher: x\n"):
        with pytest.raises(BadCertificateFormat):
            signing.parse_certificate(bad)


def test_sign_and_verify_payload():
    key, cert = _cert()
    sig = signing.sign_payload(b"desc", b"manifest", key)
    assert len(sig) == 64
    assert signing.verify_signature(b"desc", b"manifest", sig, cert)
    assert not signing.verify_signature(b"Desc", b"manifest", sig, cert)
    assert not signing.verify_signature(b"desc", b"manifest2", sig, cert)


def test_signature_deterministic():
    key, _ = _cert()
    assert signing.sign_payload(b"a", b"b", key) == signing.sign_payload(b"a", b"b", key)


def test_verify_under_different_key_fails():
    key, _ = _cert()
    other_key = signing.generate_keypair(b"\x09" * 32)
    _, other_cert = _cert(key=other_key)
    sig = signing.sign_payload(b"d", b"m", key)
    assert not signing.verify_signature(b"d", b"m", sig, other_cert)


def test_verify_rejects_digest_case_change():
    # recompute via the signing oracle: uppercasing one digest char changes
    # the manifest bytes, hence the payload, hence verification fails
    key, cert = _cert()
    manifest = b"MAIR-MANIFEST 1\na.txt\t3\tba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad\n"
    sig = signing.sign_payload(b"d", manifest, key)
    tweaked = manifest.replace(b"ba7816", b"BA7816")
    assert tweaked != manifest
    assert signing.verify_signature(b"d", manifest, sig, cert)
    assert not signing.verify_signature(b"d", tweaked, sig, cert)


def test_sign_verify_property_randomized():
    rng = random.Random(99)
    for _ in range(25):
        seed = bytes(rng.randrange(256) for _ in range(32))
        key = signing.generate_keypair(seed)
        _, cert = _cert(key=key)
        payload = (
            bytes(rng.randrange(256) for _ in range(rng.randint(0, 64))),
            bytes(rng.randrange(256) for _ in range(rng.randint(0, 64))),
        )
        sig = signing.sign_payload(*payload, key)
        assert signing.verify_signature(*payload, sig, cert)
        other = signing.generate_keypair(bytes(rng.randrange(256) for _ in range(32)))
        _, other_cert = _cert(key=other)
        assert not signing.verify_signature(*payload, sig, other_cert)


def test_trust_store_load(tmp_path):
    _, cert = _cert()
    (tmp_path / "one.mcert").write_bytes(signing.canonical_certificate_bytes(cert))
    (tmp_path / "ignored.txt").write_text("not a cert")
    trust = signing.TrustStore.load(tmp_path)
    assert trust.trusted == frozenset({signing.fingerprint(cert)})
    assert signing.TrustStore.load(tmp_path / "missing").trusted == frozenset()
    assert signing.TrustStore.load(None).trusted == frozenset()


def test_classify_publisher_matrix():
    key, cert = _cert()
    now = utc_now()
    in_trust = signing.TrustStore(frozenset({signing.fingerprint(cert)}))
    empty = signing.TrustStore()

    assert signing.classify_publisher(cert, in_trust, now).kind is signing.StatusKind.VERIFIED
    assert signing.classify_publisher(cert, empty, now).kind is signing.StatusKind.UNVERIFIED

    expired = signing.self_sign_certificate(
        key, "Pub", "id", now - timedelta(days=9), now - timedelta(days=2)
    )
    for trust in (signing.TrustStore(frozenset({signing.fingerprint(expired)})), empty):
        status = signing.classify_publisher(expired, trust, now)
        assert status.kind is signing.StatusKind.INVALID
        assert status.reason == signing.EXPIRED


def test_classify_monotone_in_trust():
    rng = random.Random(5)
    now = utc_now()
    certs = []
    for i in range(6):
        key = signing.generate_keypair(bytes([i]) * 32)
        certs.append(_cert(key=key)[1])
    trusted: set[str] = set()
    for cert in certs:
        before = {
            c.subject_id: signing.classify_publisher(c, signing.TrustStore(frozenset(trusted)), now)
            for c in certs
        }
        trusted.add(signing.fingerprint(rng.choice(certs)))
        after = {
            c.subject_id: signing.classify_publisher(c, signing.TrustStore(frozenset(trusted)), now)
            for c in certs
        }
        for cert_id, status in before.items():
            if status.kind is signing.StatusKind.VERIFIED:
                assert after[cert_id].kind is signing.StatusKind.VERIFIED
