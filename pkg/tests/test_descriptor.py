from __future__ import annotations

import random

import pytest

from miniair import descriptor as d
from miniair.errors import InvalidDescriptor, InvalidValue, MalformedXml, MissingElement

FULL_XML = b"""<?xml version="1.0" encoding="UTF-8"?>
<application>
  <name>MyApp</name>
  <id>com.mypage.myname</id>
  <filename>myapp</filename>
  <version>1.0</version>
  <somethingUnknown>ignored</somethingUnknown>
  <initialWindow>
    <content>index.feedapp</content>
    <unknownChild/>
  </initialWindow>
</application>
"""


def test_parse_minimal_descriptor():
    desc = d.parse_descriptor(FULL_XML)
    assert desc.id == "com.mypage.myname"
    assert desc.name == "MyApp"
    assert desc.filename == "myapp"
    assert desc.version == "1.0"
    assert desc.window.content == "index.feedapp"
    assert desc.window.system_chrome is d.SystemChrome.STANDARD
    assert desc.window.transparent is False
    assert desc.window.width is None and desc.window.max_height is None


def test_parse_missing_id():
    xml = FULL_XML.replace(b"<id>com.mypage.myname</id>", b"")
    with pytest.raises(MissingElement) as info:
        d.parse_descriptor(xml)
    assert info.value.path == "application/id"


@pytest.mark.parametrize(
    "removed, path",
    [
        (b"<name>MyApp</name>", "application/name"),
        (b"<filename>myapp</filename>", "application/filename"),
        (b"<version>1.0</version>", "application/version"),
        (b"<content>index.feedapp</content>", "application/initialWindow/content"),
    ],
)
def test_parse_missing_required_elements(removed, path):
    xml = FULL_XML.replace(removed, b"")
    with pytest.raises(MissingElement) as info:
        d.parse_descriptor(xml)
    assert info.value.path == path


def test_parse_missing_initial_window():
    xml = (
        b"<application><id>a.b</id><name>n</name><filename>f</filename>"
        b"<version>1</version></application>"
    )
    with pytest.raises(MissingElement) as info:
        d.parse_descriptor(xml)
    assert info.value.path == "application/initialWindow"


def test_parse_custom_chrome_and_transparent():
    xml = FULL_XML.replace(
        b"<content>index.feedapp</content>",
        b"<content>index.feedapp</content>"
        b"<systemChrome>none</systemChrome><transparent>true</transparent>"
        b"<width>640</width><height>480</height>",
    )
    desc = d.parse_descriptor(xml)
    assert desc.window.system_chrome is d.SystemChrome.NONE
    assert desc.window.transparent is True
    assert desc.window.width == 640 and desc.window.height == 480


@pytest.mark.parametrize(
    "original, replacement",
    [
        (b"<version>1.0</version>", b"<version>1.a</version>"),
        (b"<version>1.0</version>", b"<version>1..0</version>"),
        (b"<version>1.0</version>", b"<version>+1.0</version>"),
        (b"<version>1.0</version>", b"<version>1.0.0.0</version>"),
        (b"<version>1.0</version>", b"<version> 1.0 </version>"),
        (b"<id>com.mypage.myname</id>", b"<id>com..myname</id>"),
        (b"<id>com.mypage.myname</id>", b"<id>-bad</id>"),
        (b"<filename>myapp</filename>", b"<filename>a/b</filename>"),
        (b"<filename>myapp</filename>", b"<filename>..</filename>"),
        (b"<content>index.feedapp</content>", b"<content>../x</content>"),
        (b"<content>index.feedapp</content>", b"<content>/abs</content>"),
    ],
)
def test_parse_rejects_grammar_violations(original, replacement):
    with pytest.raises(InvalidValue):
        d.parse_descriptor(FULL_XML.replace(original, replacement))


def test_parse_rejects_bad_window_values():
    for bad in (b"<systemChrome>Standard</systemChrome>",
                b"<transparent>TRUE</transparent>",
                b"<width>0</width>",
                b"<width>12a</width>",
                b"<width>-3</width>"):
        xml = FULL_XML.replace(b"<unknownChild/>", bad)
        with pytest.raises(InvalidValue):
            d.parse_descriptor(xml)


def test_parse_overlong_id_rejected():
    long_id = ".".join(["a" * 10] * 20)  # 219 chars
    assert len(long_id) > d.MAX_ID_LENGTH
    xml = FULL_XML.replace(b"com.mypage.myname", long_id.encode())
    with pytest.raises(InvalidValue):
        d.parse_descriptor(xml)


def test_parse_not_xml():
    with pytest.raises(MalformedXml):
        d.parse_descriptor(b"\x00\x01 not xml")


def test_parse_rejects_doctype():
    with pytest.raises(MalformedXml):
        d.parse_descriptor(b"<!DOCTYPE application []>" + FULL_XML)


def test_parse_wrong_root():
    with pytest.raises(MissingElement) as info:
        d.parse_descriptor(b"<app><id>a</id></app>")
    assert info.value.path == "application"


def test_parse_decodes_entities_and_cdata():
    xml = FULL_XML.replace(b"<name>MyApp</name>", b"<name>A &amp; B <![CDATA[<raw>]]></name>")
    assert d.parse_descriptor(xml).name == "A & B <raw>"


def _valid(**kwargs) -> d.AppDescriptor:
    window = d.WindowConfig(
        content=kwargs.pop("content", "index.feedapp"),
        system_chrome=kwargs.pop("system_chrome", d.SystemChrome.STANDARD),
        transparent=kwargs.pop("transparent", False),
        **{k: kwargs.pop(k) for k in list(kwargs) if k.endswith(("width", "height"))},
    )
    return d.AppDescriptor(
        id=kwargs.pop("id", "com.mypage.myname"),
        name=kwargs.pop("name", "MyApp"),
        filename=kwargs.pop("filename", "myapp"),
        version=kwargs.pop("version", "1.0"),
        window=window,
    )


def test_validate_valid_descriptor_is_clean():
    assert d.validate_descriptor(_valid()) == []


def test_validate_transparent_requires_custom_chrome():
    bad = _valid(transparent=True)
    assert d.validate_descriptor(bad) == [d.TRANSPARENT_REQUIRES_CUSTOM_CHROME]
    ok = _valid(transparent=True, system_chrome=d.SystemChrome.NONE)
    assert d.validate_descriptor(ok) == []


def test_validate_bad_version():
    assert d.validate_descriptor(_valid(version="1.a")) == [d.BAD_VERSION]


def test_validate_reports_each_violation_once():
    bad = _valid(
        id="..",
        name="",
        version="x",
        filename="a/b",
        content="../up",
        transparent=True,
        width=5,
        min_width=9,
        max_width=2,
        height=0,
    )
    report = d.validate_descriptor(bad)
    assert sorted(report) == sorted(
        [
            d.BAD_ID,
            d.EMPTY_NAME,
            d.BAD_FILENAME,
            d.BAD_VERSION,
            d.BAD_CONTENT_PATH,
            d.TRANSPARENT_REQUIRES_CUSTOM_CHROME,
            d.BAD_DIMENSION,
            d.WIDTH_BOUNDS,
        ]
    )
    assert len(report) == len(set(report))


def test_validate_height_bounds():
    assert d.validate_descriptor(_valid(min_height=100, max_height=50)) == [d.HEIGHT_BOUNDS]


def test_canonical_round_trip_fixed():
    desc = _valid(transparent=True, system_chrome=d.SystemChrome.NONE, width=640,
                  min_width=320, max_width=1280)
    assert d.parse_descriptor(d.canonical_descriptor(desc)) == desc


def test_canonical_deterministic():
    a = _valid()
    b = _valid()
    assert d.canonical_descriptor(a) == d.canonical_descriptor(b)


def test_canonical_omits_absent_sizes():
    data = d.canonical_descriptor(_valid())
    for tag in (b"width", b"height", b"minWidth", b"maxHeight"):
        assert tag not in data
    # required window fields always serialized
    assert b"<systemChrome>standard</systemChrome>" in data
    assert b"<transparent>false</transparent>" in data


def test_canonical_rejects_invalid():
    with pytest.raises(InvalidDescriptor):
        d.canonical_descriptor(_valid(transparent=True))


def _random_descriptor(rng: random.Random) -> d.AppDescriptor:
    label = lambda: "".join(rng.choices("abcz09", k=rng.randint(1, 5)))
    app_id = ".".join(label() for _ in range(rng.randint(1, 4)))
    name = "".join(rng.choices("aA &<>'\"é!", k=rng.randint(1, 12)))
    filename = "".join(rng.choices("abc-_.09", k=rng.randint(1, 8))).strip(".") or "f"
    while ".." in filename:
        filename = filename.replace("..", ".")
    version = ".".join(str(rng.randint(0, 99)) for _ in range(rng.randint(1, 3)))
    segments = [label() for _ in range(rng.randint(1, 3))]
    chrome = rng.choice(list(d.SystemChrome))
    transparent = chrome is d.SystemChrome.NONE and rng.random() < 0.5
    sizes = {}
    if rng.random() < 0.5:
        lo, mid, hi = sorted(rng.randint(1, 2000) for _ in range(3))
        sizes = {"min_width": lo, "width": mid, "max_width": hi}
    return d.AppDescriptor(
        id=app_id,
        name=name,
        filename=filename,
        version=version,
        window=d.WindowConfig(
            content="/".join(segments),
            system_chrome=chrome,
            transparent=transparent,
            **sizes,
        ),
    )


def test_canonical_round_trip_randomized():
    rng = random.Random(20260809)
    for _ in range(300):
        desc = _random_descriptor(rng)
        assert d.validate_descriptor(desc) == []
        data = d.canonical_descriptor(desc)
        assert d.parse_descriptor(data) == desc
        assert d.canonical_descriptor(d.parse_descriptor(data)) == data


def test_reverse_domain_id_examples():
    assert d.reverse_domain_id("myname.mypage.com") == "com.mypage.myname"
    assert d.reverse_domain_id("localhost") == "localhost"
    assert d.reverse_domain_id("a.b") == "b.a"


def test_reverse_domain_id_empty_label():
    with pytest.raises(InvalidValue):
        d.reverse_domain_id("a..b")
    with pytest.raises(InvalidValue):
        d.reverse_domain_id("")


def test_reverse_domain_id_involution():
    rng = random.Random(7)
    for _ in range(100):
        host = ".".join(
            "".join(rng.choices("abc123", k=rng.randint(1, 6)))
            for _ in range(rng.randint(1, 5))
        )
        assert d.reverse_domain_id(d.reverse_domain_id(host)) == host
