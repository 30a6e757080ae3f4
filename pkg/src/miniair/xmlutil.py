"""Minimal XML helpers: bounded parse, local-name matching, text extraction.

The supported subset: well-formed UTF-8 documents, predefined entities,
CDATA, comments and processing instructions (skipped). Doctype declarations
are rejected outright; namespace prefixes are ignored by matching local
names only.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET

from .errors import MalformedXml


def parse_xml(data: bytes) -> ET.Element:
    if b"<!DOCTYPE" in data:
        raise MalformedXml("doctype declarations are not supported")
    try:
        return ET.fromstring(data)
    except ET.ParseError as exc:
        raise MalformedXml(str(exc)) from None


def local_name(tag: object) -> str | None:
    """Local element name, or None for non-element nodes (comments, PIs)."""
    if not isinstance(tag, str):
        return None
    if tag.startswith("{"):
        return tag.rpartition("}")[2]
    return tag


def first_child(elem: ET.Element, name: str) -> ET.Element | None:
    for child in elem:
        if local_name(child.tag) == name:
            return child
    return None


def text_content(elem: ET.Element) -> str:
    """All text and CDATA within the element, entity-decoded, untrimmed."""
    return "".join(elem.itertext())
