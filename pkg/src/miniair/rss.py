"""RSS 2.0: lenient parsing, strict required-tag validation, rendering.

Parsing mirrors a jQuery-style reader: any well-formed document with an
``rss`` root and a ``channel`` child yields a Feed; absent tags simply
produce absent fields. ``validate_feed`` is the only strictness gate
(channel title/link/description present, at least one item, each item
with title/link/description). Rendering substitutes field text into the
fixed entry template verbatim, with no escaping or trimming.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import xmlutil
from .errors import NoChannel, NoRssRoot


@dataclass(frozen=True)
class ChannelMeta:
    """Channel metadata; None means the tag was absent, '' present but empty."""

    title: str | None
    link: str | None
    description: str | None


@dataclass(frozen=True)
class FeedItem:
    title: str | None
    link: str | None
    description: str | None
    pub_date: str = ""  # never required; empty when absent


@dataclass(frozen=True)
class Feed:
    channel: ChannelMeta
    items: tuple[FeedItem, ...]


def parse_feed(xml: bytes) -> Feed:
    """Lenient extraction: rss -> channel, every item element in document order."""
    root = xmlutil.parse_xml(xml)
    if xmlutil.local_name(root.tag) != "rss":
        raise NoRssRoot("document root is not <rss>")
    channel = xmlutil.first_child(root, "channel")
    if channel is None:
        raise NoChannel("<rss> has no <channel>")

    def child_text(elem, name: str) -> str | None:
        child = xmlutil.first_child(elem, name)
        return None if child is None else xmlutil.text_content(child)

    meta = ChannelMeta(
        title=child_text(channel, "title"),
        link=child_text(channel, "link"),
        description=child_text(channel, "description"),
    )
    items = []
    for elem in channel.iter():
        if elem is channel or xmlutil.local_name(elem.tag) != "item":
            continue
        items.append(
            FeedItem(
                title=child_text(elem, "title"),
                link=child_text(elem, "link"),
                description=child_text(elem, "description"),
                pub_date=child_text(elem, "pubDate") or "",
            )
        )
    return Feed(channel=meta, items=tuple(items))


def validate_feed(f: Feed) -> list[str]:
    """Required-tag check; returns dotted paths of violations (empty = valid).

    An empty element counts as present; only absent tags are violations.
    """
    report = []
    for name in ("title", "link", "description"):
        if getattr(f.channel, name) is None:
            report.append(f"channel.{name} missing")
    if not f.items:
        report.append("channel.items: at least one required")
    for index, item in enumerate(f.items):
        for name in ("title", "link", "description"):
            if getattr(item, name) is None:
                report.append(f"item[{index}].{name} missing")
    return report


def render_item_html(item: FeedItem) -> str:
    """One entry block; raw substitution, markup in fields passes through."""
    return (
        "<div class='entry'>"
        f"<h2 class='postTitle'>{item.title or ''}</h2>"
        f"<em class='date'>{item.pub_date}</em>"
        f"<p class='description'>{item.description or ''}</p>"
        f"<a href='{item.link or ''}' target='_blank'>Read More >></a>"
        "</div>"
    )


def render_feed_html(f: Feed) -> str:
    return "".join(render_item_html(item) for item in f.items)


def render_feed_text(f: Feed) -> str:
    """Terminal-friendly rendering: one block per item, blank-line separated."""
    return "".join(
        f"= {item.title or ''}\n{item.pub_date}\n{item.description or ''}\n"
        f"-> {item.link or ''}\n\n"
        for item in f.items
    )
