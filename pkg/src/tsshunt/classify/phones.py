from __future__ import annotations

import html as htmllib
import re
from dataclasses import dataclass

from ..text import decode_html

TOLL_FREE_PREFIXES = ("800", "833", "844", "855", "866", "877", "888")

# NANP number in the usual written forms: (877) 884-6922, 877-884-6922,
# 1-877-884-6922, +18778846922, or a bare digit run inside other text.
_PHONE_RE = re.compile(
    r"(?<!\d)(?:\+?1[\s.\-]?)?\(?(?P<area>\d{3})\)?[\s.\-]?(?P<exch>\d{3})[\s.\-]?(?P<line>\d{4})(?!\d)"
)


@dataclass(frozen=True)
class TollFreeNumber:
    digits: str
    prefix: str
    raw_match: str


def find_phone_numbers(text: str) -> list[tuple[str, str]]:
    """Every NANP-looking number as (10 digits, matched text)."""
    return [
        (m.group("area") + m.group("exch") + m.group("line"), m.group(0))
        for m in _PHONE_RE.finditer(text)
    ]


def extract_phone_numbers(page: bytes | str) -> list[TollFreeNumber]:
    """Toll-free numbers on a page, deduplicated by digits in first-seen order."""
    raw = decode_html(page)
    seen: dict[str, TollFreeNumber] = {}
    for text in (raw, htmllib.unescape(raw)):
        for digits, match in find_phone_numbers(text):
            if digits[:3] in TOLL_FREE_PREFIXES and digits not in seen:
                seen[digits] = TollFreeNumber(digits, digits[:3], match)
    return list(seen.values())


def normalize_phone(value: str) -> str:
    digits = re.sub(r"\D", "", value)
    if len(digits) == 11 and digits.startswith("1"):
        digits = digits[1:]
    return digits
