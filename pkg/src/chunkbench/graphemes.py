"""Boundary safety for combining-mark scripts.

A chunk boundary placed before a combining mark detaches the mark from its
base (Khmer dependent vowels U+17B6..U+17D3 are the common case here), and a
boundary right after KHMER SIGN COENG (U+17D2) splits a subscript-consonant
cluster. These helpers classify boundary positions and nudge unsafe ones.
"""

from __future__ import annotations

import unicodedata

COENG = "្"
ZWJ = "‍"

_MARK_CATEGORIES = ("Mn", "Mc", "Me")


def is_safe_boundary(text: str, pos: int) -> bool:
    """True when cutting text at pos does not split a grapheme cluster.

    Position pos is the gap before text[pos]; 0 and len(text) are always safe.
    """
    if pos <= 0 or pos >= len(text):
        return True
    ch = text[pos]
    if unicodedata.category(ch) in _MARK_CATEGORIES:
        return False
    prev = text[pos - 1]
    if prev == COENG or prev == ZWJ or ch == ZWJ:
        return False
    return True


def snap_backward(text: str, pos: int) -> int:
    """Largest safe position <= pos."""
    while pos > 0 and not is_safe_boundary(text, pos):
        pos -= 1
    return pos


def snap_forward(text: str, pos: int) -> int:
    """Smallest safe position >= pos."""
    n = len(text)
    while pos < n and not is_safe_boundary(text, pos):
        pos += 1
    return pos
