"""Pluggable token counting.

Exact tokenizers are provider-specific, so everything that needs token
counts (skill footprints, trajectory caps) takes a counter function.  The
default counts whitespace-delimited tokens; all invariants hold for any
counter.
"""

from __future__ import annotations

from typing import Callable

TokenCounter = Callable[[str], int]


def whitespace_tokens(text: str) -> int:
    return len(text.split())


def truncate_tokens(text: str, limit: int, counter: TokenCounter | None = None) -> str:
    """Keep the longest prefix of `text` with at most `limit` tokens.

    Only meaningful for the whitespace counter; custom counters should
    supply their own truncation upstream.
    """
    if counter is not None and counter is not whitespace_tokens:
        # Generic fallback: binary-search a character prefix under the counter.
        if counter(text) <= limit:
            return text
        lo, hi = 0, len(text)
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if counter(text[:mid]) <= limit:
                lo = mid
            else:
                hi = mid - 1
        return text[:lo]
    parts = text.split()
    if len(parts) <= limit:
        return text
    return " ".join(parts[:limit])
