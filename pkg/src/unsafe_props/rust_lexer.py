"""Lightweight lexical stripping of Rust comments and string literals.

A full parse is deliberately avoided; this handles line comments, nested
block comments, plain and raw strings (with hash delimiters), byte
strings, and char literals while leaving lifetimes alone. Stripped spans
are blanked with spaces so token boundaries and line numbers survive.
"""

from __future__ import annotations

import re

_RAW_STRING_START = re.compile(r'(?:b?r)(#*)"')


def strip_comments_and_strings(text: str) -> str:
    out = list(text)
    n = len(text)
    i = 0

    def blank(start: int, end: int) -> None:
        for k in range(start, min(end, n)):
            if out[k] != "\n":
                out[k] = " "

    while i < n:
        ch = text[i]
        nxt = text[i + 1] if i + 1 < n else ""

        if ch == "/" and nxt == "/":
            end = text.find("\n", i)
            end = n if end == -1 else end
            blank(i, end)
            i = end
            continue

        if ch == "/" and nxt == "*":
            i = _skip_block_comment(text, i, blank)
            continue

        if ch in "br" and not _is_ident_char(text, i - 1):
            match = _RAW_STRING_START.match(text, i)
            if match:
                i = _skip_raw_string(text, i, len(match.group(1)), match.end(), blank)
                continue
            if ch == "b" and nxt == '"':
                i = _skip_plain_string(text, i, i + 2, blank)
                continue
            if ch == "b" and nxt == "'":
                i = _skip_char_or_lifetime(text, i, i + 1, blank)
                continue

        if ch == '"':
            i = _skip_plain_string(text, i, i + 1, blank)
            continue

        if ch == "'":
            i = _skip_char_or_lifetime(text, i, i, blank)
            continue

        i += 1

    return "".join(out)


def _is_ident_char(text: str, i: int) -> bool:
    return i >= 0 and (text[i].isalnum() or text[i] == "_")


def _skip_block_comment(text: str, start: int, blank) -> int:
    n = len(text)
    depth = 1
    i = start + 2
    while i < n and depth:
        if text.startswith("/*", i):
            depth += 1
            i += 2
        elif text.startswith("*/", i):
            depth -= 1
            i += 2
        else:
            i += 1
    blank(start, i)
    return i


def _skip_plain_string(text: str, start: int, body: int, blank) -> int:
    n = len(text)
    i = body
    while i < n:
        if text[i] == "\\":
            i += 2
            continue
        if text[i] == '"':
            i += 1
            break
        i += 1
    else:
        i = n
    blank(start, i)
    return i


def _skip_raw_string(text: str, start: int, hashes: int, body: int, blank) -> int:
    closer = '"' + "#" * hashes
    end = text.find(closer, body)
    end = len(text) if end == -1 else end + len(closer)
    blank(start, end)
    return end


def _skip_char_or_lifetime(text: str, start: int, quote: int, blank) -> int:
    """Strip a char literal; step over the quote of a lifetime."""
    n = len(text)
    after = quote + 1
    if after < n and text[after] == "\\":
        i = after + 1
        while i < n:
            if text[i] == "\\":
                i += 2
                continue
            if text[i] == "'":
                blank(start, i + 1)
                return i + 1
            if text[i] == "\n":
                break
            i += 1
        blank(start, i)
        return i
    if after + 1 < n and text[after] != "'" and text[after + 1] == "'":
        blank(start, after + 2)
        return after + 2
    return quote + 1
