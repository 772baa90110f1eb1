"""Parsing of Rust function signatures into a structured form.

The grammar covers what standard-library unsafe APIs need: paths,
references, raw pointers, tuples, slices, arrays, trait objects, generic
arguments, and function-pointer types. Where-clauses are kept unparsed in
the raw text. Marker traits ("unsafe trait Send") are accepted as
degenerate signatures so the document database can describe them; their
requirements bind to the implementing type, exposed as a by-value receiver.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass

from .errors import SignatureError

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_QUALIFIERS = {"pub", "const", "unsafe", "async", "auto", "default"}
_OPEN = {"(": ")", "[": "]", "{": "}"}
_CLOSE = {")": "(", "]": "[", "}": "{"}


class Receiver(enum.Enum):
    NONE = "none"
    BY_VALUE = "by-value"
    SHARED_REF = "shared-ref"
    MUT_REF = "mut-ref"


@dataclass(frozen=True)
class Param:
    name: str
    type_text: str


@dataclass(frozen=True)
class ApiSignature:
    raw: str
    name: str
    params: tuple[Param, ...]
    return_type: str
    receiver: Receiver
    generics_text: str

    def param_names(self) -> list[str]:
        return [p.name for p in self.params]


def _normalize_ws(text: str) -> str:
    return " ".join(text.split())


def _skip_ws(text: str, i: int) -> int:
    while i < len(text) and text[i].isspace():
        i += 1
    return i


def _read_ident(text: str, i: int) -> tuple[str, int]:
    match = _IDENT.match(text, i)
    if not match:
        raise SignatureError(f"expected identifier at offset {i} in {text!r}")
    return match.group(0), match.end()


def _match_balanced(text: str, i: int) -> int:
    """Index just past the bracket group opening at ``i``.

    Tracks (), [], {} strictly and <> heuristically (an arrow's ``>`` does
    not close an angle bracket).
    """
    stack: list[str] = []
    angle = 0
    opener = text[i]
    if opener == "<":
        angle = 1
    elif opener in _OPEN:
        stack.append(opener)
    else:
        raise SignatureError(f"not a bracket at offset {i}")
    j = i + 1
    while j < len(text):
        ch = text[j]
        if ch in _OPEN:
            stack.append(ch)
        elif ch in _CLOSE:
            if not stack or stack[-1] != _CLOSE[ch]:
                raise SignatureError(f"unbalanced brackets in {text!r}")
            stack.pop()
        elif ch == "<" and not _is_arrow_or_cmp(text, j):
            angle += 1
        elif ch == ">" and angle and text[j - 1] != "-":
            angle -= 1
        j += 1
        if not stack and not angle:
            return j
    raise SignatureError(f"unbalanced brackets in {text!r}")


def _is_arrow_or_cmp(text: str, i: int) -> bool:
    # "<" only opens generics when it follows an identifier, "::" or another
    # bracket; this keeps stray comparisons from confusing the counter.
    k = i - 1
    while k >= 0 and text[k].isspace():
        k -= 1
    return k >= 0 and not (text[k].isalnum() or text[k] in "_:>")


def _split_top_level(text: str, sep: str) -> list[str]:
    """Split on ``sep`` at zero bracket depth, honoring <> and arrows."""
    parts: list[str] = []
    depth = 0
    angle = 0
    start = 0
    i = 0
    while i < len(text):
        ch = text[i]
        if ch in _OPEN:
            depth += 1
        elif ch in _CLOSE:
            depth -= 1
            if depth < 0:
                raise SignatureError(f"unbalanced brackets in {text!r}")
        elif ch == "<" and not _is_arrow_or_cmp(text, i):
            angle += 1
        elif ch == ">" and angle and text[i - 1] != "-":
            angle -= 1
        elif ch == sep and depth == 0 and angle == 0:
            parts.append(text[start:i])
            start = i + 1
        i += 1
    if depth != 0:
        raise SignatureError(f"unbalanced brackets in {text!r}")
    parts.append(text[start:])
    return parts


_RECEIVER_FORMS = [
    (re.compile(r"^&\s*(?:'[A-Za-z_][A-Za-z0-9_]*\s+)?mut\s+self$"), Receiver.MUT_REF),
    (re.compile(r"^&\s*(?:'[A-Za-z_][A-Za-z0-9_]*\s+)?self$"), Receiver.SHARED_REF),
    (re.compile(r"^(?:mut\s+)?self$"), Receiver.BY_VALUE),
]


def parse_signature(raw: str) -> ApiSignature:
    """Parse one function (or marker-trait) signature."""
    if not raw or not raw.strip():
        raise SignatureError("empty input")
    text = raw
    i = _skip_ws(text, 0)

    kind = None
    while True:
        i = _skip_ws(text, i)
        word, j = _read_ident(text, i)
        if word == "fn" or word == "trait":
            kind = word
            i = j
            break
        if word == "extern":
            i = _skip_ws(text, j)
            if i < len(text) and text[i] == '"':
                end = text.find('"', i + 1)
                if end == -1:
                    raise SignatureError(f"unterminated ABI string in {raw!r}")
                i = end + 1
            continue
        if word in _QUALIFIERS:
            i = _skip_ws(text, j)
            if word == "pub" and i < len(text) and text[i] == "(":
                i = _match_balanced(text, i)
                i = _skip_ws(text, i)
            continue
        raise SignatureError(f"unexpected token {word!r} in {raw!r}")

    i = _skip_ws(text, i)
    name, i = _read_ident(text, i)
    i = _skip_ws(text, i)

    generics_text = ""
    if i < len(text) and text[i] == "<":
        end = _match_balanced(text, i)
        generics_text = _normalize_ws(text[i + 1 : end - 1])
        i = _skip_ws(text, end)

    if kind == "trait":
        if text[i:].strip():
            raise SignatureError(f"unexpected trailing text in trait signature {raw!r}")
        return ApiSignature(
            raw=raw,
            name=name,
            params=(),
            return_type="()",
            receiver=Receiver.BY_VALUE,
            generics_text=generics_text,
        )

    if i >= len(text) or text[i] != "(":
        raise SignatureError(f"expected parameter list in {raw!r}")
    params_end = _match_balanced(text, i)
    params_text = text[i + 1 : params_end - 1]
    i = _skip_ws(text, params_end)

    return_type = "()"
    if text[i : i + 2] == "->":
        rest = text[i + 2 :]
        where_split = _split_on_where(rest)
        return_type = _normalize_ws(where_split[0])
        if not return_type:
            raise SignatureError(f"missing return type after -> in {raw!r}")

    receiver = Receiver.NONE
    params: list[Param] = []
    for chunk in _split_top_level(params_text, ","):
        part = chunk.strip()
        if not part:
            continue
        if not params and receiver is Receiver.NONE:
            matched = _match_receiver(part)
            if matched is not None:
                receiver = matched
                continue
        pieces = _split_top_level(part, ":")
        if len(pieces) < 2:
            raise SignatureError(f"missing parameter name in {part!r}")
        pname = pieces[0].strip()
        if pname.startswith("mut "):
            pname = pname[4:].strip()
        if not _IDENT.fullmatch(pname):
            raise SignatureError(f"missing parameter name in {part!r}")
        if pname == "self":
            raise SignatureError(f"receiver must be the first parameter in {raw!r}")
        type_text = _normalize_ws(":".join(pieces[1:]))
        if not type_text:
            raise SignatureError(f"missing type for parameter {pname!r}")
        params.append(Param(name=pname, type_text=type_text))

    names = [p.name for p in params]
    if len(names) != len(set(names)):
        raise SignatureError(f"duplicate parameter names in {raw!r}")

    return ApiSignature(
        raw=raw,
        name=name,
        params=tuple(params),
        return_type=return_type,
        receiver=receiver,
        generics_text=generics_text,
    )


def _match_receiver(part: str) -> Receiver | None:
    for pattern, receiver in _RECEIVER_FORMS:
        if pattern.match(part):
            return receiver
    return None


def _split_on_where(text: str) -> list[str]:
    """Separate a trailing where-clause; it stays unparsed."""
    match = re.search(r"\bwhere\b", text)
    if match:
        return [text[: match.start()], text[match.start() :]]
    return [text]


def format_signature(sig: ApiSignature) -> str:
    """Render the parsed structure back to a single-line signature."""
    parts: list[str] = []
    if sig.receiver is Receiver.BY_VALUE:
        parts.append("self")
    elif sig.receiver is Receiver.SHARED_REF:
        parts.append("&self")
    elif sig.receiver is Receiver.MUT_REF:
        parts.append("&mut self")
    parts.extend(f"{p.name}: {p.type_text}" for p in sig.params)
    generics = f"<{sig.generics_text}>" if sig.generics_text else ""
    ret = "" if sig.return_type == "()" else f" -> {sig.return_type}"
    return f"fn {sig.name}{generics}({', '.join(parts)}){ret}"
