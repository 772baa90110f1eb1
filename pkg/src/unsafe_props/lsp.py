"""Standalone language server answering hover requests from the database.

The server speaks JSON-RPC 2.0 over stdio with Content-Length framing and
supports full-text document sync plus hover. Without a compiler's name
resolution, calls are resolved by tiered syntactic heuristics with explicit
confidence; ambiguity is surfaced to the user instead of guessed away.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass

from .docstore import DocDatabase, render_doc
from .taxonomy import PropertyCatalog

_IDENT_CHARS = re.compile(r"[A-Za-z0-9_]")
_IDENT_TOKEN = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_USE_LINE = re.compile(r"^\s*(?:pub\s+)?use\s+(.+?);", re.MULTILINE)


class Confidence(enum.Enum):
    HIGH = "High"
    MEDIUM = "Medium"
    LOW = "Low"


class ResolutionMethod(enum.Enum):
    PATH_MATCH = "PathMatch"
    RECEIVER_HINT = "ReceiverHint"
    UNIQUE_NAME = "UniqueName"
    NAME_MATCH = "NameMatch"


@dataclass(frozen=True)
class ResolutionCandidate:
    identifier: str
    confidence: Confidence
    method: ResolutionMethod


@dataclass(frozen=True)
class DocumentState:
    uri: str
    text: str
    version: int


@dataclass(frozen=True)
class Position:
    line: int
    character: int  # UTF-16 code units


@dataclass(frozen=True)
class CursorTarget:
    position: Position
    start: Position
    end: Position
    token: str


# -- position and token handling ----------------------------------------------


def _utf16_len(text: str) -> int:
    return sum(2 if ord(ch) > 0xFFFF else 1 for ch in text)


def _utf16_to_index(line: str, character: int) -> int:
    units = 0
    for i, ch in enumerate(line):
        if units >= character:
            return i
        units += 2 if ord(ch) > 0xFFFF else 1
    return len(line)


def _index_to_utf16(line: str, index: int) -> int:
    return _utf16_len(line[:index])


def cursor_target(text: str, position: Position) -> CursorTarget | None:
    """The identifier token under the cursor, or None over non-identifiers."""
    lines = text.split("\n")
    if position.line < 0 or position.line >= len(lines):
        raise ValueError(f"position line {position.line} out of bounds")
    line = lines[position.line]
    if position.character < 0 or position.character > _utf16_len(line):
        raise ValueError(f"position character {position.character} out of bounds")
    idx = _utf16_to_index(line, position.character)
    if idx < len(line) and _IDENT_CHARS.match(line[idx]):
        anchor = idx
    elif idx > 0 and _IDENT_CHARS.match(line[idx - 1]):
        anchor = idx - 1
    else:
        return None
    start = anchor
    while start > 0 and _IDENT_CHARS.match(line[start - 1]):
        start -= 1
    end = anchor + 1
    while end < len(line) and _IDENT_CHARS.match(line[end]):
        end += 1
    token = line[start:end]
    if not _IDENT_TOKEN.fullmatch(token):
        return None
    return CursorTarget(
        position=position,
        start=Position(position.line, _index_to_utf16(line, start)),
        end=Position(position.line, _index_to_utf16(line, end)),
        token=token,
    )


def _path_segments_before(line: str, start: int) -> list[str]:
    """Identifiers joined by '::' immediately left of the token."""
    segments: list[str] = []
    i = start
    while True:
        if i < 2 or line[i - 2 : i] != "::":
            break
        j = i - 2
        end = j
        while j > 0 and _IDENT_CHARS.match(line[j - 1]):
            j -= 1
        segment = line[j:end]
        if not _IDENT_TOKEN.fullmatch(segment):
            break
        segments.insert(0, segment)
        i = j
    return segments


def _is_method_context(line: str, start: int) -> bool:
    i = start - 1
    while i >= 0 and line[i].isspace():
        i -= 1
    return i >= 0 and line[i] == "."


def _call_suffix(line: str, end: int) -> tuple[bool, str]:
    """(is call-like, turbofish text) for the token ending at ``end``."""
    i = end
    n = len(line)
    while i < n and line[i].isspace():
        i += 1
    turbofish = ""
    if line.startswith("::", i):
        j = i + 2
        while j < n and line[j].isspace():
            j += 1
        if j < n and line[j] == "<":
            depth = 0
            k = j
            while k < n:
                if line[k] == "<":
                    depth += 1
                elif line[k] == ">" and line[k - 1] != "-":
                    depth -= 1
                    if depth == 0:
                        turbofish = line[j + 1 : k]
                        i = k + 1
                        break
                k += 1
            else:
                return False, ""
            while i < n and line[i].isspace():
                i += 1
    return i < n and line[i] == "(", turbofish


# -- record path metadata -------------------------------------------------------


def _impl_head(impl_type: str) -> str | None:
    if "::" in impl_type:
        return None
    text = impl_type.strip()
    if text.startswith("trait "):
        text = text[len("trait ") :]
    match = _IDENT_TOKEN.match(text)
    return match.group(0) if match else None


def record_full_path(record) -> list[str]:
    """Namespace segments, the impl head type when nameable, then the name."""
    segments = [s for s in record.meta.namespace.split("::") if s]
    head = _impl_head(record.impl_type)
    if head and (not segments or segments[-1] != head):
        segments.append(head)
    segments.append(record.signature.name)
    return segments


def _use_import_names(text: str) -> set[str]:
    """Final path segments introduced by use declarations."""
    names: set[str] = set()
    for match in _USE_LINE.finditer(text):
        target = match.group(1).strip()
        brace = target.find("{")
        if brace != -1:
            inner = target[brace + 1 :].rstrip("}")
            items = [item.strip() for item in inner.split(",")]
        else:
            items = [target]
        for item in items:
            if not item:
                continue
            if " as " in item:
                item = item.split(" as ")[-1].strip()
            names.add(item.split("::")[-1].strip())
    return names


# -- resolution -----------------------------------------------------------------


def resolve_call_at(
    text: str, position: Position, db: DocDatabase
) -> list[ResolutionCandidate]:
    """Candidates for the call under the cursor, best tier first.

    Tiers: full path suffix match (High), method call with a receiver-type
    hint from use imports or a turbofish (Medium), a name unique in the
    database (Medium), otherwise every same-name record (Low).
    """
    target = cursor_target(text, position)
    if target is None:
        return []
    lines = text.split("\n")
    line = lines[position.line]
    start_idx = _utf16_to_index(line, target.start.character)
    end_idx = _utf16_to_index(line, target.end.character)

    path = _path_segments_before(line, start_idx)
    is_method = _is_method_context(line, start_idx)
    is_call, turbofish = _call_suffix(line, end_idx)

    by_name = sorted(
        (r for r in db.records.values() if r.signature.name == target.token),
        key=lambda r: r.identifier,
    )

    if path:
        wanted = path + [target.token]
        matches = [r for r in by_name if record_full_path(r)[-len(wanted) :] == wanted]
        if matches:
            return [
                ResolutionCandidate(r.identifier, Confidence.HIGH, ResolutionMethod.PATH_MATCH)
                for r in matches
            ]

    if not (is_call or is_method or path):
        return []

    if is_method and is_call:
        hints = _use_import_names(text)
        hints.update(_IDENT_TOKEN.findall(turbofish))
        hinted = [r for r in by_name if (_impl_head(r.impl_type) or "") in hints]
        if hinted:
            return [
                ResolutionCandidate(
                    r.identifier, Confidence.MEDIUM, ResolutionMethod.RECEIVER_HINT
                )
                for r in hinted
            ]

    if not by_name:
        return []
    if len(by_name) == 1:
        return [
            ResolutionCandidate(
                by_name[0].identifier, Confidence.MEDIUM, ResolutionMethod.UNIQUE_NAME
            )
        ]
    return [
        ResolutionCandidate(r.identifier, Confidence.LOW, ResolutionMethod.NAME_MATCH)
        for r in by_name
    ]


def hover(
    db: DocDatabase,
    catalog: PropertyCatalog,
    doc: DocumentState,
    position: Position,
) -> str | None:
    """The hover document for the call at ``position``, or None."""
    candidates = resolve_call_at(doc.text, position, db)
    if not candidates:
        return None
    top = candidates[0]
    body = render_doc(db.records[top.identifier], catalog)
    if len(candidates) > 1 and all(c.confidence is Confidence.LOW for c in candidates):
        listing = "\n".join(f"- {c.identifier}" for c in candidates)
        return f"Multiple candidate APIs:\n{listing}\n\n{body}"
    return body


# -- the server ----------------------------------------------------------------

_PARSE_ERROR = -32700
_METHOD_NOT_FOUND = -32601
_INVALID_PARAMS = -32602
_SERVER_NOT_INITIALIZED = -32002
_REQUEST_FAILED = -32803


class _ConnectionError(Exception):
    pass


def _read_message(stream) -> dict | None:
    """One framed JSON-RPC message; None at clean EOF between messages."""
    headers: dict[str, str] = {}
    first = True
    while True:
        line = stream.readline()
        if not line:
            if first:
                return None
            raise _ConnectionError("stream closed mid-headers")
        first = False
        if line in (b"\r\n", b"\n"):
            break
        try:
            key, value = line.decode("ascii").split(":", 1)
        except (UnicodeDecodeError, ValueError):
            raise _ConnectionError(f"malformed header line {line!r}") from None
        headers[key.strip().lower()] = value.strip()
    try:
        length = int(headers["content-length"])
    except (KeyError, ValueError):
        raise _ConnectionError("missing or invalid Content-Length header") from None
    body = stream.read(length)
    if len(body) != length:
        raise _ConnectionError("stream closed mid-body")
    try:
        message = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise _ConnectionError(f"undecodable message body: {exc}") from None
    if not isinstance(message, dict):
        raise _ConnectionError("message body must be a JSON object")
    return message


def _write_message(stream, payload: dict) -> None:
    body = json.dumps(payload, ensure_ascii=False, sort_keys=True).encode("utf-8")
    stream.write(f"Content-Length: {len(body)}\r\n\r\n".encode("ascii") + body)
    stream.flush()


def serve(input_stream, output_stream, db: DocDatabase, catalog: PropertyCatalog) -> int:
    """Run one session over the given binary streams; returns the exit status."""
    session = _Session(db, catalog, output_stream)
    while True:
        try:
            message = _read_message(input_stream)
        except _ConnectionError:
            return 1
        if message is None:
            return 1
        done = session.handle(message)
        if done is not None:
            return done


class _Session:
    def __init__(self, db: DocDatabase, catalog: PropertyCatalog, out) -> None:
        self.db = db
        self.catalog = catalog
        self.out = out
        self.documents: dict[str, DocumentState] = {}
        self.initialized = False
        self.shutdown_requested = False

    def _respond(self, msg_id, result) -> None:
        _write_message(self.out, {"jsonrpc": "2.0", "id": msg_id, "result": result})

    def _error(self, msg_id, code: int, message: str) -> None:
        _write_message(
            self.out,
            {"jsonrpc": "2.0", "id": msg_id, "error": {"code": code, "message": message}},
        )

    def handle(self, message: dict) -> int | None:
        method = message.get("method")
        params = message.get("params") or {}
        msg_id = message.get("id")
        is_request = "id" in message

        if method == "exit":
            return 0 if self.shutdown_requested else 1

        if method == "initialize":
            self.initialized = True
            self._respond(
                msg_id,
                {
                    "capabilities": {"textDocumentSync": 1, "hoverProvider": True},
                    "serverInfo": {"name": "unsafe-props", "version": "0.1.0"},
                },
            )
            return None

        if not self.initialized:
            if is_request:
                self._error(msg_id, _SERVER_NOT_INITIALIZED, "server not initialized")
            return None

        if method == "initialized":
            return None
        if method == "shutdown":
            self.shutdown_requested = True
            self._respond(msg_id, None)
            return None
        if method == "textDocument/didOpen":
            doc = params.get("textDocument", {})
            uri = doc.get("uri", "")
            if uri:
                self.documents[uri] = DocumentState(
                    uri=uri, text=doc.get("text", ""), version=int(doc.get("version", 0))
                )
            return None
        if method == "textDocument/didChange":
            doc = params.get("textDocument", {})
            uri = doc.get("uri", "")
            current = self.documents.get(uri)
            version = int(doc.get("version", 0))
            if current is None or version <= current.version:
                return None
            changes = params.get("contentChanges") or []
            text = current.text
            for change in changes:
                if "range" not in change:
                    text = change.get("text", text)
            self.documents[uri] = DocumentState(uri=uri, text=text, version=version)
            return None
        if method == "textDocument/didClose":
            uri = params.get("textDocument", {}).get("uri", "")
            self.documents.pop(uri, None)
            return None
        if method == "textDocument/hover":
            self._handle_hover(msg_id, params)
            return None

        if is_request:
            self._error(msg_id, _METHOD_NOT_FOUND, f"method not found: {method}")
        return None

    def _handle_hover(self, msg_id, params: dict) -> None:
        uri = params.get("textDocument", {}).get("uri", "")
        doc = self.documents.get(uri)
        if doc is None:
            self._error(msg_id, _REQUEST_FAILED, f"document not open: {uri}")
            return
        raw_position = params.get("position", {})
        position = Position(
            line=int(raw_position.get("line", -1)),
            character=int(raw_position.get("character", -1)),
        )
        try:
            text = hover(self.db, self.catalog, doc, position)
        except ValueError as exc:
            self._error(msg_id, _INVALID_PARAMS, str(exc))
            return
        if text is None:
            self._respond(msg_id, None)
            return
        self._respond(msg_id, {"contents": {"kind": "markdown", "value": text}})
