"""The API document database: safety triplets keyed by stable identifiers.

Each record describes one unsafe API as (subject, property, document
slices) triplets. Databases load from a TOML authoring format or from the
canonical JSON export, are immutable after load, and serialize
deterministically.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import DatabaseError, Diagnostic, SignatureError
from .signatures import ApiSignature, Receiver, parse_signature
from .taxonomy import Category, PropertyCatalog

SELF_TOKEN = "self"
RETURN_TOKEN = "retval"

_HYPERLINK = re.compile(r"https?://|\[[^\]]*\]\([^)]*\)")

CORNER_CASES = ("ffi-no-req", "compilation", "numeric-no-bound", "unexplained")


class SubjectKind(enum.Enum):
    PARAM = "param"
    SELF = "self"
    RETURN = "retval"


@dataclass(frozen=True)
class Subject:
    """The value a requirement binds: a parameter, the receiver, or the result."""

    kind: SubjectKind
    name: str | None = None

    @classmethod
    def param(cls, name: str) -> "Subject":
        return cls(SubjectKind.PARAM, name)

    @classmethod
    def self_value(cls) -> "Subject":
        return cls(SubjectKind.SELF)

    @classmethod
    def return_value(cls) -> "Subject":
        return cls(SubjectKind.RETURN)

    @property
    def token(self) -> str:
        if self.kind is SubjectKind.SELF:
            return SELF_TOKEN
        if self.kind is SubjectKind.RETURN:
            return RETURN_TOKEN
        assert self.name is not None
        return self.name


@dataclass(frozen=True)
class SafetyTriplet:
    subject: Subject
    property_id: str
    slices: tuple[str, ...]


@dataclass(frozen=True)
class ApiMeta:
    namespace: str = ""
    unsafe_flag: bool = True
    intrinsic_wrapper: bool = False
    numeric_variant_group: str | None = None
    trait_name: str | None = None
    mutability_variant_group: str | None = None
    stable_counterpart: bool = False
    corner_case: str | None = None


@dataclass(frozen=True)
class ApiRecord:
    identifier: str
    impl_type: str
    signature: ApiSignature
    triplets: tuple[SafetyTriplet, ...]
    meta: ApiMeta


@dataclass(frozen=True)
class DocDatabase:
    records: dict[str, ApiRecord]
    catalog_version: str
    catalog: PropertyCatalog = field(repr=False, compare=False, default=None)


def valid_identifier(value: str) -> bool:
    return bool(value) and ".html" in value and not any(ch.isspace() for ch in value)


# -- loading ----------------------------------------------------------------


def load_database(source: str | bytes, catalog: PropertyCatalog) -> DocDatabase:
    """Load and fully validate a database document (TOML or canonical JSON)."""
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    stripped = source.lstrip()
    if stripped.startswith("{"):
        entries, version = _parse_json(source)
    else:
        entries, version = _parse_toml(source)

    records: dict[str, ApiRecord] = {}
    for identifier, body in entries:
        if identifier in records:
            raise DatabaseError(f"duplicate identifier {identifier!r}")
        records[identifier] = _build_record(identifier, body, catalog)
    return DocDatabase(records=records, catalog_version=version, catalog=catalog)


def _parse_toml(source: str) -> tuple[list[tuple[str, dict]], str]:
    try:
        doc = tomllib.loads(source)
    except tomllib.TOMLDecodeError as exc:
        raise DatabaseError(f"malformed database document: {exc}") from None
    version = str(doc.pop("catalog_version", ""))
    entries = []
    for key, body in doc.items():
        if not isinstance(body, dict):
            raise DatabaseError(f"unexpected top-level key {key!r}")
        entries.append((key, body))
    return entries, version


def _reject_duplicate_keys(pairs: list[tuple[str, object]]) -> dict:
    seen: dict[str, object] = {}
    for key, value in pairs:
        if key in seen:
            raise DatabaseError(f"duplicate identifier {key!r}")
        seen[key] = value
    return seen


def _parse_json(source: str) -> tuple[list[tuple[str, dict]], str]:
    try:
        doc = json.loads(source, object_pairs_hook=_reject_duplicate_keys)
    except json.JSONDecodeError as exc:
        raise DatabaseError(f"malformed database document: {exc}") from None
    version = str(doc.get("catalog_version", ""))
    records = doc.get("records", {})
    return list(records.items()), version


_RECORD_KEYS = {"identifier", "impl_type", "signature", "meta", "sp", "triplets"}
_META_KEYS = {
    "namespace",
    "unsafe_flag",
    "intrinsic_wrapper",
    "numeric_variant_group",
    "trait_name",
    "mutability_variant_group",
    "stable_counterpart",
    "corner_case",
}


def _build_record(identifier: str, body: dict, catalog: PropertyCatalog) -> ApiRecord:
    if not valid_identifier(identifier):
        raise DatabaseError(f"invalid identifier {identifier!r}", identifier)
    if not isinstance(body, dict):
        raise DatabaseError("record body must be a table", identifier)
    unknown = set(body) - _RECORD_KEYS
    if unknown:
        raise DatabaseError(f"unknown record field(s) {sorted(unknown)}", identifier)
    declared = body.get("identifier")
    if declared is not None and declared != identifier:
        raise DatabaseError(
            f"record key {identifier!r} does not match declared identifier {declared!r}",
            identifier,
        )
    raw_sig = body.get("signature", "")
    try:
        signature = parse_signature(raw_sig)
    except SignatureError as exc:
        raise DatabaseError(f"bad signature: {exc}", identifier) from None
    if RETURN_TOKEN in signature.param_names():
        raise DatabaseError(
            f"parameter name {RETURN_TOKEN!r} collides with the return-value"
            " subject token",
            identifier,
        )

    meta = _parse_meta(body.get("meta", {}), identifier)
    if not meta.unsafe_flag and meta.corner_case is None:
        raise DatabaseError(
            "unsafe_flag is false but record is not marked as a corner case", identifier
        )

    triplets: list[SafetyTriplet] = []
    if "sp" in body:
        for token, by_property in body["sp"].items():
            subject = _resolve_subject(token, signature, identifier)
            if not isinstance(by_property, dict):
                raise DatabaseError(f"sp.{token} must map properties to slices", identifier)
            for prop_name, slices in by_property.items():
                triplets.append(
                    _build_triplet(subject, prop_name, slices, catalog, identifier)
                )
    if "triplets" in body:
        for raw in body["triplets"]:
            subject = _resolve_subject(raw.get("subject", ""), signature, identifier)
            triplets.append(
                _build_triplet(
                    subject, raw.get("property", ""), raw.get("slices", []), catalog, identifier
                )
            )

    return ApiRecord(
        identifier=identifier,
        impl_type=str(body.get("impl_type", "")),
        signature=signature,
        triplets=tuple(triplets),
        meta=meta,
    )


def _parse_meta(raw: dict, identifier: str) -> ApiMeta:
    unknown = set(raw) - _META_KEYS
    if unknown:
        raise DatabaseError(f"unknown meta field(s) {sorted(unknown)}", identifier)
    corner = raw.get("corner_case")
    if corner is not None and corner not in CORNER_CASES:
        raise DatabaseError(f"unknown corner_case {corner!r}", identifier)
    return ApiMeta(
        namespace=str(raw.get("namespace", "")),
        unsafe_flag=bool(raw.get("unsafe_flag", True)),
        intrinsic_wrapper=bool(raw.get("intrinsic_wrapper", False)),
        numeric_variant_group=raw.get("numeric_variant_group"),
        trait_name=raw.get("trait_name"),
        mutability_variant_group=raw.get("mutability_variant_group"),
        stable_counterpart=bool(raw.get("stable_counterpart", False)),
        corner_case=corner,
    )


def _resolve_subject(token: str, signature: ApiSignature, identifier: str) -> Subject:
    if token == SELF_TOKEN:
        if signature.receiver is Receiver.NONE:
            raise DatabaseError(
                f"subject 'self' does not resolve: {signature.raw!r} has no receiver",
                identifier,
            )
        return Subject.self_value()
    if token == RETURN_TOKEN:
        return Subject.return_value()
    if token in signature.param_names():
        return Subject.param(token)
    raise DatabaseError(
        f"subject {token!r} does not resolve against signature {signature.raw!r}",
        identifier,
    )


def _build_triplet(
    subject: Subject,
    prop_name: str,
    slices: object,
    catalog: PropertyCatalog,
    identifier: str,
) -> SafetyTriplet:
    resolved = catalog.resolve(prop_name)
    if resolved is None:
        raise DatabaseError(f"unknown property name {prop_name!r}", identifier)
    if not isinstance(slices, list) or not slices:
        raise DatabaseError(
            f"empty slice array for {subject.token}.{prop_name}", identifier
        )
    clean: list[str] = []
    for entry in slices:
        if not isinstance(entry, str) or not entry:
            raise DatabaseError(
                f"empty slice under {subject.token}.{prop_name}", identifier
            )
        clean.append(entry)
    return SafetyTriplet(subject=subject, property_id=resolved, slices=tuple(clean))


# -- canonical ordering ------------------------------------------------------


def _subject_rank(subject: Subject, signature: ApiSignature) -> int:
    if subject.kind is SubjectKind.SELF:
        return 0
    if subject.kind is SubjectKind.RETURN:
        return 1 + len(signature.params)
    return 1 + signature.param_names().index(subject.name)


def canonical_triplets(record: ApiRecord, catalog: PropertyCatalog) -> list[SafetyTriplet]:
    """Subjects in signature order (self, params, retval); properties in catalog order."""
    return sorted(
        record.triplets,
        key=lambda t: (
            _subject_rank(t.subject, record.signature),
            catalog.node_order_key(t.property_id),
        ),
    )


# -- operations ---------------------------------------------------------------


def lookup(db: DocDatabase, identifier: str) -> ApiRecord | None:
    return db.records.get(identifier)


def labels_of(record: ApiRecord, catalog: PropertyCatalog) -> set[str]:
    """Primary property ids labeled on the record; sub-properties project up."""
    return {catalog.parent_of(t.property_id) for t in record.triplets}


def render_doc(record: ApiRecord, catalog: PropertyCatalog) -> str:
    """The formatted safety-property document for one record.

    Header lines, then one block per (subject, property) pair: precondition
    blocks first, subjects in signature order, properties in catalog order.
    """
    lines = [
        "# SafetyProperty",
        f"# Identifier: {record.identifier}",
        f"# Type: {record.impl_type}",
        f"# Signature: {record.signature.raw}",
    ]
    ordered = sorted(
        record.triplets,
        key=lambda t: (
            _category_rank(t.property_id, catalog),
            _subject_rank(t.subject, record.signature),
            catalog.node_order_key(t.property_id),
        ),
    )
    blocks = ["\n".join(lines)]
    for triplet in ordered:
        heading = f"{triplet.subject.token}: {catalog.display_name(triplet.property_id)}"
        blocks.append("\n".join([heading, *triplet.slices]))
    return "\n\n".join(blocks) + "\n"


def _category_rank(property_id: str, catalog: PropertyCatalog) -> int:
    parent = catalog.get(catalog.parent_of(property_id))
    return 0 if parent.category is Category.PRE else 1


def export_canonical(db: DocDatabase) -> bytes:
    """Deterministic canonical serialization (sorted identifiers, UTF-8, LF)."""
    records: dict[str, dict] = {}
    for identifier in sorted(db.records):
        record = db.records[identifier]
        records[identifier] = {
            "identifier": record.identifier,
            "impl_type": record.impl_type,
            "signature": record.signature.raw,
            "meta": {
                "namespace": record.meta.namespace,
                "unsafe_flag": record.meta.unsafe_flag,
                "intrinsic_wrapper": record.meta.intrinsic_wrapper,
                "numeric_variant_group": record.meta.numeric_variant_group,
                "trait_name": record.meta.trait_name,
                "mutability_variant_group": record.meta.mutability_variant_group,
                "stable_counterpart": record.meta.stable_counterpart,
                "corner_case": record.meta.corner_case,
            },
            "triplets": [
                {
                    "subject": t.subject.token,
                    "property": t.property_id,
                    "slices": list(t.slices),
                }
                for t in canonical_triplets(record, db.catalog)
            ],
        }
    doc = {"catalog_version": db.catalog_version, "records": records}
    text = json.dumps(doc, ensure_ascii=False, sort_keys=True, indent=2)
    return (text + "\n").encode("utf-8")


def lint_database(db: DocDatabase, catalog: PropertyCatalog) -> list[Diagnostic]:
    """Check revision-goal conformance: no hyperlinks in slices, canonical
    structural ordering, and safety coverage for non-corner-case records."""
    diags: list[Diagnostic] = []
    for identifier, record in db.records.items():
        for triplet in record.triplets:
            for text in triplet.slices:
                if _HYPERLINK.search(text):
                    diags.append(
                        Diagnostic(
                            "hyperlink-in-slice",
                            identifier,
                            f"slice under {triplet.subject.token}.{triplet.property_id}"
                            " contains a hyperlink",
                        )
                    )
        if list(record.triplets) != canonical_triplets(record, catalog):
            diags.append(
                Diagnostic(
                    "non-canonical-order",
                    identifier,
                    "triplets are not in canonical structural order",
                )
            )
        if not record.triplets and record.meta.corner_case is None:
            diags.append(
                Diagnostic(
                    "missing-safety-coverage",
                    identifier,
                    "record has no safety triplets and is not a corner case",
                )
            )
    return diags
