"""Vulnerability records classified by violated safety property.

The dataset file carries both retained records and records excluded by the
screening criteria (panic safety, information leaks, yanked packages), so
the screening step is reproducible as data. Excluded records are kept out
of all distribution, timeline, and benchmark computations.
"""

from __future__ import annotations

import datetime
import enum
import re
from dataclasses import dataclass

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .docstore import valid_identifier
from .errors import CveError
from .taxonomy import PropertyCatalog

_CVE_ID = re.compile(r"CVE-\d{4}-\d{4,}\Z")


class RootCause(enum.Enum):
    STD_API_MISUSE = "StdApiMisuse"
    OTHER_UNSAFE_OP = "OtherUnsafeOp"
    NON_STD_UNSAFE_FN = "NonStdUnsafeFn"
    FFI_BOUNDARY = "FfiBoundary"


_ROOT_CAUSES = {rc.value: rc for rc in RootCause}


@dataclass(frozen=True)
class CveRecord:
    id: str
    published: datetime.date
    package: str
    description: str
    root_cause: RootCause | None
    violated: tuple[str, ...]
    implicated_apis: tuple[str, ...]
    advisories: tuple[str, ...]
    excluded: str | None = None


@dataclass(frozen=True)
class CveDataset:
    records: tuple[CveRecord, ...]
    source_note: str = ""

    def retained(self) -> list[CveRecord]:
        return [r for r in self.records if r.excluded is None]


@dataclass(frozen=True)
class DistributionReport:
    per_property: dict[str, int]
    zero_properties: tuple[str, ...]
    total: int
    root_cause_fractions: dict[str, float]


# -- loading ------------------------------------------------------------------


def load_cves(source: str | bytes, catalog: PropertyCatalog) -> CveDataset:
    """Load and validate a CVE dataset document; record order is preserved."""
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    try:
        doc = tomllib.loads(source)
    except tomllib.TOMLDecodeError as exc:
        raise CveError(f"malformed CVE dataset: {exc}") from None

    records: list[CveRecord] = []
    seen: set[str] = set()
    for i, raw in enumerate(doc.get("cve", [])):
        where = f"cve[{i}]"
        cve_id = raw.get("id", "")
        if not _CVE_ID.fullmatch(cve_id or ""):
            raise CveError(f"invalid CVE id {cve_id!r}", where)
        if cve_id in seen:
            raise CveError(f"duplicate CVE id {cve_id!r}", where)
        seen.add(cve_id)
        records.append(_build_record(cve_id, raw, catalog))
    return CveDataset(records=tuple(records), source_note=str(doc.get("source_note", "")))


_CVE_KEYS = {
    "id",
    "published",
    "package",
    "description",
    "root_cause",
    "violated",
    "implicated_apis",
    "advisories",
    "excluded",
}


def _build_record(cve_id: str, raw: dict, catalog: PropertyCatalog) -> CveRecord:
    unknown = set(raw) - _CVE_KEYS
    if unknown:
        raise CveError(f"unknown field(s) {sorted(unknown)}", cve_id)
    published = raw.get("published")
    if isinstance(published, datetime.datetime):
        published = published.date()
    elif isinstance(published, str):
        try:
            published = datetime.date.fromisoformat(published)
        except ValueError:
            raise CveError(f"unparsable date {published!r}", cve_id) from None
    if not isinstance(published, datetime.date):
        raise CveError("missing or unparsable published date", cve_id)

    excluded = raw.get("excluded")

    cause_token = raw.get("root_cause")
    root_cause = None
    if cause_token is not None:
        if cause_token not in _ROOT_CAUSES:
            raise CveError(f"unknown root cause {cause_token!r}", cve_id)
        root_cause = _ROOT_CAUSES[cause_token]
    elif excluded is None:
        raise CveError("missing root_cause on a retained record", cve_id)

    violated: list[str] = []
    for name in raw.get("violated", []):
        resolved = catalog.resolve(name)
        if resolved is None:
            raise CveError(f"unknown property {name!r}", cve_id)
        violated.append(resolved)
    if not violated and excluded is None:
        raise CveError("retained record must list at least one violated property", cve_id)

    implicated = tuple(raw.get("implicated_apis", []))
    for api in implicated:
        if not valid_identifier(api):
            raise CveError(f"invalid implicated API identifier {api!r}", cve_id)
    if root_cause is RootCause.STD_API_MISUSE and not implicated:
        raise CveError("StdApiMisuse requires at least one implicated API", cve_id)

    return CveRecord(
        id=cve_id,
        published=published,
        package=str(raw.get("package", "")),
        description=str(raw.get("description", "")),
        root_cause=root_cause,
        violated=tuple(violated),
        implicated_apis=implicated,
        advisories=tuple(raw.get("advisories", [])),
        excluded=excluded,
    )


# -- reporting ----------------------------------------------------------------


def _projected(record: CveRecord, catalog: PropertyCatalog) -> set[str]:
    return {catalog.parent_of(v) for v in record.violated}


def distribution(ds: CveDataset, catalog: PropertyCatalog) -> DistributionReport:
    """Per-primary-property CVE counts and root-cause fractions."""
    counts = {pid: 0 for pid in catalog.property_ids()}
    cause_counts = {rc.value: 0 for rc in RootCause}
    retained = ds.retained()
    for record in retained:
        for pid in sorted(_projected(record, catalog)):
            counts[pid] += 1
        if record.root_cause is not None:
            cause_counts[record.root_cause.value] += 1
    total = len(retained)
    fractions = {
        cause: (count / total if total else 0.0) for cause, count in cause_counts.items()
    }
    zero = tuple(pid for pid in catalog.property_ids() if counts[pid] == 0)
    return DistributionReport(
        per_property=counts,
        zero_properties=zero,
        total=total,
        root_cause_fractions=fractions,
    )


def timeline_fraction(ds: CveDataset, start: datetime.date, end: datetime.date) -> float:
    """Fraction of retained records published within [start, end]."""
    if start > end:
        raise ValueError(f"start {start} is after end {end}")
    retained = ds.retained()
    if not retained:
        return 0.0
    hits = sum(1 for r in retained if start <= r.published <= end)
    return hits / len(retained)


def export_benchmark(
    ds: CveDataset, property_id: str, catalog: PropertyCatalog
) -> list[CveRecord]:
    """Retained records whose projected labels include the property, by id."""
    resolved = catalog.resolve(property_id)
    if resolved is None:
        raise KeyError(f"unknown property {property_id!r}")
    primary = catalog.parent_of(resolved)
    matched = [r for r in ds.retained() if primary in _projected(r, catalog)]
    matched.sort(key=lambda r: r.id)
    return matched


def record_to_dict(record: CveRecord) -> dict:
    return {
        "id": record.id,
        "published": record.published.isoformat(),
        "package": record.package,
        "description": record.description,
        "root_cause": record.root_cause.value if record.root_cause else None,
        "violated": list(record.violated),
        "implicated_apis": list(record.implicated_apis),
        "advisories": list(record.advisories),
        "excluded": record.excluded,
    }
