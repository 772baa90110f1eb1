"""The safety-property catalog: properties, hierarchy, and reference tables.

A catalog is plain data loaded from a TOML file so the property set can be
revised without code changes. Loaded catalogs are immutable and safe to
share across threads.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import CatalogError, Diagnostic


class Category(enum.Enum):
    """Whether a property constrains inputs at the call or later use."""

    PRE = "Pre"
    POST = "Post"


class EdgeLevel(enum.Enum):
    PRIMARY = "Primary"
    SUB = "Sub"


@dataclass(frozen=True)
class SubProperty:
    """A refinement of one safety property.

    ``id`` is the internal, globally unique id. When a sub-property reuses
    its parent's name it is stored parent-qualified ("Initialized/Initialized");
    ``display_name`` is always the unqualified name.
    """

    id: str
    parent: str
    definition: str
    marker: bool = False  # trait markers with no callable method

    @property
    def display_name(self) -> str:
        return self.id.rsplit("/", 1)[-1]


@dataclass(frozen=True)
class SafetyProperty:
    id: str
    category: Category
    definition: str
    sub_properties: tuple[SubProperty, ...]
    example_api: str
    expected_label_count: int | None = None


@dataclass(frozen=True)
class HierarchyEdge:
    """``prerequisite`` must be satisfied before ``dependent`` can be."""

    prerequisite: str
    dependent: str
    level: EdgeLevel


@dataclass(frozen=True)
class UbEntry:
    text: str
    extended: bool = False


@dataclass(frozen=True)
class UbCatalog:
    entries: tuple[UbEntry, ...]


@dataclass(frozen=True)
class InvalidValueEntry:
    type_name: str
    invalid_description: str


@dataclass(frozen=True)
class InvalidValueCatalog:
    entries: tuple[InvalidValueEntry, ...]


@dataclass(frozen=True)
class CatalogShape:
    """Category counts the catalog file declares about itself."""

    pre_properties: int
    pre_sub_properties: int
    post_properties: int
    post_sub_properties: int


@dataclass(frozen=True)
class PropertyCatalog:
    properties: tuple[SafetyProperty, ...]
    hierarchy: tuple[HierarchyEdge, ...]
    ub_catalog: UbCatalog
    invalid_values: InvalidValueCatalog
    declared_shape: CatalogShape | None = None
    _by_id: dict = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self) -> None:
        by_id: dict[str, object] = {}
        for prop in self.properties:
            by_id.setdefault(prop.id, prop)
            for sub in prop.sub_properties:
                by_id.setdefault(sub.id, sub)
        object.__setattr__(self, "_by_id", by_id)

    # -- lookups ---------------------------------------------------------

    def property_ids(self) -> list[str]:
        return [p.id for p in self.properties]

    def sub_property_ids(self) -> list[str]:
        return [s.id for p in self.properties for s in p.sub_properties]

    def all_ids(self) -> set[str]:
        return set(self._by_id)

    def get(self, node_id: str) -> SafetyProperty | SubProperty | None:
        return self._by_id.get(node_id)

    def is_property(self, node_id: str) -> bool:
        return isinstance(self._by_id.get(node_id), SafetyProperty)

    def parent_of(self, node_id: str) -> str | None:
        """Primary property id owning ``node_id`` (itself, for properties)."""
        node = self._by_id.get(node_id)
        if isinstance(node, SafetyProperty):
            return node.id
        if isinstance(node, SubProperty):
            return node.parent
        return None

    def display_name(self, node_id: str) -> str:
        return node_id.rsplit("/", 1)[-1]

    def resolve(self, name: str) -> str | None:
        """Map a property-or-sub name from a data file to an internal id.

        Property ids win over sub-property display names; qualified sub ids
        are accepted verbatim; an unqualified sub name resolves only when it
        is unambiguous.
        """
        if name in self._by_id:
            return name
        matches = [
            sub.id
            for prop in self.properties
            for sub in prop.sub_properties
            if sub.display_name == name
        ]
        if len(matches) == 1:
            return matches[0]
        return None

    def property_index(self, node_id: str) -> int:
        """Catalog-order rank of the primary property owning ``node_id``."""
        parent = self.parent_of(node_id)
        for i, prop in enumerate(self.properties):
            if prop.id == parent:
                return i
        raise KeyError(node_id)

    def node_order_key(self, node_id: str) -> tuple[int, int]:
        """Catalog-order key: parent rank, then sub rank (-1 for the parent)."""
        parent_idx = self.property_index(node_id)
        if self.is_property(node_id):
            return (parent_idx, -1)
        subs = self.properties[parent_idx].sub_properties
        for j, sub in enumerate(subs):
            if sub.id == node_id:
                return (parent_idx, j)
        raise KeyError(node_id)


# -- loading ---------------------------------------------------------------

_VALID_CATEGORIES = {c.value: c for c in Category}
_VALID_LEVELS = {lv.value: lv for lv in EdgeLevel}


def _reject_unknown_keys(raw: dict, allowed: set[str], where: str) -> None:
    unknown = set(raw) - allowed
    if unknown:
        raise CatalogError(f"unknown field(s) {sorted(unknown)}", where)


def _qualify_sub_id(parent_id: str, sub_name: str) -> str:
    return f"{parent_id}/{sub_name}" if sub_name == parent_id else sub_name


def load_catalog(source: str | bytes) -> PropertyCatalog:
    """Parse and validate a catalog document.

    Raises CatalogError on malformed markup, duplicate ids, unknown
    category tokens, dangling or cross-parent edges, and hierarchy cycles.
    """
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    try:
        doc = tomllib.loads(source)
    except tomllib.TOMLDecodeError as exc:
        raise CatalogError(f"malformed catalog document: {exc}") from None

    _reject_unknown_keys(
        doc, {"version", "shape", "property", "edge", "ub", "invalid_value"}, "document root"
    )
    properties: list[SafetyProperty] = []
    seen_props: set[str] = set()
    seen_subs: set[str] = set()
    for i, raw in enumerate(doc.get("property", [])):
        where = f"property[{i}]"
        _reject_unknown_keys(
            raw,
            {"id", "category", "definition", "sub_properties", "example_api",
             "expected_label_count"},
            where,
        )
        pid = raw.get("id", "")
        if not pid or not isinstance(pid, str):
            raise CatalogError("property id missing or empty", where)
        if pid in seen_props:
            raise CatalogError(f"duplicate property id {pid!r}", where)
        seen_props.add(pid)
        cat_token = raw.get("category", "")
        if cat_token not in _VALID_CATEGORIES:
            raise CatalogError(f"unknown category token {cat_token!r}", where)
        subs: list[SubProperty] = []
        for j, raw_sub in enumerate(raw.get("sub_properties", [])):
            sub_where = f"{where}.sub_properties[{j}]"
            _reject_unknown_keys(raw_sub, {"id", "parent", "definition", "marker"}, sub_where)
            sub_name = raw_sub.get("id", "")
            if not sub_name or not isinstance(sub_name, str):
                raise CatalogError("sub-property id missing or empty", sub_where)
            declared_parent = raw_sub.get("parent", pid)
            if declared_parent != pid:
                raise CatalogError(
                    f"sub-property parent {declared_parent!r} does not match"
                    f" enclosing property {pid!r}",
                    sub_where,
                )
            sub_id = _qualify_sub_id(pid, sub_name)
            if sub_id in seen_subs:
                raise CatalogError(f"duplicate sub-property id {sub_id!r}", sub_where)
            seen_subs.add(sub_id)
            subs.append(
                SubProperty(
                    id=sub_id,
                    parent=pid,
                    definition=raw_sub.get("definition", ""),
                    marker=bool(raw_sub.get("marker", False)),
                )
            )
        count = raw.get("expected_label_count")
        if count is not None and (not isinstance(count, int) or count < 0):
            raise CatalogError("expected_label_count must be a non-negative integer", where)
        properties.append(
            SafetyProperty(
                id=pid,
                category=_VALID_CATEGORIES[cat_token],
                definition=raw.get("definition", ""),
                sub_properties=tuple(subs),
                example_api=raw.get("example_api", ""),
                expected_label_count=count,
            )
        )

    collisions = seen_props & seen_subs
    if collisions:
        raise CatalogError(f"duplicate id across properties and sub-properties: {sorted(collisions)}")

    edges: list[HierarchyEdge] = []
    for i, raw in enumerate(doc.get("edge", [])):
        where = f"edge[{i}]"
        _reject_unknown_keys(raw, {"prerequisite", "dependent", "level"}, where)
        level_token = raw.get("level", "")
        if level_token not in _VALID_LEVELS:
            raise CatalogError(f"unknown edge level {level_token!r}", where)
        edges.append(
            HierarchyEdge(
                prerequisite=raw.get("prerequisite", ""),
                dependent=raw.get("dependent", ""),
                level=_VALID_LEVELS[level_token],
            )
        )

    ub_entries = []
    for i, raw in enumerate(doc.get("ub", [])):
        _reject_unknown_keys(raw, {"text", "extended"}, f"ub[{i}]")
        ub_entries.append(
            UbEntry(text=raw.get("text", ""), extended=bool(raw.get("extended", False)))
        )
    invalid_entries = []
    for i, raw in enumerate(doc.get("invalid_value", [])):
        _reject_unknown_keys(raw, {"type_name", "invalid_description"}, f"invalid_value[{i}]")
        invalid_entries.append(
            InvalidValueEntry(
                type_name=raw.get("type_name", ""),
                invalid_description=raw.get("invalid_description", ""),
            )
        )

    shape = None
    if "shape" in doc:
        raw = doc["shape"]
        try:
            shape = CatalogShape(
                pre_properties=int(raw["pre_properties"]),
                pre_sub_properties=int(raw["pre_sub_properties"]),
                post_properties=int(raw["post_properties"]),
                post_sub_properties=int(raw["post_sub_properties"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise CatalogError(f"malformed shape declaration: {exc}", "shape") from None

    catalog = PropertyCatalog(
        properties=tuple(properties),
        hierarchy=tuple(edges),
        ub_catalog=UbCatalog(entries=tuple(ub_entries)),
        invalid_values=InvalidValueCatalog(entries=tuple(invalid_entries)),
        declared_shape=shape,
    )

    for diag in _structural_diagnostics(catalog):
        raise CatalogError(diag.message, diag.subject or None)
    return catalog


# -- validation ------------------------------------------------------------


def _structural_diagnostics(catalog: PropertyCatalog) -> list[Diagnostic]:
    """Hard structural faults: bad references, cross-parent edges, cycles."""
    diags: list[Diagnostic] = []
    known = catalog.all_ids()
    for edge in catalog.hierarchy:
        for endpoint in (edge.prerequisite, edge.dependent):
            if endpoint not in known:
                diags.append(
                    Diagnostic(
                        "unknown-edge-endpoint",
                        endpoint,
                        f"edge references missing id {endpoint!r}",
                    )
                )
        if edge.prerequisite not in known or edge.dependent not in known:
            continue
        if edge.level is EdgeLevel.SUB:
            pre, dep = catalog.get(edge.prerequisite), catalog.get(edge.dependent)
            if not (isinstance(pre, SubProperty) and isinstance(dep, SubProperty)):
                diags.append(
                    Diagnostic(
                        "sub-edge-on-property",
                        edge.prerequisite,
                        f"sub-level edge {edge.prerequisite!r} -> {edge.dependent!r}"
                        " must connect sub-properties",
                    )
                )
            elif pre.parent != dep.parent:
                diags.append(
                    Diagnostic(
                        "cross-parent-sub-edge",
                        edge.dependent,
                        f"cross-parent sub edge {edge.prerequisite!r} -> {edge.dependent!r}"
                        f" ({pre.parent!r} vs {dep.parent!r})",
                    )
                )
    cycle = _find_cycle(catalog)
    if cycle:
        diags.append(
            Diagnostic(
                "cyclic-hierarchy",
                cycle[0],
                "cyclic hierarchy: " + " -> ".join(cycle),
            )
        )
    return diags


def _find_cycle(catalog: PropertyCatalog) -> list[str] | None:
    """Return one cycle through hierarchy edges, or None. Self-loops count."""
    adjacency: dict[str, list[str]] = {}
    for edge in catalog.hierarchy:
        adjacency.setdefault(edge.prerequisite, []).append(edge.dependent)
    WHITE, GRAY, BLACK = 0, 1, 2
    color: dict[str, int] = {}
    stack_path: list[str] = []

    def visit(node: str) -> list[str] | None:
        color[node] = GRAY
        stack_path.append(node)
        for nxt in adjacency.get(node, []):
            state = color.get(nxt, WHITE)
            if state == GRAY:
                return stack_path[stack_path.index(nxt):] + [nxt]
            if state == WHITE:
                found = visit(nxt)
                if found:
                    return found
        stack_path.pop()
        color[node] = BLACK
        return None

    for start in list(adjacency):
        if color.get(start, WHITE) == WHITE:
            found = visit(start)
            if found:
                return found
    return None


def validate_catalog(catalog: PropertyCatalog) -> list[Diagnostic]:
    """Check every catalog invariant; an empty list means all hold."""
    diags: list[Diagnostic] = []

    seen: set[str] = set()
    for prop in catalog.properties:
        if not prop.id:
            diags.append(Diagnostic("empty-id", "", "property with empty id"))
        elif prop.id in seen:
            diags.append(Diagnostic("duplicate-id", prop.id, f"duplicate id {prop.id!r}"))
        seen.add(prop.id)
        if not prop.definition:
            diags.append(Diagnostic("empty-definition", prop.id, "property definition is empty"))
        if not prop.example_api:
            diags.append(Diagnostic("empty-example-api", prop.id, "example_api is empty"))
        if prop.expected_label_count is not None and prop.expected_label_count < 0:
            diags.append(
                Diagnostic("negative-label-count", prop.id, "expected_label_count is negative")
            )
        for sub in prop.sub_properties:
            if not sub.id:
                diags.append(Diagnostic("empty-id", prop.id, "sub-property with empty id"))
                continue
            if sub.id in seen:
                diags.append(Diagnostic("duplicate-id", sub.id, f"duplicate id {sub.id!r}"))
            seen.add(sub.id)
            if sub.parent != prop.id:
                diags.append(
                    Diagnostic(
                        "wrong-parent",
                        sub.id,
                        f"sub-property parent {sub.parent!r} not the enclosing property",
                    )
                )
            if not sub.definition:
                diags.append(
                    Diagnostic("empty-definition", sub.id, "sub-property definition is empty")
                )
            if sub.display_name != sub.id and sub.id != f"{prop.id}/{sub.display_name}":
                diags.append(
                    Diagnostic("bad-qualified-id", sub.id, "qualified id does not match parent")
                )

    diags.extend(_structural_diagnostics(catalog))

    if catalog.declared_shape is not None:
        actual = _shape_of(catalog)
        declared = catalog.declared_shape
        for field_name in (
            "pre_properties",
            "pre_sub_properties",
            "post_properties",
            "post_sub_properties",
        ):
            want = getattr(declared, field_name)
            got = getattr(actual, field_name)
            if want != got:
                diags.append(
                    Diagnostic(
                        "category-count-mismatch",
                        field_name,
                        f"category count mismatch: declared {field_name}={want}, found {got}",
                    )
                )
    return diags


def _shape_of(catalog: PropertyCatalog) -> CatalogShape:
    counts = {Category.PRE: [0, 0], Category.POST: [0, 0]}
    for prop in catalog.properties:
        counts[prop.category][0] += 1
        counts[prop.category][1] += len(prop.sub_properties)
    return CatalogShape(
        pre_properties=counts[Category.PRE][0],
        pre_sub_properties=counts[Category.PRE][1],
        post_properties=counts[Category.POST][0],
        post_sub_properties=counts[Category.POST][1],
    )


def catalog_shape(catalog: PropertyCatalog) -> CatalogShape:
    """Actual per-category property and sub-property counts."""
    return _shape_of(catalog)


# -- hierarchy closure -------------------------------------------------------


def prerequisite_closure(catalog: PropertyCatalog, ids: Iterable[str]) -> set[str]:
    """The input ids plus every transitive prerequisite above them."""
    known = catalog.all_ids()
    pending = list(ids)
    for node_id in pending:
        if node_id not in known:
            raise KeyError(f"unknown id {node_id!r}")
    prereqs_of: dict[str, list[str]] = {}
    for edge in catalog.hierarchy:
        prereqs_of.setdefault(edge.dependent, []).append(edge.prerequisite)
    result: set[str] = set()
    while pending:
        node_id = pending.pop()
        if node_id in result:
            continue
        result.add(node_id)
        pending.extend(prereqs_of.get(node_id, []))
    return result
