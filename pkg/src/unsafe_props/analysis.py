"""Label-matrix construction, dataset filters, and correlation analysis.

Correlation between binary label columns is the phi coefficient (Pearson
on 0/1 indicators), computed exactly from 2x2 contingency counts. Columns
with zero variance yield None rather than a fabricated zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .docstore import ApiRecord, DocDatabase, labels_of
from .taxonomy import PropertyCatalog

_NAMESPACE_RANK = {"std": 0, "core": 1, "alloc": 2}


@dataclass(frozen=True)
class RowMeta:
    """Per-row grouping metadata copied from the source record."""

    name: str
    impl_type: str
    namespace: str
    trait_name: str | None
    mutability_variant_group: str | None
    intrinsic_wrapper: bool


@dataclass(frozen=True)
class LabelMatrix:
    rows: tuple[str, ...]
    columns: tuple[str, ...]
    cells: tuple[tuple[int, ...], ...]
    row_meta: tuple[RowMeta, ...]


@dataclass(frozen=True)
class CorrelationMatrix:
    labels: tuple[str, ...]
    values: tuple[tuple[float | None, ...], ...]


@dataclass(frozen=True)
class PairRow:
    sp1: str
    sp2: str
    cc_large: float
    cc_small: float
    avg_cc: float


@dataclass(frozen=True)
class PairReport:
    rows: tuple[PairRow, ...]
    threshold: float


# -- dataset pre-filters ------------------------------------------------------


def apply_prefilters(records: list[ApiRecord]) -> list[ApiRecord]:
    """Drop namespace duplicates, numeric variants, and stabilized intrinsics.

    Among records identical but for their root namespace (std/core/alloc)
    one survives, preferring std over core over alloc. Within a
    numeric_variant_group one representative survives. Intrinsic wrappers
    with a stable counterpart are removed.
    """
    survivors = [
        r for r in records if not (r.meta.intrinsic_wrapper and r.meta.stable_counterpart)
    ]

    by_shape: dict[tuple, list[ApiRecord]] = {}
    for record in survivors:
        root, rest = _split_namespace(record.meta.namespace)
        if root in _NAMESPACE_RANK:
            key = (rest, record.signature.name, record.impl_type, record.signature.raw)
            by_shape.setdefault(key, []).append(record)
    dropped: set[str] = set()
    for group in by_shape.values():
        if len(group) > 1:
            group.sort(
                key=lambda r: (
                    _NAMESPACE_RANK[_split_namespace(r.meta.namespace)[0]],
                    r.identifier,
                )
            )
            dropped.update(r.identifier for r in group[1:])
    survivors = [r for r in survivors if r.identifier not in dropped]

    seen_numeric: set[str] = set()
    kept: list[ApiRecord] = []
    for record in survivors:
        group = record.meta.numeric_variant_group
        if group is not None:
            if group in seen_numeric:
                continue
            seen_numeric.add(group)
        kept.append(record)
    return kept


def _split_namespace(namespace: str) -> tuple[str, str]:
    root, _, rest = namespace.partition("::")
    return root, rest


# -- matrix construction ------------------------------------------------------


def build_matrix(
    db: DocDatabase, catalog: PropertyCatalog, *, prefilter: bool = True
) -> LabelMatrix:
    """One row per record, one binary column per primary property."""
    columns = tuple(catalog.property_ids())
    records = [db.records[identifier] for identifier in sorted(db.records)]
    if prefilter:
        records = apply_prefilters(records)
    rows: list[str] = []
    cells: list[tuple[int, ...]] = []
    metas: list[RowMeta] = []
    for record in records:
        labels = labels_of(record, catalog)
        rows.append(record.identifier)
        cells.append(tuple(1 if column in labels else 0 for column in columns))
        metas.append(
            RowMeta(
                name=record.signature.name,
                impl_type=record.impl_type,
                namespace=record.meta.namespace,
                trait_name=record.meta.trait_name,
                mutability_variant_group=record.meta.mutability_variant_group,
                intrinsic_wrapper=record.meta.intrinsic_wrapper,
            )
        )
    return LabelMatrix(
        rows=tuple(rows), columns=columns, cells=tuple(cells), row_meta=tuple(metas)
    )


def _related(a: RowMeta, b: RowMeta) -> bool:
    """Structural redundancy relations for the small-dataset filter."""
    if (
        a.mutability_variant_group is not None
        and a.mutability_variant_group == b.mutability_variant_group
    ):
        return True
    if a.trait_name is not None and a.trait_name == b.trait_name and a.impl_type != b.impl_type:
        return True
    if a.name == b.name and a.namespace == b.namespace and a.impl_type != b.impl_type:
        return True
    if a.intrinsic_wrapper and b.intrinsic_wrapper and a.name == b.name:
        return True
    return False


def small_dataset(matrix: LabelMatrix) -> LabelMatrix:
    """Collapse groups of structurally redundant rows with identical labels.

    Rows join a group when their label vectors match and one redundancy
    relation holds; the lexicographically smallest identifier represents
    the group. Idempotent.
    """
    n = len(matrix.rows)
    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i: int, j: int) -> None:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[rj] = ri

    by_labels: dict[tuple[int, ...], list[int]] = {}
    for i, vector in enumerate(matrix.cells):
        by_labels.setdefault(vector, []).append(i)
    for indices in by_labels.values():
        for pos, i in enumerate(indices):
            for j in indices[pos + 1 :]:
                if _related(matrix.row_meta[i], matrix.row_meta[j]):
                    union(i, j)

    representative: dict[int, int] = {}
    for i in range(n):
        root = find(i)
        best = representative.get(root)
        if best is None or matrix.rows[i] < matrix.rows[best]:
            representative[root] = i
    keep = sorted(representative.values())
    return LabelMatrix(
        rows=tuple(matrix.rows[i] for i in keep),
        columns=matrix.columns,
        cells=tuple(matrix.cells[i] for i in keep),
        row_meta=tuple(matrix.row_meta[i] for i in keep),
    )


# -- correlation --------------------------------------------------------------


def phi(a: list[int], b: list[int]) -> float | None:
    """Phi coefficient of two equal-length binary vectors.

    None when either vector is constant (zero variance). Computed from the
    2x2 contingency table: (n11*n00 - n10*n01) / sqrt(n1. * n0. * n.1 * n.0).
    """
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    if not a:
        raise ValueError("empty columns")
    n11 = n10 = n01 = n00 = 0
    for x, y in zip(a, b):
        if x:
            if y:
                n11 += 1
            else:
                n10 += 1
        elif y:
            n01 += 1
        else:
            n00 += 1
    row1, row0 = n11 + n10, n01 + n00
    col1, col0 = n11 + n01, n10 + n00
    if row1 == 0 or row0 == 0 or col1 == 0 or col0 == 0:
        return None
    return (n11 * n00 - n10 * n01) / math.sqrt(row1 * row0 * col1 * col0)


def correlate(matrix: LabelMatrix) -> CorrelationMatrix:
    """Pairwise phi over all column pairs; symmetric by construction."""
    columns = [[row[j] for row in matrix.cells] for j in range(len(matrix.columns))]
    size = len(columns)
    values: list[list[float | None]] = [[None] * size for _ in range(size)]
    for i in range(size):
        for j in range(i, size):
            value = phi(columns[i], columns[j]) if matrix.cells else None
            values[i][j] = value
            values[j][i] = value
    return CorrelationMatrix(
        labels=matrix.columns, values=tuple(tuple(row) for row in values)
    )


def report_pairs(
    large: CorrelationMatrix, small: CorrelationMatrix, threshold: float
) -> PairReport:
    """Unordered label pairs whose mean correlation strictly exceeds the
    threshold in both matrices' average; pairs undefined in either are skipped."""
    if large.labels != small.labels:
        raise ValueError("correlation matrices have mismatched label sets")
    rows: list[PairRow] = []
    labels = large.labels
    for i in range(len(labels)):
        for j in range(i + 1, len(labels)):
            cc_large = large.values[i][j]
            cc_small = small.values[i][j]
            if cc_large is None or cc_small is None:
                continue
            avg = (cc_large + cc_small) / 2.0
            if avg > threshold:
                sp1, sp2 = sorted((labels[i], labels[j]))
                rows.append(
                    PairRow(sp1=sp1, sp2=sp2, cc_large=cc_large, cc_small=cc_small, avg_cc=avg)
                )
    rows.sort(key=lambda r: (-r.avg_cc, r.sp1, r.sp2))
    return PairReport(rows=tuple(rows), threshold=threshold)


# -- serialization ------------------------------------------------------------


def matrix_to_json_dict(matrix: CorrelationMatrix) -> dict:
    return {
        "labels": list(matrix.labels),
        "values": [list(row) for row in matrix.values],
    }


def report_to_rows(report: PairReport) -> list[dict]:
    return [
        {
            "sp1": row.sp1,
            "sp2": row.sp2,
            "cc_large": row.cc_large,
            "cc_small": row.cc_small,
            "avg_cc": row.avg_cc,
        }
        for row in report.rows
    ]
