"""Command-line entry point exposing every subsystem as a subcommand."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from datetime import date
from pathlib import Path

from . import analysis, cvebench, docstore, lsp, scanner, taxonomy
from .config import resolve_data_paths
from .errors import DataFormatError

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="unsafe-props",
        description="Safety-property catalog, document database, and analysis tools"
        " for unsafe Rust APIs.",
    )
    parser.add_argument("--config", type=Path, help="config file overriding the search path")
    parser.add_argument("--catalog", type=Path, help="catalog file override")
    parser.add_argument("--db", type=Path, help="document database override")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("validate", help="validate catalog, database, and CVE dataset")

    p_build = sub.add_parser("build", help="emit the canonical database export")
    p_build.add_argument("--output", "-o", type=Path, help="write to file instead of stdout")

    p_query = sub.add_parser("query", help="print one record as JSON")
    p_query.add_argument("identifier")

    p_render = sub.add_parser("render", help="print one record's formatted document")
    p_render.add_argument("identifier")

    p_corr = sub.add_parser("correlate", help="correlation matrices and pair report")
    p_corr.add_argument("--threshold", type=float, default=0.4)
    p_corr.add_argument("--small", action="store_true", help="emit only the small-dataset matrix")
    p_corr.add_argument("--full-labels", type=Path, help="database file replacing the seed labels")
    p_corr.add_argument("--format", choices=("json", "csv", "text"), default="json")

    p_scan = sub.add_parser("scan", help="scan a corpus of Rust packages for API usage")
    p_scan.add_argument("root", type=Path)
    p_scan.add_argument("--top", type=int, default=0, help="limit to the top N names")
    p_scan.add_argument("--key", choices=("package-count", "total-occurrences"),
                        default="package-count")
    p_scan.add_argument("--no-strip", action="store_true",
                        help="match inside comments and strings too")
    p_scan.add_argument("--no-unsafe-gate", action="store_true",
                        help="count files that never mention unsafe")
    p_scan.add_argument("--bare-token", action="store_true",
                        help="count bare tokens instead of call-like uses")
    p_scan.add_argument("--exclude-list", type=Path,
                        help="file of package names to skip (one per line)")
    p_scan.add_argument("--safe-names", type=Path, help="safe-name list override")
    p_scan.add_argument("--per-package", action="store_true", help="include per-package detail")
    p_scan.add_argument("--format", choices=("json", "csv", "text"), default="text")

    p_cve = sub.add_parser("cve", help="CVE dataset reports")
    p_cve.add_argument("--cves", type=Path, help="CVE dataset override")
    cve_sub = p_cve.add_subparsers(dest="cve_command", required=True)
    p_cve_report = cve_sub.add_parser("report", help="distribution over safety properties")
    p_cve_report.add_argument("--format", choices=("json", "csv", "text"), default="text")
    p_cve_bench = cve_sub.add_parser("benchmark", help="records violating one property")
    p_cve_bench.add_argument("property")
    p_cve_bench.add_argument("--format", choices=("json", "csv", "text"), default="json")
    p_cve_timeline = cve_sub.add_parser("timeline", help="fraction published inside a date range")
    p_cve_timeline.add_argument("start", type=date.fromisoformat)
    p_cve_timeline.add_argument("end", type=date.fromisoformat)
    p_cve_timeline.add_argument("--format", choices=("json", "text"), default="text")

    sub.add_parser("serve-lsp", help="serve hover requests over stdio")
    return parser


def _load_catalog(paths) -> taxonomy.PropertyCatalog:
    return taxonomy.load_catalog(paths["catalog"].read_text(encoding="utf-8"))


def _load_db(paths, catalog) -> docstore.DocDatabase:
    return docstore.load_database(paths["database"].read_text(encoding="utf-8"), catalog)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        paths = resolve_data_paths(
            explicit_config=args.config,
            overrides={"catalog": args.catalog, "database": args.db},
        )
        return _dispatch(args, paths)
    except (DataFormatError, FileNotFoundError, ValueError, KeyError) as exc:
        detail = exc.args[0] if exc.args else exc
        print(f"error: {detail}", file=sys.stderr)
        return EXIT_FAILURE


def _dispatch(args, paths) -> int:
    command = args.command
    if command == "validate":
        return _cmd_validate(paths)
    if command == "build":
        return _cmd_build(args, paths)
    if command == "query":
        return _cmd_query(args, paths)
    if command == "render":
        return _cmd_render(args, paths)
    if command == "correlate":
        return _cmd_correlate(args, paths)
    if command == "scan":
        return _cmd_scan(args, paths)
    if command == "cve":
        return _cmd_cve(args, paths)
    if command == "serve-lsp":
        return _cmd_serve(paths)
    raise AssertionError(f"unhandled command {command}")


def _cmd_validate(paths) -> int:
    failures = 0
    catalog = _load_catalog(paths)
    for diag in taxonomy.validate_catalog(catalog):
        print(f"catalog: {diag}")
        failures += 1
    db = _load_db(paths, catalog)
    for diag in docstore.lint_database(db, catalog):
        print(f"database: {diag}")
        failures += 1
    dataset = cvebench.load_cves(paths["cves"].read_text(encoding="utf-8"), catalog)
    print(
        f"validated {len(catalog.properties)} properties,"
        f" {len(db.records)} records, {len(dataset.records)} CVE records:"
        f" {failures} finding(s)"
    )
    return EXIT_OK if failures == 0 else EXIT_FAILURE


def _cmd_build(args, paths) -> int:
    catalog = _load_catalog(paths)
    db = _load_db(paths, catalog)
    payload = docstore.export_canonical(db)
    if args.output:
        args.output.write_bytes(payload)
    else:
        sys.stdout.buffer.write(payload)
    return EXIT_OK


def _record_json(record, catalog) -> dict:
    return {
        "identifier": record.identifier,
        "impl_type": record.impl_type,
        "signature": record.signature.raw,
        "labels": sorted(docstore.labels_of(record, catalog)),
        "triplets": [
            {
                "subject": t.subject.token,
                "property": t.property_id,
                "slices": list(t.slices),
            }
            for t in docstore.canonical_triplets(record, catalog)
        ],
    }


def _cmd_query(args, paths) -> int:
    catalog = _load_catalog(paths)
    db = _load_db(paths, catalog)
    record = docstore.lookup(db, args.identifier)
    if record is None:
        print(f"error: no record for {args.identifier!r}", file=sys.stderr)
        return EXIT_FAILURE
    print(json.dumps(_record_json(record, catalog), indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_render(args, paths) -> int:
    catalog = _load_catalog(paths)
    db = _load_db(paths, catalog)
    record = docstore.lookup(db, args.identifier)
    if record is None:
        print(f"error: no record for {args.identifier!r}", file=sys.stderr)
        return EXIT_FAILURE
    sys.stdout.write(docstore.render_doc(record, catalog))
    return EXIT_OK


def _cmd_correlate(args, paths) -> int:
    catalog = _load_catalog(paths)
    if args.full_labels:
        db = docstore.load_database(args.full_labels.read_text(encoding="utf-8"), catalog)
    else:
        db = _load_db(paths, catalog)
    large = analysis.build_matrix(db, catalog)
    small = analysis.small_dataset(large)
    corr_large = analysis.correlate(large)
    corr_small = analysis.correlate(small)
    report = analysis.report_pairs(corr_large, corr_small, args.threshold)

    if args.format == "json":
        doc: dict = {}
        if not args.small:
            doc["large"] = analysis.matrix_to_json_dict(corr_large)
        doc["small"] = analysis.matrix_to_json_dict(corr_small)
        if not args.small:
            doc["pairs"] = analysis.report_to_rows(report)
            doc["threshold"] = args.threshold
        print(json.dumps(doc, indent=2, sort_keys=True))
    elif args.format == "csv":
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(["sp1", "sp2", "cc_large", "cc_small", "avg_cc"])
        for row in report.rows:
            writer.writerow(
                [row.sp1, row.sp2, f"{row.cc_large:.4f}", f"{row.cc_small:.4f}",
                 f"{row.avg_cc:.4f}"]
            )
    else:
        print(f"pairs with avg CC > {args.threshold}"
              f" ({len(large.rows)} rows large, {len(small.rows)} small):")
        for row in report.rows:
            print(f"  {row.sp1} - {row.sp2}: avg {row.avg_cc:.2f}"
                  f" (large {row.cc_large:.2f}, small {row.cc_small:.2f})")
        if not report.rows:
            print("  none")
    return EXIT_OK


def _cmd_scan(args, paths) -> int:
    catalog = _load_catalog(paths)
    db = _load_db(paths, catalog)
    safe_path = args.safe_names or paths["safe_names"]
    safe_names = scanner.load_safe_names(safe_path.read_text(encoding="utf-8"))
    dictionary = scanner.build_dictionary(db, safe_names)
    exclude: frozenset[str] = frozenset()
    if args.exclude_list:
        exclude = frozenset(scanner.load_safe_names(args.exclude_list.read_text(encoding="utf-8")))
    cfg = scanner.ScanConfig(
        root=args.root,
        strip_comments_and_strings=not args.no_strip,
        require_unsafe_in_file=not args.no_unsafe_gate,
        bare_token=args.bare_token,
        exclude_packages=exclude,
    )
    packages = scanner.scan_packages(cfg, dictionary)
    report = scanner.aggregate(packages)
    key = (
        scanner.SortKey.PACKAGE_COUNT
        if args.key == "package-count"
        else scanner.SortKey.TOTAL_OCCURRENCES
    )
    limit = args.top if args.top > 0 else len(report.per_name)
    rows = scanner.top_n(report, limit, key)

    if args.format == "json":
        doc = {
            "scanned_packages": report.scanned_packages,
            "packages_with_unsafe": report.packages_with_unsafe,
            "names": [
                {"name": name, "package_count": pkgs, "total_occurrences": total}
                for name, pkgs, total in rows
            ],
        }
        if args.per_package:
            doc["packages"] = [
                {"package": p.package_name, "counts": p.counts, "has_unsafe": p.has_unsafe}
                for p in packages
            ]
        print(json.dumps(doc, indent=2, sort_keys=True))
    elif args.format == "csv":
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(["name", "package_count", "total_occurrences"])
        for name, pkgs, total in rows:
            writer.writerow([name, pkgs, total])
    else:
        print(f"scanned {report.scanned_packages} package(s),"
              f" {report.packages_with_unsafe} with unsafe code")
        for name, pkgs, total in rows:
            print(f"  {name}: {pkgs} package(s), {total} occurrence(s)")
        if args.per_package:
            for pkg in packages:
                detail = ", ".join(f"{n}={c}" for n, c in sorted(pkg.counts.items())) or "-"
                print(f"  [{pkg.package_name}] unsafe={pkg.has_unsafe} {detail}")
    return EXIT_OK


def _cmd_cve(args, paths) -> int:
    catalog = _load_catalog(paths)
    cve_path = args.cves or paths["cves"]
    dataset = cvebench.load_cves(cve_path.read_text(encoding="utf-8"), catalog)
    if args.cve_command == "report":
        report = cvebench.distribution(dataset, catalog)
        if args.format == "json":
            print(
                json.dumps(
                    {
                        "per_property": report.per_property,
                        "zero_properties": list(report.zero_properties),
                        "total": report.total,
                        "root_cause_fractions": report.root_cause_fractions,
                    },
                    indent=2,
                    sort_keys=True,
                )
            )
        elif args.format == "csv":
            writer = csv.writer(sys.stdout, lineterminator="\n")
            writer.writerow(["property", "count"])
            for pid, count in report.per_property.items():
                writer.writerow([pid, count])
        else:
            print(f"{report.total} retained CVE record(s)")
            for pid, count in report.per_property.items():
                print(f"  {pid}: {count}")
            for cause, fraction in report.root_cause_fractions.items():
                print(f"  {cause}: {fraction:.4f}")
        return EXIT_OK
    if args.cve_command == "benchmark":
        records = cvebench.export_benchmark(dataset, args.property, catalog)
        if args.format == "json":
            print(json.dumps([cvebench.record_to_dict(r) for r in records],
                             indent=2, sort_keys=True))
        elif args.format == "csv":
            writer = csv.writer(sys.stdout, lineterminator="\n")
            writer.writerow(["id", "published", "package", "root_cause"])
            for record in records:
                writer.writerow(
                    [record.id, record.published.isoformat(), record.package,
                     record.root_cause.value if record.root_cause else ""]
                )
        else:
            for record in records:
                print(f"{record.id} ({record.published.isoformat()}) {record.package}")
        return EXIT_OK
    if args.cve_command == "timeline":
        fraction = cvebench.timeline_fraction(dataset, args.start, args.end)
        if args.format == "json":
            print(json.dumps({"start": args.start.isoformat(), "end": args.end.isoformat(),
                              "fraction": fraction}))
        else:
            print(f"{fraction:.4f}")
        return EXIT_OK
    raise AssertionError(f"unhandled cve command {args.cve_command}")


def _cmd_serve(paths) -> int:
    catalog = _load_catalog(paths)
    db = _load_db(paths, catalog)
    return lsp.serve(sys.stdin.buffer, sys.stdout.buffer, db, catalog)


if __name__ == "__main__":
    sys.exit(main())
