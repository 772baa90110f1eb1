"""Corpus scanner: unsafe-API name usage statistics over local Rust source.

Files are matched with call-like token matching (name, optional turbofish,
opening parenthesis) after lexical stripping of comments and strings, and
gated on the ``unsafe`` keyword appearing in the file. Both refinements can
be disabled to reproduce plainer methodologies. Aggregation is a
commutative merge, so reports are deterministic regardless of traversal
or scheduling order.
"""

from __future__ import annotations

import logging
import re
from collections import Counter
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import enum

from .docstore import DocDatabase
from .rust_lexer import strip_comments_and_strings

log = logging.getLogger(__name__)

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_UNSAFE_RE = re.compile(r"(?<![A-Za-z0-9_])unsafe(?![A-Za-z0-9_])")


@dataclass(frozen=True)
class ApiNameDictionary:
    names: frozenset[str]
    excluded: frozenset[str]


@dataclass(frozen=True)
class ScanConfig:
    root: Path
    file_pattern: str = "*.rs"
    strip_comments_and_strings: bool = True
    require_unsafe_in_file: bool = True
    follow_yanked: bool = False
    bare_token: bool = False
    exclude_packages: frozenset[str] = dataclass_field(default_factory=frozenset)


@dataclass(frozen=True)
class PackageReport:
    package_name: str
    counts: dict[str, int]
    has_unsafe: bool = False


@dataclass(frozen=True)
class NameStats:
    package_count: int
    total_occurrences: int


@dataclass(frozen=True)
class EcosystemReport:
    per_name: dict[str, NameStats]
    scanned_packages: int
    packages_with_unsafe: int


class SortKey(enum.Enum):
    PACKAGE_COUNT = "package_count"
    TOTAL_OCCURRENCES = "total_occurrences"


# -- dictionary ---------------------------------------------------------------


def build_dictionary(db: DocDatabase, safe_name_list: set[str]) -> ApiNameDictionary:
    """Distinct API names from the database, minus safe-function collisions."""
    all_names = {record.signature.name for record in db.records.values()}
    bad = {n for n in all_names if not _IDENT_RE.match(n)}
    if bad:
        raise ValueError(f"non-identifier API names: {sorted(bad)}")
    excluded = all_names & set(safe_name_list)
    return ApiNameDictionary(
        names=frozenset(all_names - excluded), excluded=frozenset(excluded)
    )


def load_safe_names(text: str) -> set[str]:
    """One name per line; blank lines and #-comments are skipped."""
    names: set[str] = set()
    for line in text.splitlines():
        entry = line.strip()
        if entry and not entry.startswith("#"):
            names.add(entry)
    return names


# -- matching -----------------------------------------------------------------


def _name_pattern(names: frozenset[str]) -> re.Pattern | None:
    if not names:
        return None
    alternation = "|".join(re.escape(n) for n in sorted(names, key=len, reverse=True))
    return re.compile(rf"(?<![A-Za-z0-9_])(?:{alternation})(?![A-Za-z0-9_])")


def _skip_ws_and_comments(text: str, i: int) -> int:
    """Skip whitespace and comments: a comment between a name and its
    argument list must not break call detection when stripping is off,
    or disabling the strip gate could lower counts."""
    n = len(text)
    while i < n:
        if text[i].isspace():
            i += 1
        elif text.startswith("//", i):
            end = text.find("\n", i)
            i = n if end == -1 else end + 1
        elif text.startswith("/*", i):
            depth = 1
            i += 2
            while i < n and depth:
                if text.startswith("/*", i):
                    depth += 1
                    i += 2
                elif text.startswith("*/", i):
                    depth -= 1
                    i += 2
                else:
                    i += 1
        else:
            break
    return i


def _skip_turbofish(text: str, i: int) -> int | None:
    """Index past '::<...>' starting at i, or None if not a turbofish."""
    j = i
    if not text.startswith("::", j):
        return None
    j = _skip_ws_and_comments(text, j + 2)
    if j >= len(text) or text[j] != "<":
        return None
    depth = 0
    while j < len(text):
        ch = text[j]
        if ch == "<":
            depth += 1
        elif ch == ">" and text[j - 1] != "-":
            depth -= 1
            if depth == 0:
                return j + 1
        j += 1
    return None


def _is_call_like(text: str, end: int) -> bool:
    i = _skip_ws_and_comments(text, end)
    after_turbofish = _skip_turbofish(text, i)
    if after_turbofish is not None:
        i = _skip_ws_and_comments(text, after_turbofish)
    return i < len(text) and text[i] == "("


def match_names(text: str, names: frozenset[str], *, call_like: bool = True) -> Counter:
    """Occurrence counts of dictionary names as whole identifier tokens.

    With ``call_like`` the token must be followed by an optional turbofish
    and an opening parenthesis; otherwise any token occurrence counts.
    """
    pattern = _name_pattern(names)
    counts: Counter = Counter()
    if pattern is None:
        return counts
    for match in pattern.finditer(text):
        if not call_like or _is_call_like(text, match.end()):
            counts[match.group(0)] += 1
    return counts


def _prepare_text(content: bytes, cfg: ScanConfig, origin: str) -> str | None:
    try:
        text = content.decode("utf-8")
    except UnicodeDecodeError as exc:
        log.warning("skipping non-UTF-8 file %s: %s", origin, exc)
        return None
    if cfg.strip_comments_and_strings:
        text = strip_comments_and_strings(text)
    return text


def scan_file(
    content: bytes, dictionary: ApiNameDictionary, cfg: ScanConfig, *, origin: str = "<memory>"
) -> dict[str, int]:
    """Name occurrence counts for one file under the configured gates."""
    text = _prepare_text(content, cfg, origin)
    if text is None:
        return {}
    if cfg.require_unsafe_in_file and not _UNSAFE_RE.search(text):
        return {}
    return dict(match_names(text, dictionary.names, call_like=not cfg.bare_token))


# -- corpus traversal ---------------------------------------------------------


def _package_name(manifest_dir: Path) -> str:
    manifest = manifest_dir / "Cargo.toml"
    try:
        parsed = tomllib.loads(manifest.read_text(encoding="utf-8"))
        name = parsed.get("package", {}).get("name")
        if isinstance(name, str) and name:
            return name
    except (OSError, tomllib.TOMLDecodeError) as exc:
        log.warning("unreadable manifest %s: %s", manifest, exc)
    return manifest_dir.name


def _package_key(path: Path, root: Path, manifest_dirs: set[Path]) -> Path | str:
    """Nearest manifest directory, else a synthetic top-level group."""
    for parent in path.parents:
        if parent in manifest_dirs:
            return parent
        if parent == root:
            break
    relative = path.relative_to(root)
    if len(relative.parts) > 1:
        return relative.parts[0]
    return "(root)"


def scan_packages(cfg: ScanConfig, dictionary: ApiNameDictionary) -> list[PackageReport]:
    """Per-package scan results, ordered by package name."""
    root = Path(cfg.root)
    if not root.is_dir():
        raise FileNotFoundError(f"scan root {root} is not a readable directory")

    manifest_dirs = {p.parent for p in root.rglob("Cargo.toml")}
    if (root / "Cargo.toml").exists():
        manifest_dirs.add(root)

    grouped: dict[Path | str, list[Path]] = {}
    for path in sorted(root.rglob(cfg.file_pattern)):
        if not path.is_file():
            continue
        grouped.setdefault(_package_key(path, root, manifest_dirs), []).append(path)

    reports: list[PackageReport] = []
    for key, files in grouped.items():
        name = _package_name(key) if isinstance(key, Path) else str(key)
        if not cfg.follow_yanked and name in cfg.exclude_packages:
            continue
        counts: Counter = Counter()
        has_unsafe = False
        for path in files:
            text = _prepare_text(path.read_bytes(), cfg, str(path))
            if text is None:
                continue
            file_unsafe = bool(_UNSAFE_RE.search(text))
            has_unsafe = has_unsafe or file_unsafe
            if cfg.require_unsafe_in_file and not file_unsafe:
                continue
            counts.update(match_names(text, dictionary.names, call_like=not cfg.bare_token))
        reports.append(
            PackageReport(package_name=name, counts=dict(counts), has_unsafe=has_unsafe)
        )
    reports.sort(key=lambda r: r.package_name)
    return reports


def aggregate(reports: list[PackageReport]) -> EcosystemReport:
    """Commutative merge of package reports into ecosystem totals."""
    package_count: Counter = Counter()
    occurrences: Counter = Counter()
    with_unsafe = 0
    for report in reports:
        if report.has_unsafe:
            with_unsafe += 1
        for name, count in report.counts.items():
            if count > 0:
                package_count[name] += 1
                occurrences[name] += count
    per_name = {
        name: NameStats(package_count=package_count[name], total_occurrences=occurrences[name])
        for name in sorted(package_count)
    }
    return EcosystemReport(
        per_name=per_name,
        scanned_packages=len(reports),
        packages_with_unsafe=with_unsafe,
    )


def scan_corpus(cfg: ScanConfig, dictionary: ApiNameDictionary) -> EcosystemReport:
    return aggregate(scan_packages(cfg, dictionary))


def top_n(report: EcosystemReport, n: int, key: SortKey) -> list[tuple[str, int, int]]:
    """Top rows (name, package_count, total_occurrences) by the chosen key."""
    if n < 0:
        raise ValueError("n must be non-negative")
    rows = [
        (name, stats.package_count, stats.total_occurrences)
        for name, stats in report.per_name.items()
    ]
    index = 1 if key is SortKey.PACKAGE_COUNT else 2
    rows.sort(key=lambda row: (-row[index], row[0]))
    return rows[:n]
