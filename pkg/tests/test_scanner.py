from __future__ import annotations

import random

import pytest
from hypothesis import given, strategies as st

from unsafe_props.rust_lexer import strip_comments_and_strings
from unsafe_props.scanner import (
    ApiNameDictionary,
    ScanConfig,
    SortKey,
    aggregate,
    build_dictionary,
    load_safe_names,
    match_names,
    scan_corpus,
    scan_file,
    scan_packages,
    top_n,
)

DICT = ApiNameDictionary(names=frozenset({"read", "from_raw", "zeroed", "get_unchecked",
                                          "transmute", "assume_init", "new_unchecked"}),
                         excluded=frozenset())


def _cfg(root, **kwargs) -> ScanConfig:
    return ScanConfig(root=root, **kwargs)


# -- lexer ---------------------------------------------------------------------


def test_strip_line_comments_keeps_newlines():
    text = "let x = 1; // read(p)\nlet y = 2;"
    stripped = strip_comments_and_strings(text)
    assert "read" not in stripped
    assert stripped.count("\n") == 1
    assert "let y = 2;" in stripped


def test_strip_nested_block_comments():
    text = "a /* outer /* inner read( */ still comment */ b"
    stripped = strip_comments_and_strings(text)
    assert "read" not in stripped
    assert stripped.startswith("a ") and stripped.endswith(" b")


def test_strip_plain_and_byte_strings():
    text = 'let s = "read(p)"; let b = b"zeroed()"; call();'
    stripped = strip_comments_and_strings(text)
    assert "read" not in stripped and "zeroed" not in stripped
    assert "call();" in stripped


def test_strip_raw_strings_with_hashes():
    text = 'let s = r#"say "read(p)" loudly"#; done();'
    stripped = strip_comments_and_strings(text)
    assert "read" not in stripped
    assert "done();" in stripped


def test_char_literals_stripped_but_lifetimes_kept():
    text = "let c = '\"'; let q = '\\''; fn f<'a>(x: &'a str) {}"
    stripped = strip_comments_and_strings(text)
    assert "'a" in stripped
    assert '"' not in stripped
    text2 = "let x: &'static str = y; let ch = 'z';"
    stripped2 = strip_comments_and_strings(text2)
    assert "'static" in stripped2
    assert "'z'" not in stripped2


def test_string_with_escaped_quote():
    text = 'let s = "a \\" read(p)"; next();'
    stripped = strip_comments_and_strings(text)
    assert "read" not in stripped
    assert "next();" in stripped


# -- dictionary ------------------------------------------------------------------


def test_build_dictionary_merges_and_excludes(catalog, seed_db):
    dictionary = build_dictionary(seed_db, {"read", "add", "take"})
    assert "read" not in dictionary.names
    assert dictionary.excluded == {"read", "take"}
    assert "from_raw" in dictionary.names
    assert not (dictionary.names & dictionary.excluded)
    names = [r.signature.name for r in seed_db.records.values()]
    assert names.count("from_raw") == 4  # merged to one dictionary entry


def test_build_dictionary_empty_db(catalog, seed_db):
    from unsafe_props.docstore import DocDatabase

    empty = DocDatabase(records={}, catalog_version="", catalog=catalog)
    dictionary = build_dictionary(empty, {"read"})
    assert dictionary.names == frozenset()
    assert dictionary.excluded == frozenset()


def test_load_safe_names_skips_comments():
    assert load_safe_names("# heading\nadd\n\nread\n") == {"add", "read"}


# -- matching --------------------------------------------------------------------


def test_scan_file_counts_call(tmp_path):
    counts = scan_file(b"unsafe { ptr::read(p) }", DICT, _cfg(tmp_path))
    assert counts == {"read": 1}


def test_scan_file_identifier_boundary(tmp_path):
    assert scan_file(b"unsafe fn read_all() {}", DICT, _cfg(tmp_path)) == {}


def test_scan_file_unsafe_gate(tmp_path):
    content = b"let x = transmute::<A,B>(y);"
    assert scan_file(content, DICT, _cfg(tmp_path)) == {}
    gated_off = _cfg(tmp_path, require_unsafe_in_file=False)
    assert scan_file(content, DICT, gated_off) == {"transmute": 1}


def test_turbofish_with_nested_generics(tmp_path):
    content = b"unsafe { transmute::<Vec<A>, B>(y) }"
    assert scan_file(content, DICT, _cfg(tmp_path)) == {"transmute": 1}


def test_bare_token_mode_counts_non_calls(tmp_path):
    content = b"unsafe { let f = ptr::read; }"
    assert scan_file(content, DICT, _cfg(tmp_path)) == {}
    bare = _cfg(tmp_path, bare_token=True)
    assert scan_file(content, DICT, bare) == {"read": 1}


def test_unsafe_token_boundary(tmp_path):
    content = b"let unsafety = read(p);"
    assert scan_file(content, DICT, _cfg(tmp_path)) == {}


def test_non_utf8_file_skipped(tmp_path):
    assert scan_file(b"unsafe \xff\xfe read(", DICT, _cfg(tmp_path)) == {}


def test_match_names_multiple_occurrences():
    text = "read(a); read(b); zeroed ( ) ; from_raw"
    counts = match_names(text, DICT.names)
    assert counts == {"read": 2, "zeroed": 1}


_SNIPPET_PIECES = [
    "read(x); ",
    "zeroed::<T>() ",
    "from_raw (p) ",
    "let read_all = 1; ",
    "// read(c)\n",
    "/* zeroed() */ ",
    '"read(s)" ',
    'r#"from_raw(r)"# ',
    "unsafe { } ",
    "fn helper() {} ",
    "let lt: &'a str = s; ",
    "let ch = 'x'; ",
    "read/*gap*/(p) ",
    "get_unchecked\n(i) ",
]


@given(st.lists(st.sampled_from(_SNIPPET_PIECES), max_size=30))
def test_gate_monotonicity_on_generated_content(pieces):
    from pathlib import Path

    content = "".join(pieces).encode("utf-8")
    results = {}
    for strip in (True, False):
        for gate in (True, False):
            cfg = ScanConfig(
                root=Path("."),
                strip_comments_and_strings=strip,
                require_unsafe_in_file=gate,
            )
            results[(strip, gate)] = scan_file(content, DICT, cfg)
    for name in DICT.names:
        for gate in (True, False):
            assert (
                results[(False, gate)].get(name, 0) >= results[(True, gate)].get(name, 0)
            ), (name, content)
        for strip in (True, False):
            assert (
                results[(strip, True)].get(name, 0) <= results[(strip, False)].get(name, 0)
            ), (name, content)


def test_comment_between_name_and_parens_stays_monotone(tmp_path):
    # a comment splicing the call must not make stripping count MORE
    for content in (b"unsafe { read/* why */(p) }", b"unsafe { read // why\n (p) }"):
        stripped = scan_file(content, DICT, _cfg(tmp_path))
        raw = scan_file(content, DICT, _cfg(tmp_path, strip_comments_and_strings=False))
        assert stripped == {"read": 1}
        assert raw.get("read", 0) >= stripped["read"]


# -- corpus ----------------------------------------------------------------------

GROUND_TRUTH_DEFAULT = {
    "alpha": {"from_raw": 2, "new_unchecked": 1, "zeroed": 1},
    "beta": {"assume_init": 1},
    "gamma": {},
}


def test_fixture_corpus_matches_hand_counts(fixture_corpus, catalog, seed_db):
    safe = load_safe_names(
        (fixture_corpus.parent / "safe_names.txt").read_text(encoding="utf-8")
    )
    dictionary = build_dictionary(seed_db, safe)
    packages = scan_packages(_cfg(fixture_corpus), dictionary)
    assert {p.package_name: p.counts for p in packages} == GROUND_TRUTH_DEFAULT
    assert [p.has_unsafe for p in packages] == [True, True, False]

    report = aggregate(packages)
    assert report.scanned_packages == 3
    assert report.packages_with_unsafe == 2
    assert {n: (s.package_count, s.total_occurrences) for n, s in report.per_name.items()} == {
        "assume_init": (1, 1),
        "from_raw": (1, 2),
        "new_unchecked": (1, 1),
        "zeroed": (1, 1),
    }


def test_fixture_gates_are_monotone(fixture_corpus, catalog, seed_db):
    safe = load_safe_names(
        (fixture_corpus.parent / "safe_names.txt").read_text(encoding="utf-8")
    )
    dictionary = build_dictionary(seed_db, safe)
    base = scan_corpus(_cfg(fixture_corpus), dictionary)
    no_strip = scan_corpus(_cfg(fixture_corpus, strip_comments_and_strings=False), dictionary)
    no_gate = scan_corpus(_cfg(fixture_corpus, require_unsafe_in_file=False), dictionary)

    for relaxed in (no_strip, no_gate):
        for name, stats in base.per_name.items():
            assert relaxed.per_name[name].total_occurrences >= stats.total_occurrences
            assert relaxed.per_name[name].package_count >= stats.package_count
    # comment-only and string-only decoys surface without stripping
    assert no_strip.per_name["from_raw"].total_occurrences == 5
    assert no_strip.per_name["zeroed"].total_occurrences == 3
    assert no_strip.per_name["get_unchecked"].total_occurrences == 2
    assert no_strip.packages_with_unsafe == 3
    # the no-unsafe decoy package surfaces without the gate
    assert no_gate.per_name["get_unchecked"] .total_occurrences == 2
    assert no_gate.packages_with_unsafe == 2


def test_empty_directory(tmp_path, seed_db):
    dictionary = ApiNameDictionary(names=frozenset({"read"}), excluded=frozenset())
    report = scan_corpus(_cfg(tmp_path), dictionary)
    assert report.scanned_packages == 0
    assert report.per_name == {}


def test_comment_only_package_absent_from_per_name(tmp_path):
    pkg = tmp_path / "quiet"
    (pkg / "src").mkdir(parents=True)
    (pkg / "Cargo.toml").write_text('[package]\nname = "quiet"\n', encoding="utf-8")
    (pkg / "src" / "lib.rs").write_text(
        "// unsafe read(p) in a comment only\npub fn ok() {}\n", encoding="utf-8"
    )
    report = scan_corpus(_cfg(tmp_path), DICT)
    assert "read" not in report.per_name
    assert report.scanned_packages == 1
    assert report.packages_with_unsafe == 0


def test_files_outside_packages_group_by_top_level_dir(tmp_path):
    (tmp_path / "loose").mkdir()
    (tmp_path / "loose" / "a.rs").write_text("unsafe { read(p); }", encoding="utf-8")
    (tmp_path / "top.rs").write_text("unsafe { zeroed() }", encoding="utf-8")
    packages = scan_packages(_cfg(tmp_path), DICT)
    names = {p.package_name: p.counts for p in packages}
    assert names == {"loose": {"read": 1}, "(root)": {"zeroed": 1}}


def test_package_name_from_manifest(tmp_path):
    pkg = tmp_path / "dir-name"
    pkg.mkdir()
    (pkg / "Cargo.toml").write_text('[package]\nname = "real-name"\n', encoding="utf-8")
    (pkg / "lib.rs").write_text("unsafe { read(p); }", encoding="utf-8")
    packages = scan_packages(_cfg(tmp_path), DICT)
    assert packages[0].package_name == "real-name"


def test_exclusion_list_skips_packages(fixture_corpus, seed_db):
    safe = load_safe_names(
        (fixture_corpus.parent / "safe_names.txt").read_text(encoding="utf-8")
    )
    dictionary = build_dictionary(seed_db, safe)
    cfg = _cfg(fixture_corpus, exclude_packages=frozenset({"alpha"}))
    report = scan_corpus(cfg, dictionary)
    assert report.scanned_packages == 2
    assert "from_raw" not in report.per_name
    followed = _cfg(fixture_corpus, exclude_packages=frozenset({"alpha"}), follow_yanked=True)
    assert scan_corpus(followed, dictionary).scanned_packages == 3


def test_unreadable_root_rejected(tmp_path):
    with pytest.raises(FileNotFoundError):
        scan_corpus(_cfg(tmp_path / "missing"), DICT)


def test_aggregate_is_order_independent(fixture_corpus, seed_db):
    safe = load_safe_names(
        (fixture_corpus.parent / "safe_names.txt").read_text(encoding="utf-8")
    )
    dictionary = build_dictionary(seed_db, safe)
    packages = scan_packages(_cfg(fixture_corpus), dictionary)
    rng = random.Random(5)
    for _ in range(5):
        shuffled = packages[:]
        rng.shuffle(shuffled)
        assert aggregate(shuffled) == aggregate(packages)


def test_per_name_invariants(fixture_corpus, seed_db):
    safe = load_safe_names(
        (fixture_corpus.parent / "safe_names.txt").read_text(encoding="utf-8")
    )
    dictionary = build_dictionary(seed_db, safe)
    report = scan_corpus(_cfg(fixture_corpus), dictionary)
    for stats in report.per_name.values():
        assert stats.package_count <= report.scanned_packages
        assert stats.package_count <= stats.total_occurrences


# -- top_n -----------------------------------------------------------------------


def _report():
    from unsafe_props.scanner import EcosystemReport, NameStats

    return EcosystemReport(
        per_name={
            "beta": NameStats(2, 9),
            "alpha": NameStats(2, 4),
            "gamma": NameStats(3, 3),
        },
        scanned_packages=4,
        packages_with_unsafe=3,
    )


def test_top_n_by_package_count_ties_lexicographic():
    rows = top_n(_report(), 10, SortKey.PACKAGE_COUNT)
    assert [r[0] for r in rows] == ["gamma", "alpha", "beta"]


def test_top_n_by_total_occurrences():
    rows = top_n(_report(), 2, SortKey.TOTAL_OCCURRENCES)
    assert [r[0] for r in rows] == ["beta", "alpha"]


def test_top_n_zero_and_negative():
    assert top_n(_report(), 0, SortKey.PACKAGE_COUNT) == []
    with pytest.raises(ValueError):
        top_n(_report(), -1, SortKey.PACKAGE_COUNT)
