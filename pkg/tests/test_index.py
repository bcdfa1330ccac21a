import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geoground.index import (
    CorpusParseError,
    DEFAULT_K,
    Declaration,
    EmptyCorpus,
    build_index,
    ingest,
    ingest_text,
    load_bundled_corpus,
    load_index,
    save_index,
    search,
    tokenize,
)

SMALL_CORPUS = """\
#theorem alpha_one : a -> b
  First declaration about widgets.
#definition beta_two : c
#structure gamma_three : Type
  Third declaration, mentions widgets and sprockets.
"""


@pytest.fixture(scope="module")
def bundled():
    return load_bundled_corpus()


@pytest.fixture(scope="module")
def bundled_index(bundled):
    return build_index(bundled)


class TestIngest:
    def test_three_records_in_file_order(self):
        decls = ingest_text(SMALL_CORPUS, file="small.txt")
        assert [d.name for d in decls] == ["alpha_one", "beta_two", "gamma_three"]
        assert [d.origin_line for d in decls] == [1, 3, 4]
        assert decls[0].doc == "First declaration about widgets."
        assert decls[1].doc == ""

    def test_empty_file(self):
        assert ingest_text("", file="empty.txt") == []

    def test_malformed_header_reports_location(self):
        with pytest.raises(CorpusParseError) as err:
            ingest_text("#theorem missing_colon a b\n", file="bad.txt")
        assert err.value.file == "bad.txt"
        assert err.value.line == 1

    def test_unknown_kind_rejected(self):
        with pytest.raises(CorpusParseError):
            ingest_text("#conjecture x : y\n", file="bad.txt")

    def test_stray_text_rejected(self):
        with pytest.raises(CorpusParseError):
            ingest_text("no header here\n", file="bad.txt")

    def test_ingest_files_ordered(self, tmp_path):
        (tmp_path / "b.txt").write_text("#lemma from_b : x\n")
        (tmp_path / "a.txt").write_text("#lemma from_a : x\n")
        decls = ingest([tmp_path / "b.txt", tmp_path / "a.txt"])
        assert [d.name for d in decls] == ["from_a", "from_b"]

    def test_bundled_corpus_scale(self, bundled):
        assert len(bundled) >= 190
        names = [d.name for d in bundled]
        assert len(set(names)) == len(names)  # unique names support rank-1 checks


class TestBuild:
    def test_empty_corpus_rejected(self):
        with pytest.raises(EmptyCorpus):
            build_index([])

    def test_identical_corpora_identical_indexes(self, bundled):
        i1, i2 = build_index(bundled), build_index(bundled)
        assert i1.content_hash() == i2.content_hash()
        assert i1.vectors == i2.vectors
        assert i1.meta["corpus_hash"] == i2.meta["corpus_hash"]

    def test_vocabulary_mentions_circumcenter(self, bundled_index):
        # some geometry declaration mentions it, so the token must be indexed
        assert "circumcenter" in bundled_index.vocabulary

    def test_single_declaration_self_query(self):
        decls = ingest_text("#theorem lonely_fact : p -> p\n", file="one.txt")
        idx = build_index(decls)
        results = search(idx, "lonely_fact", 5)
        assert results[0][0].name == "lonely_fact"


class TestSearch:
    def test_exact_name_rank_one(self, bundled_index):
        for decl in bundled_index.declarations:
            results = search(bundled_index, decl.name, 10)
            assert results, decl.name
            assert results[0][0].name == decl.name, decl.name

    def test_k_larger_than_corpus(self):
        decls = ingest_text(SMALL_CORPUS, file="small.txt")
        idx = build_index(decls)
        results = search(idx, "widgets declaration", 50)
        assert 0 < len(results) <= len(decls)
        scores = [s for _, s in results]
        assert scores == sorted(scores, reverse=True)

    def test_default_k_is_ten(self, bundled_index):
        import inspect

        assert inspect.signature(search).parameters["k"].default == 10 == DEFAULT_K
        assert len(search(bundled_index, "the of a and velocity energy")) <= 10

    def test_zero_overlap_excluded(self):
        idx = build_index(ingest_text(SMALL_CORPUS, file="small.txt"))
        assert search(idx, "zzzqqq") == []

    def test_k_must_be_positive(self, bundled_index):
        with pytest.raises(ValueError):
            search(bundled_index, "velocity", 0)

    @given(st.integers(0, 200))
    @settings(max_examples=30, deadline=None)
    def test_rank_stability_under_unrelated_additions(self, salt):
        decls = ingest_text(SMALL_CORPUS, file="small.txt")
        base = build_index(decls)
        query = "widgets sprockets"
        before = [d.name for d, _ in search(base, query, 10)]
        unrelated = Declaration(
            id=f"extra:{salt}",
            name=f"zzz_unrelated_{salt}",
            kind="lemma",
            signature="qqq -> qqq",
            doc="nothing shared with the query",
        )
        grown = build_index(list(decls) + [unrelated])
        after = [d.name for d, _ in search(grown, query, 10) if not d.name.startswith("zzz_")]
        assert after == before


class TestPersistence:
    def test_round_trip_preserves_search(self, tmp_path, bundled_index):
        path = tmp_path / "index.json"
        save_index(bundled_index, path)
        loaded = load_index(path)
        for query in ("midpoint", "velocity addition", "hexagonal prism", "decay"):
            got = [(d.name, round(s, 12)) for d, s in search(loaded, query, 10)]
            want = [(d.name, round(s, 12)) for d, s in search(bundled_index, query, 10)]
            assert got == want

    def test_corruption_detected(self, tmp_path, bundled_index):
        path = tmp_path / "index.json"
        save_index(bundled_index, path)
        text = path.read_text().replace("midpoint", "mudpoint", 1)
        path.write_text(text)
        with pytest.raises(ValueError):
            load_index(path)

    def test_tokenizer_splits_camel_case(self):
        assert tokenize("VelocityAddition") == ["velocity", "addition"]
        assert tokenize("decay_constant kappa2") == ["decay", "constant", "kappa", "2"]
