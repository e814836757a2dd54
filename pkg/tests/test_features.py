import io
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st

from faqkit import bm25
from faqkit.corpus import PreprocessOptions
from faqkit.exceptions import DataError
from faqkit.features import (
    EmbeddingTable,
    LatentSemanticAnalysis,
    NgramTfidfVectorizer,
    PairFeaturizer,
    cosine,
    levenshtein,
    load_lsa,
    ngrams,
    prefilter_match,
    project,
    read_embeddings,
    save_lsa,
    svd,
    tfidf_fit,
)
from faqkit.features.lsa import project_rows
from faqkit.features.pairs import jaccard, length_ratio, minmax
from faqkit.features.similarity import edit_ratio, resolve_hierarchy, write_embeddings


# -- ngrams --------------------------------------------------------------------------

def test_ngrams_pair():
    assert ngrams(["a", "b"]) == Counter({"a": 1, "b": 1, "a_b": 1})


def test_ngrams_empty():
    assert ngrams([]) == Counter()


def test_ngrams_three_tokens_enumerated():
    toks = ["a", "b", "c"]
    expected = Counter()
    for n in (1, 2, 3):
        for i in range(len(toks) - n + 1):
            expected["_".join(toks[i:i + n])] += 1
    got = ngrams(toks, 3)
    assert got == expected
    assert sum(got.values()) == 6 and "a_b_c" in got


def test_ngrams_repeats_and_n_max():
    assert ngrams(["a", "a", "a"], 2) == Counter({"a": 3, "a_a": 2})
    with pytest.raises(ValueError):
        ngrams(["a"], 0)


# -- tfidf ----------------------------------------------------------------------------

def test_term_in_every_doc_has_zero_idf():
    m = tfidf_fit([["x", "a"], ["x", "b"], ["x"]], n_max=1)
    col = m.vocabulary["x"]
    assert m.idf[col] == 0.0
    assert np.all(m.rows.toarray()[:, col] == 0)


def test_single_doc_all_zero():
    m = tfidf_fit([["a", "b", "a"]])
    assert np.all(m.idf == 0) and not m.rows.toarray().any()


def test_empty_corpus():
    with pytest.raises(DataError):
        tfidf_fit([])


def test_four_doc_fixture_per_cell():
    corpus = [["conta", "saldo"], ["conta", "pix", "pix"], ["cartao", "saldo", "conta"], ["pix"]]
    m = tfidf_fit(corpus, n_max=3)
    dense = m.rows.toarray()
    grams = [ngrams(d, 3) for d in corpus]
    all_terms = set().union(*grams)
    assert set(m.vocabulary) == all_terms
    for term in all_terms:
        df = sum(term in g for g in grams)
        for i, g in enumerate(grams):
            expected = g.get(term, 0) * math.log(4 / df)
            assert dense[i, m.vocabulary[term]] == pytest.approx(expected, abs=1e-15)
    assert (dense >= 0).all() and np.isfinite(m.idf).all()
    np.testing.assert_array_equal(m.term_doc(), dense.T)


def test_transform_drops_unseen():
    m = tfidf_fit([["a", "b"], ["b", "c"]], n_max=2)
    row = m.transform([["a", "zzz", "c"]]).toarray()[0]
    assert row[m.vocabulary["a"]] == pytest.approx(math.log(2))
    assert row.sum() == pytest.approx(2 * math.log(2))


def test_vectorizer_estimator():
    vec = NgramTfidfVectorizer(n_max=2)
    X = vec.fit_transform([["a", "b"], ["b", "c"]])
    assert X.shape == (2, len(vec.get_feature_names_out()))
    np.testing.assert_allclose(vec.transform([["a", "b"], ["b", "c"]]).toarray(), X.toarray())


# -- svd -----------------------------------------------------------------------------------

def eig_singular_values(A):
    """Singular values from an independent symmetric eigen-solver on A^t A."""
    w = np.linalg.eigvalsh(A.T @ A)
    return np.sqrt(np.clip(np.sort(w)[::-1], 0, None))


def test_diagonal():
    proj = svd(np.diag([3.0, 2.0, 1.0]), 3)
    np.testing.assert_allclose(proj.sigma, [3, 2, 1], atol=1e-14)


def test_rank_one_exact():
    rng = np.random.default_rng(0)
    u, v = rng.normal(size=6), rng.normal(size=4)
    A = np.outer(u, v)
    proj = svd(A, 1)
    np.testing.assert_allclose(proj.reconstruct(), A, atol=1e-12)


def test_random_5x4_full_rank_against_eigensolver():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(5, 4))
    proj = svd(A, 4)
    assert np.linalg.norm(A - proj.reconstruct()) <= 1e-8
    np.testing.assert_allclose(proj.sigma, eig_singular_values(A), atol=1e-10)


@pytest.mark.parametrize("shape", [(8, 5), (5, 8), (12, 12), (30, 7)])
def test_orthonormal_factors_and_ordering(shape):
    rng = np.random.default_rng(sum(shape))
    A = rng.normal(size=shape)
    k = min(shape)
    proj = svd(A, k)
    np.testing.assert_allclose(proj.U.T @ proj.U, np.eye(k), atol=1e-8)
    np.testing.assert_allclose(proj.V.T @ proj.V, np.eye(k), atol=1e-8)
    assert np.all(np.diff(proj.sigma) <= 0) and np.all(proj.sigma > 0)
    idx = np.argmax(np.abs(proj.U), axis=0)
    assert np.all(proj.U[idx, np.arange(k)] > 0)


def test_truncation_is_best_rank_k():
    rng = np.random.default_rng(7)
    A = rng.normal(size=(10, 6))
    full = np.sqrt(np.sort(np.linalg.eigvalsh(A.T @ A))[::-1])
    errors = []
    for k in range(1, 7):
        err = np.linalg.norm(A - svd(A, k).reconstruct())
        # Eckart-Young: error equals the norm of the discarded singular values
        assert err == pytest.approx(np.sqrt((full[k:] ** 2).sum()), abs=1e-8)
        errors.append(err)
    assert all(a >= b - 1e-12 for a, b in zip(errors, errors[1:]))


def test_svd_errors():
    with pytest.raises(ValueError):
        svd(np.ones((3, 2)), 3)
    with pytest.raises(ValueError):
        svd(np.ones((3, 2)), 0)
    with pytest.raises(ValueError):
        svd(np.array([[1.0, np.nan], [0, 1]]), 1)


def test_rank_deficient_input():
    A = np.zeros((4, 3))
    A[0, 0] = 2.0
    proj = svd(A, 3)
    np.testing.assert_allclose(proj.sigma, [2, 0, 0], atol=1e-14)
    np.testing.assert_allclose(proj.U.T @ proj.U, np.eye(3), atol=1e-12)


def test_term_doc_matrix_input():
    m = tfidf_fit([["a", "b"], ["b", "c"], ["c", "d", "a"]], n_max=1)
    proj = svd(m, 2)
    assert proj.U.shape == (m.n_terms, 2) and proj.V.shape == (3, 2)


# -- project -------------------------------------------------------------------------------

def test_training_column_maps_to_v_row():
    rng = np.random.default_rng(3)
    T = rng.normal(size=(9, 6))
    proj = svd(T, 6)
    for j in range(6):
        np.testing.assert_allclose(project(T[:, j], proj), proj.V[j], atol=1e-8)


def test_project_zero_vector():
    proj = svd(np.random.default_rng(0).normal(size=(5, 3)), 2)
    np.testing.assert_array_equal(project(np.zeros(5), proj), np.zeros(2))


def test_project_matches_matrix_product():
    rng = np.random.default_rng(4)
    proj = svd(rng.normal(size=(7, 5)), 3)
    d = rng.normal(size=7)
    expected = np.diag(1 / proj.sigma) @ proj.U.T @ d
    np.testing.assert_allclose(project(d, proj), expected, atol=1e-12)
    np.testing.assert_allclose(project_rows(d[None, :], proj)[0], expected, atol=1e-12)


def test_project_errors():
    proj = svd(np.eye(3), 2)
    with pytest.raises(ValueError):
        project(np.ones(4), proj)
    degenerate = svd(np.diag([1.0, 0.0]), 2)
    with pytest.raises(ValueError):
        project(np.ones(2), degenerate)


@given(st.floats(-10, 10), st.integers(0, 10_000))
def test_project_linear(alpha, seed):
    rng = np.random.default_rng(seed)
    proj = svd(rng.normal(size=(6, 4)) + np.eye(6, 4), 3)
    d1, d2 = rng.normal(size=6), rng.normal(size=6)
    lhs = project(alpha * d1 + d2, proj)
    rhs = alpha * project(d1, proj) + project(d2, proj)
    np.testing.assert_allclose(lhs, rhs, atol=1e-10 * max(1.0, abs(alpha)))


# -- LSA estimator and persistence -----------------------------------------------------------

def test_lsa_clips_to_rank_and_round_trips(tmp_path):
    docs = [["a", "b"], ["b", "c"], ["a", "c", "d"], ["d"]]
    lsa = LatentSemanticAnalysis(n_components=50, n_max=2).fit(docs)
    assert lsa.n_components_ <= 4
    path = tmp_path / "lsa.bin"
    save_lsa(lsa, path)
    loaded = load_lsa(path)
    np.testing.assert_array_equal(loaded.transform(docs), lsa.transform(docs))
    buf = io.BytesIO()
    lsa.save(buf)
    assert buf.getvalue() == path.read_bytes()


def test_lsa_all_zero_matrix():
    with pytest.raises(DataError):
        LatentSemanticAnalysis(5).fit([["a"], ["a"]])


# -- cosine -------------------------------------------------------------------------------------

def test_cosine_cases():
    u = np.array([1.0, 2.0, -1.0])
    assert cosine(u, u) == pytest.approx(1.0)
    assert cosine(u, -u) == pytest.approx(-1.0)
    assert cosine([1, 0], [0, 1]) == 0.0


def test_cosine_errors():
    with pytest.raises(ValueError):
        cosine([0, 0], [1, 0])
    with pytest.raises(ValueError):
        cosine([1, 0], [1, 0, 0])


@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3), st.floats(0.01, 100))
def test_cosine_scale_invariant(v, c):
    u = np.array([1.0, -2.0, 0.5])
    v = np.array(v)
    if np.linalg.norm(v) < 1e-3:
        return
    assert cosine(c * u, v) == pytest.approx(cosine(u, v), abs=1e-12)
    assert cosine(u, c * v) == pytest.approx(cosine(u, v), abs=1e-12)


# -- levenshtein -----------------------------------------------------------------------------------

def recursive_edit_distance(a, b):
    """Exhaustive recursion over the three edit operations (no dynamic programming table)."""
    if not a:
        return len(b)
    if not b:
        return len(a)
    return min(recursive_edit_distance(a[1:], b) + 1,
               recursive_edit_distance(a, b[1:]) + 1,
               recursive_edit_distance(a[1:], b[1:]) + (a[0] != b[0]))


def test_levenshtein_basics():
    assert levenshtein("conta", "conta") == 0
    assert levenshtein("", "abc") == 3
    assert levenshtein("kitten", "sitting") == recursive_edit_distance("kitten", "sitting") == 3


@given(st.text("abc", max_size=6), st.text("abc", max_size=6))
def test_levenshtein_matches_recursion(a, b):
    assert levenshtein(a, b) == recursive_edit_distance(a, b)


@given(st.text("abcd", max_size=8), st.text("abcd", max_size=8), st.text("abcd", max_size=8))
def test_levenshtein_metric(a, b, c):
    assert levenshtein(a, b) == levenshtein(b, a)
    assert (levenshtein(a, b) == 0) == (a == b)
    assert levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c)


# -- prefilter ---------------------------------------------------------------------------------------

CATALOG = [("quero cancelar meu cartao", "negative"), ("qual o horario da agencia", "neutral"),
           ("muito obrigado pelo atendimento", "positive")]


def test_prefilter_exact_after_preprocessing():
    assert prefilter_match("Qual o horário da agência?", CATALOG) == "neutral"


def test_prefilter_far_text():
    assert prefilter_match("xyz pix investimento tesouro", CATALOG) is None


def test_prefilter_one_typo():
    text = "muito obrigado pelo atendimentu"
    ratio = edit_ratio(text, CATALOG[2][0])
    assert ratio == pytest.approx(1 / 31)
    assert ratio <= 0.2
    assert prefilter_match(text, CATALOG, max_edit_ratio=0.2) == "positive"


def test_prefilter_ratio_threshold_is_inclusive():
    catalog = [("abcdefghij", "x")]
    assert edit_ratio("abcdefghzz", "abcdefghij") == pytest.approx(0.2)
    assert prefilter_match("abcdefghzz", catalog, 0.2) == "x"
    assert prefilter_match("abcdefghzz", catalog, 0.19) is None


def test_prefilter_empty_catalog():
    with pytest.raises(ValueError):
        prefilter_match("x", [])


def test_prefilter_respects_options():
    opts = PreprocessOptions(strip_accents=False)
    assert prefilter_match("ação", [("acao", "y")], 0.0, opts) is None


def test_resolve_hierarchy():
    assert resolve_hierarchy(["positive", "negative"]) == "negative"
    assert resolve_hierarchy(["neutral"]) == "neutral"
    assert resolve_hierarchy([]) is None


# -- embeddings ---------------------------------------------------------------------------------------

def test_embeddings_round_trip(tmp_path):
    table = EmbeddingTable(("conta", "pix"), np.array([[0.5, -1.0], [1e-3, 2.0]]))
    path = tmp_path / "emb.txt"
    write_embeddings(path, table)
    loaded = read_embeddings(path)
    assert loaded.ids == table.ids
    np.testing.assert_array_equal(loaded.vectors, table.vectors)
    assert cosine(loaded["conta"], loaded["pix"]) == pytest.approx(cosine(table["conta"], table["pix"]))


def test_embeddings_bad_rows(tmp_path):
    path = tmp_path / "emb.txt"
    path.write_text("2 2\na 1 2\nb 1\n", encoding="utf-8")
    with pytest.raises(DataError):
        read_embeddings(path)
    with pytest.raises(DataError):
        EmbeddingTable(("a",), np.array([[np.inf]]))


# -- pair features ---------------------------------------------------------------------------------------

TEXTS = ["como bloquear o cartao de credito", "o cartao pode ser bloqueado pelo aplicativo",
         "para abrir uma conta poupanca va a agencia", "o pix funciona todos os dias",
         "limite do cartao de credito aumenta com o uso", "saldo e extrato no aplicativo"]


@pytest.fixture(scope="module")
def featurizer():
    return PairFeaturizer(n_components=4, n_max=2).fit(TEXTS)


def test_pair_identical_text(featurizer):
    f = featurizer.pair_features(TEXTS[0], TEXTS[0])
    assert f[0] == pytest.approx(1.0) and f[2] == 1.0 and f[3] == 1.0


def test_pair_disjoint_tokens(featurizer):
    assert featurizer.pair_features("pix funciona", "abrir conta poupanca")[2] == 0.0


def test_pair_components_recomputed(featurizer):
    q = "como bloquear o cartao"
    answers = [TEXTS[1], TEXTS[3], TEXTS[4]]
    X = featurizer.featurize(q, answers)
    q_tok = featurizer.tokens(q)
    a_toks = [featurizer.tokens(a) for a in answers]
    lsa = featurizer.lsa_
    q_vec = project(lsa.tfidf_.transform([q_tok]).toarray()[0], lsa.projection_)
    raw = np.array([bm25.score_document(q_tok, a, featurizer.index_) for a in a_toks])
    for i, a in enumerate(a_toks):
        a_vec = project(lsa.tfidf_.transform([a]).toarray()[0], lsa.projection_)
        assert X[i, 0] == pytest.approx(cosine(q_vec, a_vec), abs=1e-12)
        assert X[i, 1] == pytest.approx((raw[i] - raw.min()) / (raw.max() - raw.min()), abs=1e-12)
        assert X[i, 2] == len(set(q_tok) & set(a)) / len(set(q_tok) | set(a))
        assert X[i, 3] == min(len(q_tok), len(a)) / max(len(q_tok), len(a))
    assert np.isfinite(X).all()
    assert ((X[:, 2:4] >= 0) & (X[:, 2:4] <= 1)).all()


def test_pair_degenerate_cases(featurizer):
    assert jaccard([], []) == 1.0
    assert length_ratio([], ["a"]) == 0.0
    np.testing.assert_array_equal(minmax(np.array([2.0, 2.0])), [0.0, 0.0])
    # a question sharing nothing with the fitted vocabulary has a zero LSA vector
    f = featurizer.pair_features("zzz", TEXTS[0])
    assert f[0] == 0.0


def test_pair_lsa_vectors_and_names():
    fz = PairFeaturizer(n_components=3, n_max=1, include_lsa_vectors=True).fit(TEXTS)
    X = fz.featurize(TEXTS[0], TEXTS[1:3])
    assert X.shape == (2, fz.n_features_out_) == (2, 4 + 2 * fz.lsa_.n_components_)
    assert len(fz.get_feature_names_out()) == fz.n_features_out_


def test_pair_transform_groups(featurizer):
    pairs = [(TEXTS[0], TEXTS[1]), (TEXTS[0], TEXTS[3]), (TEXTS[2], TEXTS[5])]
    X = featurizer.transform(pairs)
    np.testing.assert_allclose(X[:2], featurizer.featurize(TEXTS[0], [TEXTS[1], TEXTS[3]]))
    np.testing.assert_allclose(X[2], featurizer.featurize(TEXTS[2], [TEXTS[5]])[0])


def test_pair_unfitted():
    from sklearn.exceptions import NotFittedError
    with pytest.raises(NotFittedError):
        PairFeaturizer().featurize("a", ["b"])


def test_pair_save_load(tmp_path, featurizer):
    path = tmp_path / "feat.bin"
    featurizer.save(path)
    loaded = PairFeaturizer.load(path)
    np.testing.assert_array_equal(loaded.featurize(TEXTS[0], TEXTS[1:]),
                                  featurizer.featurize(TEXTS[0], TEXTS[1:]))
