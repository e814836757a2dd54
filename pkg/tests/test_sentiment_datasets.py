import numpy as np
import pytest

from faqkit.datasets import make_domain_corpus, make_faq, make_ner, make_sentiment, make_two_view
from faqkit.exceptions import DataError
from faqkit.ner import encode_bilou
from faqkit.rank_eval import f1_report
from faqkit.sentiment import SentimentClassifier


# -- generators --------------------------------------------------------------------------------

def test_faq_generator_shape_and_determinism():
    faq = make_faq(40, 8, seed=1)
    assert len(faq.questions) == len(faq.answers) == 40
    assert faq.relevance == {(i, i) for i in range(40)}
    again = make_faq(40, 8, seed=1)
    assert again.questions == faq.questions and again.answers == faq.answers
    assert make_faq(40, 8, seed=2).questions != faq.questions


def test_faq_question_and_answer_share_key_word():
    faq = make_faq(30, 5, seed=0)
    for q, a in faq.relevance:
        q_words = set(faq.questions[q].rstrip("?").split())
        a_words = set(faq.answers[a].rstrip(".").lower().split())
        assert q_words & a_words


def test_two_view_generator():
    X, y_true, y_part, views = make_two_view(50, 450, n_classes=3, seed=0)
    assert X.shape == (500, 10)
    assert set(y_true[:3]) == {0, 1, 2}
    assert (y_part[:50] == y_true[:50]).all() and (y_part[50:] == -1).all()
    assert list(views[0]) == list(range(5)) and list(views[1]) == list(range(5, 10))


def test_ner_generator_spans_valid():
    sents, spans = make_ner(50, seed=0)
    for s, sp in zip(sents, spans):
        assert len(encode_bilou(len(s), sp)) == len(s)


def test_domain_corpora_differ():
    bank = " ".join(make_domain_corpus(50, "banking", seed=0)).split()
    other = " ".join(make_domain_corpus(50, "other", seed=0)).split()
    assert "conta" in bank or "pix" in bank
    assert not ({"conta", "pix", "saldo"} & set(other))
    with pytest.raises(ValueError):
        make_domain_corpus(5, "sports")


def test_sentiment_generator_labels():
    texts, labels = make_sentiment(60, seed=0)
    assert len(texts) == len(labels) == 60
    assert len(set(labels)) >= 2


# -- sentiment classifier ----------------------------------------------------------------------------

@pytest.fixture(scope="module")
def sentiment_data():
    texts, labels = make_sentiment(400, seed=0)
    return texts[:300], labels[:300], texts[300:], labels[300:]


@pytest.mark.parametrize("head, kwargs", [("forest", {"n_trees": 40}),
                                          ("dense", {"lr": 1e-2, "epochs": 20})])
def test_sentiment_heads_learn(sentiment_data, head, kwargs):
    tr_x, tr_y, te_x, te_y = sentiment_data
    clf = SentimentClassifier(head=head, n_components=30, **kwargs).fit(tr_x, tr_y)
    pred = clf.predict(te_x)
    rep = f1_report(pred, te_y, sorted(set(tr_y)))
    assert rep["macro"]["f1"] >= 0.8
    P = clf.predict_proba(te_x)
    np.testing.assert_allclose(P.sum(axis=1), 1.0, atol=1e-12)


def test_catalog_match_overrides_model(sentiment_data):
    tr_x, tr_y, _, _ = sentiment_data
    label = tr_y[0]
    other = next(c for c in set(tr_y) if c != label)
    clf = SentimentClassifier(n_trees=5, n_components=10, catalog=[(tr_x[0], other)]).fit(tr_x, tr_y)
    assert clf.predict([tr_x[0]])[0] == other


def test_sentiment_errors():
    with pytest.raises(DataError):
        SentimentClassifier().fit([], [])
    with pytest.raises(ValueError):
        SentimentClassifier(head="svm", n_components=2).fit(["a b", "b c"], ["x", "y"])
