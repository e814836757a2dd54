"""Seeded synthetic corpora: FAQ retrieval, two-view classification, NER, sentiment and domain text."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from faqkit.corpus import FaqCollection

_ONSETS = ("b", "c", "d", "f", "g", "j", "l", "m", "n", "p", "r", "s", "t", "v", "ch", "lh", "nh", "br", "cr", "pr", "tr")
_VOWELS = ("a", "e", "i", "o", "u", "ao", "ei", "ou")


def pseudo_words(n: int, rng: np.random.Generator, syllables=(2, 4), exclude=()) -> list[str]:
    """``n`` distinct pronounceable lowercase words."""
    seen = set(exclude)
    out: list[str] = []
    while len(out) < n:
        k = int(rng.integers(syllables[0], syllables[1] + 1))
        w = "".join(_ONSETS[rng.integers(len(_ONSETS))] + _VOWELS[rng.integers(len(_VOWELS))]
                    for _ in range(k))
        if w not in seen:
            seen.add(w)
            out.append(w)
    return out


def make_faq(n_questions: int = 200, n_topics: int = 20, seed: int = 0,
             n_generic: int = 30, question_generic: int = 4, answer_generic: int = 5,
             topic_words: int = 6, key_share: int = 3,
             question_topic: int = 3, answer_topic: int = 4) -> FaqCollection:
    """FAQ collection with one relevant answer per question.

    Each topic has a question vocabulary and a disjoint answer vocabulary, so
    questions and answers of a topic share no surface words. A question and
    its answer share a rare key word, which ``key_share`` questions of
    different topics reuse. Generic words are sprinkled over both sides, so
    lexical overlap alone often favors a wrong answer.
    """
    rng = np.random.default_rng(seed)
    generic = pseudo_words(n_generic, rng, (1, 2))
    taken = set(generic)
    q_topics, a_topics = [], []
    for _ in range(n_topics):
        q_topics.append(pseudo_words(topic_words, rng, (2, 3), exclude=taken))
        taken.update(q_topics[-1])
        a_topics.append(pseudo_words(topic_words, rng, (2, 3), exclude=taken))
        taken.update(a_topics[-1])
    keys = pseudo_words(-(-n_questions // key_share), rng, (3, 4), exclude=taken)
    questions, answers, relevance = {}, {}, set()
    for i in range(n_questions):
        t = i % n_topics
        key = keys[i // key_share]
        q_words = ([key] + list(rng.choice(q_topics[t], question_topic, replace=False))
                   + list(rng.choice(generic, question_generic)))
        a_words = ([key] + list(rng.choice(a_topics[t], answer_topic, replace=False))
                   + list(rng.choice(generic, answer_generic)))
        rng.shuffle(q_words)
        rng.shuffle(a_words)
        questions[i] = "como " + " ".join(q_words) + "?"
        answers[i] = " ".join(a_words).capitalize() + "."
        relevance.add((i, i))
    return FaqCollection(questions, answers, frozenset(relevance))


def make_two_view(n_labeled: int = 50, n_unlabeled: int = 450, n_classes: int = 3,
                  view_dim: int = 5, separation: float = 3.0, seed: int = 0):
    """Two conditionally independent Gaussian views of the same class label.

    Returns ``(X, y_true, y_partial, view_split)`` where ``y_partial`` marks
    unlabeled rows with ``-1``. The first ``n_labeled`` rows hold every class
    at least once.
    """
    rng = np.random.default_rng(seed)
    n = n_labeled + n_unlabeled
    y_true = rng.integers(0, n_classes, size=n)
    y_true[:n_classes] = np.arange(n_classes)
    views = []
    for _ in range(2):
        means = rng.normal(scale=separation, size=(n_classes, view_dim))
        views.append(means[y_true] + rng.normal(size=(n, view_dim)))
    X = np.hstack(views)
    y_partial = y_true.copy()
    y_partial[n_labeled:] = -1
    split = (np.arange(view_dim), np.arange(view_dim, 2 * view_dim))
    return X, y_true, y_partial, split


def make_ner(n_sentences: int = 300, classes: Sequence[str] | None = None, seed: int = 0,
             names_per_class: int = 4, max_entities: int = 3):
    """Sentences of filler words with embedded entity names.

    Every entity name is a fixed 1-3 token sequence whose tokens occur
    nowhere else, so each token string determines its tag. Returns
    ``(sentences, spans)`` with spans as ``(start, end, class)`` triples.
    """
    from faqkit.ner import EntitySpan, default_classes

    classes = list(classes) if classes is not None else default_classes(4)
    rng = np.random.default_rng(seed)
    filler = pseudo_words(40, rng, (1, 2))
    pool_words = pseudo_words(len(classes) * names_per_class * 3, rng, (2, 3), exclude=filler)
    names, pos = [], 0
    for c in classes:
        for _ in range(names_per_class):
            length = int(rng.integers(1, 4))
            toks = [w.capitalize() for w in pool_words[pos:pos + length]]
            pos += length
            names.append((toks, c))
    sentences, spans = [], []
    for _ in range(n_sentences):
        toks, sent_spans = [], []
        for _ in range(int(rng.integers(1, max_entities + 1))):
            toks.extend(rng.choice(filler, int(rng.integers(1, 4))).tolist())
            name, c = names[rng.integers(len(names))]
            sent_spans.append(EntitySpan(len(toks), len(toks) + len(name), c))
            toks.extend(name)
        toks.extend(rng.choice(filler, int(rng.integers(0, 3))).tolist())
        sentences.append(toks)
        spans.append(sent_spans)
    return sentences, spans


_BANKING = (
    "conta corrente poupanca cartao credito debito fatura boleto transferencia pix saldo extrato "
    "agencia banco emprestimo financiamento juros parcela limite senha aplicativo investimento "
    "tesouro rendimento tarifa cheque deposito saque caixa eletronico anuidade cadastro titular "
    "portabilidade consignado seguro previdencia cambio moeda remessa chave token bloqueio "
    "desbloqueio contestacao estorno compra parcelamento vencimento pagamento agendamento"
).split()
_OTHER = (
    "futebol jogador estadio campeonato torcida goleiro treinador partida receita cozinha panela "
    "tempero forno massa molho sobremesa praia montanha viagem hotel passagem aeroporto bagagem "
    "musica cantor guitarra palco concerto filme diretor cinema roteiro atriz jardim planta flor "
    "semente regador floresta animal cachorro gato passaro livro autor romance capitulo poema"
).split()
_FUNCTION = "o a os as de do da em no na para com um uma que e como meu minha seu sua".split()


def make_domain_corpus(n_sentences: int = 400, domain: str = "banking", seed: int = 0) -> list[str]:
    """Sentences mixing function words with a banking or an unrelated topical lexicon."""
    if domain not in ("banking", "other"):
        raise ValueError("domain must be 'banking' or 'other'")
    lexicon = _BANKING if domain == "banking" else _OTHER
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_sentences):
        words = []
        for _ in range(int(rng.integers(5, 12))):
            pool = lexicon if rng.random() < 0.6 else _FUNCTION
            words.append(pool[rng.integers(len(pool))])
        out.append(" ".join(words))
    return out


_SENTIMENT = {
    "negative": "pessimo horrivel demora problema reclamacao bloqueado cobranca indevida absurdo ruim".split(),
    "neutral": "informacao consulta duvida horario endereco documento saldo extrato agencia prazo".split(),
    "positive": "otimo excelente rapido resolvido obrigado parabens facil eficiente bom adorei".split(),
}


def make_sentiment(n: int = 600, seed: int = 0, noise: float = 0.3) -> tuple[list[str], list[str]]:
    """Short messages whose sentiment words come from the label's lexicon.

    A ``noise`` fraction of words comes from the shared banking lexicon.
    """
    rng = np.random.default_rng(seed)
    labels = list(_SENTIMENT)
    texts, ys = [], []
    for _ in range(n):
        label = labels[rng.integers(len(labels))]
        words = []
        for _ in range(int(rng.integers(4, 9))):
            pool = _BANKING if rng.random() < noise else _SENTIMENT[label]
            words.append(pool[rng.integers(len(pool))])
        texts.append(" ".join(words))
        ys.append(label)
    return texts, ys
