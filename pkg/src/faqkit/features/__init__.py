"""TF-IDF, LSA, similarity measures and pair features."""

from faqkit.features.lsa import (
    LatentSemanticAnalysis,
    LsaProjection,
    load_lsa,
    project,
    project_rows,
    save_lsa,
    svd,
)
from faqkit.features.pairs import PairFeaturizer, faq_fit_texts
from faqkit.features.similarity import (
    EmbeddingTable,
    cosine,
    levenshtein,
    prefilter_match,
    read_embeddings,
    resolve_hierarchy,
)
from faqkit.features.tfidf import NgramTfidfVectorizer, TermDocMatrix, ngrams, tfidf_fit

__all__ = [
    "EmbeddingTable", "LatentSemanticAnalysis", "LsaProjection", "NgramTfidfVectorizer",
    "PairFeaturizer", "TermDocMatrix", "cosine", "faq_fit_texts", "levenshtein", "load_lsa", "ngrams",
    "prefilter_match", "project", "project_rows", "read_embeddings", "resolve_hierarchy",
    "save_lsa", "svd", "tfidf_fit",
]
