"""Inverted index, Okapi BM25, RM3 pseudo-relevance feedback, and the
two-stage entity-expansion lexical baseline."""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass

from .corpus import Corpus
from .entities import extract_regex
from .ranking import RankedList

_TOKEN = re.compile(r"[^0-9a-z]+")


def tokenize(text: str) -> list[str]:
    """Lowercase, split on non-alphanumeric runs, drop empties.

    No stemming, no stopword removal.
    """
    return [t for t in _TOKEN.split(text.lower()) if t]


@dataclass
class InvertedIndex:
    postings: dict[str, list[tuple[int, int]]]  # term -> [(doc ordinal, tf)]
    doc_lengths: list[int]
    avgdl: float
    N: int
    doc_ids: list[str]

    def df(self, term: str) -> int:
        return len(self.postings.get(term, ()))


def build_index(corpus: Corpus) -> InvertedIndex:
    postings: dict[str, list[tuple[int, int]]] = {}
    doc_lengths: list[int] = []
    for d, passage in enumerate(corpus.passages):
        toks = tokenize(passage.text)
        doc_lengths.append(len(toks))
        for term, tf in Counter(toks).items():
            postings.setdefault(term, []).append((d, tf))
    n = len(corpus)
    avgdl = sum(doc_lengths) / n if n else 0.0
    return InvertedIndex(
        postings=postings, doc_lengths=doc_lengths, avgdl=avgdl, N=n,
        doc_ids=corpus.passage_ids,
    )


def _idf(index: InvertedIndex, term: str) -> float:
    df = index.df(term)
    return math.log(1.0 + (index.N - df + 0.5) / (df + 0.5))


def _bm25_scores(
    index: InvertedIndex,
    term_weights: dict[str, float],
    k1: float,
    b: float,
) -> dict[int, float]:
    """Accumulate weighted Okapi term contributions over the postings."""
    scores: dict[int, float] = {}
    for term, weight in term_weights.items():
        plist = index.postings.get(term)
        if not plist or weight == 0.0:
            continue
        idf = _idf(index, term)
        for d, tf in plist:
            dl = index.doc_lengths[d]
            denom = tf + k1 * (1.0 - b + b * dl / index.avgdl)
            scores[d] = scores.get(d, 0.0) + weight * idf * tf * (k1 + 1.0) / denom
    return scores


def _to_ranked(index: InvertedIndex, scores: dict[int, float], k: int) -> RankedList:
    order = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))[:k]
    return RankedList(items=[(index.doc_ids[d], s) for d, s in order])


def bm25_search(
    index: InvertedIndex, query: str, k: int, k1: float = 1.5, b: float = 0.75
) -> RankedList:
    """Okapi BM25 ranking; bag-of-words, so duplicate query terms count twice.

    Only documents with a positive score appear; ties break by doc ordinal.
    """
    weights: dict[str, float] = {}
    for t in tokenize(query):
        weights[t] = weights.get(t, 0.0) + 1.0
    if not weights:
        return RankedList()
    return _to_ranked(index, _bm25_scores(index, weights, k1, b), k)


def rm3_search(
    index: InvertedIndex,
    query: str,
    k: int,
    fb_docs: int = 10,
    fb_terms: int = 10,
    lam: float = 0.5,
    k1: float = 1.5,
    b: float = 0.75,
) -> RankedList:
    """BM25 with RM3 pseudo-relevance feedback.

    A relevance model is estimated over the top fb_docs results with
    softmax-normalized retrieval scores; the fb_terms strongest non-query
    terms are appended, and the final pass scores query terms at
    lambda * likelihood and expansion terms at (1 - lambda) * relevance
    weight.  lambda = 1 or fb_terms = 0 reduce to plain BM25 ranking.
    """
    qtoks = tokenize(query)
    if not qtoks:
        return RankedList()
    first = bm25_search(index, query, max(fb_docs, k), k1=k1, b=b)
    feedback = first.items[:fb_docs]
    qcounts = Counter(qtoks)
    qml = {t: c / len(qtoks) for t, c in qcounts.items()}

    relevance: dict[str, float] = {}
    if feedback and fb_terms > 0:
        top_scores = [s for _, s in feedback]
        m = max(top_scores)
        exp_scores = [math.exp(s - m) for s in top_scores]
        z = sum(exp_scores)
        # accumulate P(t|d) * softmax(score(d)) over the feedback set
        for (pid, _), ds in zip(feedback, exp_scores):
            d = _ordinal_of(index, pid)
            dl = index.doc_lengths[d]
            if dl == 0:
                continue
            for term, tf in _doc_terms(index, d):
                relevance[term] = relevance.get(term, 0.0) + (tf / dl) * (ds / z)

    expansion = sorted(
        ((t, w) for t, w in relevance.items() if t not in qml),
        key=lambda kv: (-kv[1], kv[0]),
    )[:fb_terms]

    weights = {t: lam * w for t, w in qml.items()}
    for t, w in expansion:
        weights[t] = weights.get(t, 0.0) + (1.0 - lam) * w
    return _to_ranked(index, _bm25_scores(index, weights, k1, b), k)


def _ordinal_of(index: InvertedIndex, pid: str) -> int:
    # doc_ids is ordinal-aligned; build the reverse map lazily
    cache = getattr(index, "_ordinal_cache", None)
    if cache is None:
        cache = {pid: d for d, pid in enumerate(index.doc_ids)}
        index._ordinal_cache = cache  # type: ignore[attr-defined]
    return cache[pid]


def _doc_terms(index: InvertedIndex, d: int) -> list[tuple[str, int]]:
    # forward view of a document's terms; built lazily once per index
    fwd = getattr(index, "_forward_cache", None)
    if fwd is None:
        fwd = [[] for _ in range(index.N)]
        for term, plist in index.postings.items():
            for doc, tf in plist:
                fwd[doc].append((term, tf))
        index._forward_cache = fwd  # type: ignore[attr-defined]
    return fwd[d]


def two_step_search(
    index: InvertedIndex,
    query: str,
    k: int,
    passage_texts: list[str],
    k1_stage: int = 10,
    m_entities: int = 3,
    k1: float = 1.5,
    b: float = 0.75,
) -> RankedList:
    """Two-stage lexical routing with entity-based query expansion.

    Stage one retrieves k1_stage passages; capitalized-span entities are
    ranked by frequency within that set (ties lexicographic) and the top
    m_entities surfaces are appended to the query for the second pass.
    """
    if m_entities <= 0:
        return bm25_search(index, query, k, k1=k1, b=b)
    stage1 = bm25_search(index, query, k1_stage, k1=k1, b=b)
    if not stage1.items:
        return stage1

    counts: Counter[str] = Counter()
    for pid, _ in stage1.items:
        counts.update(extract_regex(passage_texts[_ordinal_of(index, pid)]))
    if not counts:
        return stage1.top(k)
    top_entities = [e for e, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:m_entities]]
    expanded = query + " " + " ".join(top_entities)
    return bm25_search(index, expanded, k, k1=k1, b=b)
