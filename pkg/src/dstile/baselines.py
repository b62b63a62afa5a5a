"""Comparison selectors: uniform random, edit-distance similarity, Okapi
BM25 relevance, and k-means diversity over spec embeddings.

Every selector returns a :class:`~dstile.selection.SelectionResult` whose
tiling ratio is reported for analysis but never optimized.
"""

from __future__ import annotations

import math
import os
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from dstile import kernels
from dstile.components import ComponentSet, tokenize, weighted_intersection
from dstile.errors import SelectionError
from dstile.selection import SelectionResult

# Conventional Okapi defaults; the scoring formula below is the +1-smoothed
# IDF variant so scores stay non-negative.
BM25_K1 = 1.5
BM25_B = 0.75


def levenshtein(a: str, b: str) -> int:
    """Unit-cost character edit distance (kernel-backed)."""
    return kernels.levenshtein(a, b)


def _result(
    chosen: Sequence[int],
    db_components: Sequence[ComponentSet] | None,
    query_components: ComponentSet | None,
    strategy: str,
) -> SelectionResult:
    covered = 0
    total = 0
    ratio = 0.0
    if db_components is not None and query_components is not None:
        total = query_components.weighted_size()
        covered = weighted_intersection(
            [db_components[i] for i in chosen], query_components
        )
        ratio = covered / total if total else 0.0
    return SelectionResult(
        chosen=list(chosen),
        gains=[],
        tiling_ratio=ratio,
        covered_weight=covered,
        query_weight=total,
        strategy=strategy,
    )


def select_random(
    n: int,
    k: int,
    seed: int,
    *,
    db_components: Sequence[ComponentSet] | None = None,
    query_components: ComponentSet | None = None,
) -> SelectionResult:
    """k distinct indices, uniform without replacement, fixed by ``seed``."""
    if k > n:
        raise SelectionError(f"cannot sample {k} from {n} exemplars")
    chosen = random.Random(seed).sample(range(n), k)
    return _result(chosen, db_components, query_components, "random")


def _top_k(keyed: list[tuple[float, int]], k: int) -> list[int]:
    # keyed holds (sort key, index); ties already resolved by index asc.
    keyed.sort()
    return [i for _, i in keyed[:k]]


def select_ldsim(
    db_specs: Sequence[str],
    query_spec: str,
    k: int,
    *,
    db_components: Sequence[ComponentSet] | None = None,
    query_components: ComponentSet | None = None,
) -> SelectionResult:
    """The k exemplars with smallest character edit distance to the query."""
    n = len(db_specs)
    if k > n:
        raise SelectionError(f"cannot select {k} from {n} exemplars")
    keyed = [(float(levenshtein(spec, query_spec)), i) for i, spec in enumerate(db_specs)]
    chosen = _top_k(keyed, k)
    return _result(chosen, db_components, query_components, "ldsim")


@dataclass
class Bm25Stats:
    """Corpus statistics for the Okapi BM25 scorer."""

    doc_freq: dict[str, int]
    doc_len: list[int]
    avg_doc_len: float
    n_docs: int
    k1: float = BM25_K1
    b: float = BM25_B
    term_freqs: list[Counter] = field(default_factory=list, repr=False)


def build_bm25_stats(
    db_specs: Sequence[str], k1: float = BM25_K1, b: float = BM25_B
) -> Bm25Stats:
    docs = [tokenize(spec) for spec in db_specs]
    doc_freq: dict[str, int] = {}
    for doc in docs:
        for term in set(doc):
            doc_freq[term] = doc_freq.get(term, 0) + 1
    doc_len = [len(doc) for doc in docs]
    avg = sum(doc_len) / len(docs) if docs else 0.0
    return Bm25Stats(
        doc_freq=doc_freq,
        doc_len=doc_len,
        avg_doc_len=avg,
        n_docs=len(docs),
        k1=k1,
        b=b,
        term_freqs=[Counter(doc) for doc in docs],
    )


def bm25_score(query_tokens: Sequence[str], doc_id: int, stats: Bm25Stats) -> float:
    """Okapi BM25 with IDF(t) = ln((N - df + 0.5)/(df + 0.5) + 1)."""
    if not 0 <= doc_id < stats.n_docs:
        raise IndexError(f"document {doc_id} out of range for {stats.n_docs} docs")
    tf = stats.term_freqs[doc_id]
    length = stats.doc_len[doc_id]
    norm = 1.0 - stats.b + stats.b * (length / stats.avg_doc_len if stats.avg_doc_len else 0.0)
    score = 0.0
    for term in query_tokens:
        f = tf.get(term, 0)
        if f == 0:
            continue
        df = stats.doc_freq.get(term, 0)
        idf = math.log((stats.n_docs - df + 0.5) / (df + 0.5) + 1.0)
        score += idf * (f * (stats.k1 + 1.0)) / (f + stats.k1 * norm)
    return score


def bm25_ranking(db_specs: Sequence[str], query_spec: str) -> list[int]:
    """All indices ordered by BM25 relevance descending, ties by index."""
    stats = build_bm25_stats(db_specs)
    query_tokens = tokenize(query_spec)
    keyed = [
        (-bm25_score(query_tokens, i, stats), i) for i in range(len(db_specs))
    ]
    return _top_k(keyed, len(db_specs))


def select_bm25(
    db_specs: Sequence[str],
    query_spec: str,
    k: int,
    *,
    db_components: Sequence[ComponentSet] | None = None,
    query_components: ComponentSet | None = None,
) -> SelectionResult:
    """Top-k exemplars by BM25 relevance to the query."""
    n = len(db_specs)
    if k > n:
        raise SelectionError(f"cannot select {k} from {n} exemplars")
    chosen = bm25_ranking(db_specs, query_spec)[:k]
    return _result(chosen, db_components, query_components, "bm25")


# ---------------------------------------------------------------------------
# Embedding providers


class TfidfProvider:
    """Default embedding provider: l2-normalized tf-idf over the corpus
    vocabulary, with smooth idf = ln((1 + N)/(1 + df)) + 1."""

    kind = "tfidf"

    def __init__(self, corpus_specs: Sequence[str]):
        docs = [tokenize(spec) for spec in corpus_specs]
        vocab = sorted({term for doc in docs for term in doc})
        self.vocab = {term: j for j, term in enumerate(vocab)}
        self.dimension = len(vocab)
        df = np.zeros(self.dimension)
        for doc in docs:
            for term in set(doc):
                df[self.vocab[term]] += 1
        n = len(docs)
        self.idf = np.log((1.0 + n) / (1.0 + df)) + 1.0

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dimension)
        for term, count in Counter(tokenize(text)).items():
            j = self.vocab.get(term)
            if j is not None:
                vec[j] = count
        vec *= self.idf
        norm = np.linalg.norm(vec)
        return vec / norm if norm > 0 else vec


class ServiceProvider:
    """Embeddings from an HTTP endpoint; auth token via environment variable."""

    kind = "external-service"

    def __init__(self, base_url: str, model: str, token_env: str = "DSTILE_API_KEY"):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.token_env = token_env
        self.dimension = -1  # discovered on first call

    def embed(self, text: str) -> np.ndarray:
        import httpx

        headers = {}
        token = os.environ.get(self.token_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        resp = httpx.post(
            f"{self.base_url}/embeddings",
            json={"model": self.model, "input": text},
            headers=headers,
            timeout=30.0,
        )
        resp.raise_for_status()
        vec = np.asarray(resp.json()["data"][0]["embedding"], dtype=float)
        self.dimension = len(vec)
        return vec


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def kmeans(
    points: np.ndarray,
    k: int,
    seed: int,
    *,
    max_iter: int = 100,
    tol: float = 1e-6,
) -> np.ndarray:
    """Seeded k-means with k-means++ init.  An emptied cluster is re-seeded
    from the point farthest from its assigned centroid.  Returns labels."""
    n = len(points)
    rng = np.random.default_rng(seed)

    centroids = np.empty((k, points.shape[1]))
    first = int(rng.integers(n))
    centroids[0] = points[first]
    dist2 = np.sum((points - centroids[0]) ** 2, axis=1)
    for j in range(1, k):
        total = dist2.sum()
        if total <= 0:
            centroids[j] = points[int(rng.integers(n))]
        else:
            centroids[j] = points[int(rng.choice(n, p=dist2 / total))]
        dist2 = np.minimum(dist2, np.sum((points - centroids[j]) ** 2, axis=1))

    labels = np.zeros(n, dtype=int)
    for _ in range(max_iter):
        sq = np.sum((points[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
        labels = np.argmin(sq, axis=1)
        new_centroids = centroids.copy()
        for j in range(k):
            members = points[labels == j]
            if len(members) > 0:
                new_centroids[j] = members.mean(axis=0)
            else:
                assigned = np.sqrt(np.min(sq, axis=1))
                new_centroids[j] = points[int(np.argmax(assigned))]
        movement = float(np.max(np.linalg.norm(new_centroids - centroids, axis=1)))
        centroids = new_centroids
        if movement < tol:
            break
    sq = np.sum((points[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
    return np.argmin(sq, axis=1)


def select_diversity(
    db_specs: Sequence[str],
    query_spec: str,
    k: int,
    provider=None,
    seed: int = 0,
    *,
    db_components: Sequence[ComponentSet] | None = None,
    query_components: ComponentSet | None = None,
) -> SelectionResult:
    """Cluster the database into k groups, then take each cluster's member
    most cosine-similar to the query; output ordered by cluster index."""
    n = len(db_specs)
    if k > n:
        raise SelectionError(f"cannot select {k} from {n} exemplars")
    if provider is None:
        provider = TfidfProvider(db_specs)
    embedded = np.stack([provider.embed(spec) for spec in db_specs])
    query_vec = provider.embed(query_spec)
    labels = kmeans(embedded, k, seed)
    chosen = []
    for cluster in range(k):
        members = [i for i in range(n) if labels[i] == cluster]
        if not members:
            continue
        best = max(members, key=lambda i: (_cosine(embedded[i], query_vec), -i))
        chosen.append(best)
    # A cluster can end empty after the final centroid update; pad with the
    # most query-similar leftovers so the selector always yields k picks.
    if len(chosen) < k:
        leftovers = [i for i in range(n) if i not in set(chosen)]
        leftovers.sort(key=lambda i: (-_cosine(embedded[i], query_vec), i))
        chosen.extend(leftovers[: k - len(chosen)])
    return _result(chosen, db_components, query_components, "diversity")


STRATEGIES = ("dst", "random", "ldsim", "bm25", "diversity")
