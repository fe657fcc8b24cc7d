"""Extractive summarization: rank sentences by density peaks, select
greedily under a budget.

Each sentence is embedded, and pairwise similarity is the cosine shifted
to [0, 1].  A sentence's density is its average similarity to all others
(relevance); its separation is the dissimilarity to the nearest denser
sentence (non-redundancy).  The product ranks sentences in one pass: a
duplicate of a denser sentence gets separation ~0 and drops to the bottom.
"""

import logging
import math
import re
from dataclasses import dataclass

import numpy as np

from .corpus import EmptyBowError, bow_from_tokens, tokenize
from .ev import encode_paragraph

log = logging.getLogger(__name__)

BUDGET_KINDS = ("words", "bytes", "ratio")


@dataclass(frozen=True)
class SentenceUnit:
    """One sentence with everything ranking and budgeting need."""

    doc_id: str
    index: int
    text: str
    tokens: tuple
    embedding: np.ndarray
    length_words: int
    length_bytes: int


@dataclass(frozen=True)
class SummaryBudget:
    """Summary length cap: a word count, byte count, or fraction of the
    input length in words."""

    kind: str
    limit: float

    def __post_init__(self):
        if self.kind not in BUDGET_KINDS:
            raise ValueError(f"budget kind must be one of {BUDGET_KINDS}")
        if self.limit <= 0:
            raise ValueError("budget limit must be positive")
        if self.kind == "ratio" and self.limit > 1.0:
            raise ValueError("a ratio budget must lie in (0, 1]")


@dataclass(frozen=True)
class RankedSentence:
    sentence: SentenceUnit
    rho: float
    delta: float
    score: float
    input_pos: int


def split_sentences(text, terminators=".!?"):
    """Split on terminal punctuation followed by whitespace."""
    pattern = rf"(?<=[{re.escape(terminators)}])\s+"
    return [part for part in re.split(pattern, text) if part.strip()]


def _similarity_matrix(embeddings):
    norms = np.linalg.norm(embeddings, axis=1)
    if np.any(norms == 0.0):
        raise ValueError("zero-norm embedding in ranking input")
    unit = embeddings / norms[:, None]
    n = len(unit)
    sim = np.ones((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            cos = min(1.0, max(-1.0, float(np.dot(unit[i], unit[j]))))
            sim[i, j] = sim[j, i] = 0.5 * (cos + 1.0)
    return sim


def density_peaks_rank(sentences):
    """Score sentences by density x separation; highest first.

    Density ties are ordered by input position (earlier counts as denser),
    which makes exact duplicates rank behind their first occurrence.  Final
    ordering ties break by in-document position, then input position.  A
    single sentence scores 1 by convention.
    """
    if not sentences:
        raise ValueError("no sentences to rank")
    n = len(sentences)
    if n == 1:
        return [RankedSentence(sentences[0], rho=1.0, delta=1.0, score=1.0,
                               input_pos=0)]
    embeddings = np.stack([s.embedding for s in sentences])
    sim = _similarity_matrix(embeddings)
    # fsum makes equal similarity multisets yield bitwise-equal densities,
    # so duplicate sentences tie exactly and the positional rule decides.
    rho = np.array([(math.fsum(sim[i]) - 1.0) / (n - 1) for i in range(n)])
    density_order = sorted(range(n), key=lambda i: (-rho[i], i))
    delta = np.empty(n)
    for rank_pos, i in enumerate(density_order):
        if rank_pos == 0:
            continue
        delta[i] = min(1.0 - sim[i, j]
                       for j in density_order[:rank_pos])
    top = density_order[0]
    delta[top] = max(delta[i] for i in density_order[1:])
    ranked = [RankedSentence(sentences[i], rho=float(rho[i]),
                             delta=float(delta[i]),
                             score=float(rho[i] * delta[i]), input_pos=i)
              for i in range(n)]
    ranked.sort(key=lambda r: (-r.score, r.sentence.index, r.input_pos))
    return ranked


def _budget_in_units(ranked, budget):
    if budget.kind == "bytes":
        return int(budget.limit), lambda r: r.sentence.length_bytes
    if budget.kind == "words":
        return int(budget.limit), lambda r: r.sentence.length_words
    total = sum(r.sentence.length_words for r in ranked)
    return int(budget.limit * total), lambda r: r.sentence.length_words


def select_summary(ranked, budget):
    """Greedy selection in score order; anything that would overflow the
    budget is skipped.  Output keeps the original document order."""
    if not ranked:
        raise ValueError("nothing to select from")
    limit, measure = _budget_in_units(ranked, budget)
    chosen = []
    used = 0
    for r in ranked:
        cost = measure(r)
        if used + cost <= limit:
            chosen.append(r)
            used += cost
    if not chosen:
        log.warning("budget %s %s admits no sentence; summary is empty",
                    budget.kind, budget.limit)
    chosen.sort(key=lambda r: r.input_pos)
    return [r.sentence for r in chosen]


@dataclass
class SummaryResult:
    summary: str
    selected: list
    ranking: list


def sentence_units(docs, model, vocab, config=None, terminators=".!?"):
    """Split, tokenize, and embed every sentence of every document.

    Sentences with no in-vocabulary token cannot be embedded and are
    dropped with a warning.
    """
    units = []
    skipped = 0
    for doc in docs:
        for index, text in enumerate(split_sentences(doc.text,
                                                     terminators)):
            tokens = tokenize(text, config)
            try:
                bow = bow_from_tokens(tokens, vocab)
            except EmptyBowError:
                skipped += 1
                log.warning("%s sentence %d has no in-vocabulary tokens; "
                            "skipped", doc.id, index)
                continue
            units.append(SentenceUnit(
                doc_id=doc.id, index=index, text=text, tokens=tuple(tokens),
                embedding=encode_paragraph(model, bow),
                length_words=len(tokens),
                length_bytes=len(text.encode("utf-8"))))
    return units, skipped


def summarize_document_set(docs, model, vocab, budget, config=None,
                           terminators=".!?"):
    """Embed, rank, and select sentences from a group of documents."""
    units, _ = sentence_units(docs, model, vocab, config, terminators)
    if not units:
        raise ValueError("no embeddable sentences in the document set")
    ranking = density_peaks_rank(units)
    selected_units = select_summary(ranking, budget)
    selected_keys = {(u.doc_id, u.index) for u in selected_units}
    selected = [r for r in ranking
                if (r.sentence.doc_id, r.sentence.index) in selected_keys]
    selected.sort(key=lambda r: r.input_pos)
    return SummaryResult(
        summary=" ".join(u.text for u in selected_units),
        selected=selected, ranking=ranking)
