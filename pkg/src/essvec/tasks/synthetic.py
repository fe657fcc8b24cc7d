"""Synthetic topic corpus: a desk-scale substitute for licensed datasets.

Each topic owns a disjoint block of content words; every document mixes
its topic's block (uniform) with a shared Zipf-weighted background of
function words.  Gold topic labels come back alongside the documents, so
clustering-style metrics have ground truth.
"""

from dataclasses import dataclass

import numpy as np

from ..corpus import Document


@dataclass(frozen=True)
class SyntheticCorpus:
    documents: list
    labels: list          # gold topic id per document
    num_topics: int
    background_words: list
    topic_words: list     # one word list per topic


def make_synthetic_topic_corpus(num_topics, docs_per_topic, doc_length,
                                vocab_size, background_mass, seed):
    """Generate documents from a topic-block + background mixture.

    Half of the vocabulary (split evenly) forms the topic blocks; the rest
    is background drawn with probability ``background_mass`` per token,
    Zipf-weighted so a few function words dominate, as in real text.
    """
    if num_topics < 1 or docs_per_topic < 1 or doc_length < 1:
        raise ValueError("num_topics, docs_per_topic, and doc_length must "
                         "be positive")
    if not 0.0 <= background_mass < 1.0:
        raise ValueError("background_mass must lie in [0, 1)")
    content_per_topic = vocab_size // (2 * num_topics)
    if content_per_topic < 1:
        raise ValueError(f"vocab_size {vocab_size} too small for "
                         f"{num_topics} topics")
    n_background = vocab_size - num_topics * content_per_topic
    background_words = [f"bg{r:04d}" for r in range(n_background)]
    zipf = 1.0 / np.arange(1, n_background + 1)
    zipf /= zipf.sum()
    topic_words = [[f"t{t:02d}w{j:04d}" for j in range(content_per_topic)]
                   for t in range(num_topics)]
    rng = np.random.default_rng(seed)
    documents = []
    labels = []
    for t in range(num_topics):
        block = topic_words[t]
        for d in range(docs_per_topic):
            tokens = []
            for _ in range(doc_length):
                if rng.random() < background_mass:
                    tokens.append(
                        background_words[int(rng.choice(n_background,
                                                        p=zipf))])
                else:
                    tokens.append(block[int(rng.integers(
                        content_per_topic))])
            documents.append(Document(id=f"t{t:02d}-d{d:03d}",
                                      text=" ".join(tokens)))
            labels.append(t)
    return SyntheticCorpus(documents=documents, labels=labels,
                           num_topics=num_topics,
                           background_words=background_words,
                           topic_words=topic_words)


def nearest_centroid_accuracy(vectors, labels, metric="cosine"):
    """Fraction of vectors nearest (cosine or euclidean) to their own
    class centroid.  A simple purity score for embedding quality."""
    x = np.asarray(vectors, dtype=np.float64)
    y = np.asarray(labels)
    classes = np.unique(y)
    centroids = np.stack([x[y == c].mean(axis=0) for c in classes])
    if metric == "cosine":
        xn = np.linalg.norm(x, axis=1, keepdims=True)
        cn = np.linalg.norm(centroids, axis=1, keepdims=True)
        if np.any(xn == 0.0) or np.any(cn == 0.0):
            raise ValueError("zero-norm vector under the cosine metric")
        scores = (x / xn) @ (centroids / cn).T
        assigned = classes[np.argmax(scores, axis=1)]
    elif metric == "euclidean":
        d2 = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        assigned = classes[np.argmin(d2, axis=1)]
    else:
        raise ValueError("metric must be 'cosine' or 'euclidean'")
    return float(np.mean(assigned == y))
