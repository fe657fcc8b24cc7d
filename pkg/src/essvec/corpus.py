"""Corpus ingestion: documents, vocabulary building, and unit-sum
bag-of-words distributions.

No stopword filtering happens here on purpose: the embedding model is
supposed to learn to suppress high-frequency background words itself, so
pre-filtering them would confound the whole exercise.
"""

import json
import re
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

DEFAULT_TOKEN_PATTERN = r"[^\W_]+"  # maximal runs of unicode alphanumerics


class CorpusError(ValueError):
    """Malformed corpus input."""


class EmptyBowError(CorpusError):
    """A document had no in-vocabulary tokens; callers may skip it."""


@dataclass
class Document:
    """One raw paragraph; ``clean_text`` holds the manual-transcript
    counterpart for noisy/clean training pairs."""

    id: str
    text: str
    clean_text: str = None

    def __post_init__(self):
        if not self.id:
            raise CorpusError("document id must be non-empty")
        if not self.text or not self.text.strip():
            raise CorpusError(f"document {self.id!r} has empty text")


@dataclass(frozen=True)
class TokenizerConfig:
    lowercase: bool = True
    token_pattern: str = DEFAULT_TOKEN_PATTERN


_DEFAULT_TOKENIZER = TokenizerConfig()
_PATTERN_CACHE = {}


def tokenize(text, config=None):
    """Lowercase and split on non-alphanumeric boundaries.

    No stopword removal, by design.  Empty input yields an empty list.
    """
    config = config or _DEFAULT_TOKENIZER
    pattern = _PATTERN_CACHE.get(config.token_pattern)
    if pattern is None:
        pattern = re.compile(config.token_pattern, re.UNICODE)
        _PATTERN_CACHE[config.token_pattern] = pattern
    if config.lowercase:
        text = text.lower()
    return pattern.findall(text)


@dataclass
class Vocabulary:
    """Word <-> index map with corpus frequencies; positions are 0..|V|-1."""

    words: list
    counts: dict
    index: dict = field(init=False)

    def __post_init__(self):
        self.index = {w: i for i, w in enumerate(self.words)}
        if len(self.index) != len(self.words):
            raise CorpusError("vocabulary contains duplicate words")
        missing = [w for w in self.words if w not in self.counts]
        if missing:
            raise CorpusError(f"missing counts for {missing[:3]}...")

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return word in self.index

    def save(self, path):
        """One ``word<TAB>count`` line per word, in index order."""
        with open(path, "w", encoding="utf-8") as fh:
            for w in self.words:
                fh.write(f"{w}\t{self.counts[w]}\n")

    @classmethod
    def load(cls, path):
        words, counts = [], {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                try:
                    word, count = line.split("\t")
                    counts[word] = int(count)
                except ValueError as exc:
                    raise CorpusError(
                        f"{path}: line {lineno}: expected 'word<TAB>count', "
                        f"got {line!r}") from exc
                words.append(word)
        if not words:
            raise CorpusError(f"{path}: empty vocabulary file")
        return cls(words=words, counts=counts)


def build_vocabulary(docs, max_size=20000, min_count=2, config=None,
                     include_clean=True):
    """The ``max_size`` most frequent tokens with frequency >= ``min_count``.

    Ties are broken lexicographically so two runs over the same corpus give
    byte-identical vocabularies.  ``include_clean`` also counts tokens from
    the clean side of noisy/clean document pairs.
    """
    if not docs:
        raise CorpusError("cannot build a vocabulary from an empty corpus")
    counts = Counter()
    for doc in docs:
        counts.update(tokenize(doc.text, config))
        if include_clean and doc.clean_text is not None:
            counts.update(tokenize(doc.clean_text, config))
    kept = [(w, c) for w, c in counts.items() if c >= min_count]
    if not kept:
        raise CorpusError(
            f"no token reaches min_count={min_count}; corpus too small?")
    kept.sort(key=lambda wc: (-wc[1], wc[0]))
    kept = kept[:max_size]
    return Vocabulary(words=[w for w, _ in kept],
                      counts={w: c for w, c in kept})


@dataclass(frozen=True)
class BowVector:
    """Sparse unit-sum distribution over the vocabulary.

    ``indices`` are strictly increasing int64 positions < ``dim``;
    ``weights`` are strictly positive and sum to 1 within 1e-9.
    """

    indices: np.ndarray
    weights: np.ndarray
    dim: int

    def __post_init__(self):
        idx = np.ascontiguousarray(self.indices, dtype=np.int64)
        w = np.ascontiguousarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "weights", w)
        if idx.shape != w.shape or idx.ndim != 1:
            raise CorpusError("indices and weights must be parallel 1-D arrays")
        if idx.size == 0:
            raise CorpusError("a BowVector must have at least one entry")
        if idx[0] < 0 or idx[-1] >= self.dim:
            raise CorpusError("indices must lie in [0, dim)")
        if idx.size > 1 and not np.all(np.diff(idx) > 0):
            raise CorpusError("indices must be strictly increasing")
        if np.any(w <= 0.0):
            raise CorpusError("weights must be strictly positive")
        if abs(float(w.sum()) - 1.0) > 1e-9:
            raise CorpusError(f"weights sum to {w.sum()!r}, not 1")
        idx.setflags(write=False)
        w.setflags(write=False)

    @classmethod
    def from_counts(cls, index_counts, dim):
        """Normalize a {index: count} mapping into a distribution."""
        if not index_counts:
            raise EmptyBowError("no in-vocabulary tokens")
        indices = np.array(sorted(index_counts), dtype=np.int64)
        raw = np.array([float(index_counts[i]) for i in indices])
        return cls(indices=indices, weights=raw / raw.sum(), dim=dim)

    def to_dense(self):
        dense = np.zeros(self.dim)
        dense[self.indices] = self.weights
        return dense

    def entries(self):
        """Iterate (word index, weight) pairs."""
        return zip(self.indices.tolist(), self.weights.tolist())


def bow_from_tokens(tokens, vocab):
    """Unit-sum frequency distribution of the in-vocabulary tokens."""
    index = vocab.index
    counts = Counter(index[t] for t in tokens if t in index)
    if not counts:
        raise EmptyBowError("no in-vocabulary tokens")
    return BowVector.from_counts(counts, dim=len(vocab))


def bow(doc, vocab, config=None):
    """Bag-of-words distribution of a document's ``text``.

    Out-of-vocabulary tokens are dropped before normalization; a document
    with no in-vocabulary tokens raises :class:`EmptyBowError`.
    """
    if not len(vocab):
        raise CorpusError("empty vocabulary")
    try:
        return bow_from_tokens(tokenize(doc.text, config), vocab)
    except EmptyBowError:
        raise EmptyBowError(
            f"document {doc.id!r} has no in-vocabulary tokens") from None


def background_distribution(docs, vocab, config=None):
    """Pooled frequency counts over all documents, normalized to unit-sum.

    Equals ``bow`` applied to the concatenation of all documents.
    """
    if not docs:
        raise CorpusError("cannot pool an empty corpus")
    index = vocab.index
    counts = Counter()
    for doc in docs:
        counts.update(index[t] for t in tokenize(doc.text, config)
                      if t in index)
    if not counts:
        raise EmptyBowError("no in-vocabulary tokens in the whole corpus")
    return BowVector.from_counts(counts, dim=len(vocab))


def bow_many(docs, vocab, config=None, skip_empty=False, threads=1):
    """BoW vectors for a document list, preserving order.

    With ``skip_empty`` documents without in-vocabulary tokens are dropped
    (their ids are returned separately); otherwise they raise.  Documents
    are independent, so ``threads > 1`` fans the work out and reassembles
    results in input order.
    """

    def one(doc):
        try:
            return bow(doc, vocab, config)
        except EmptyBowError:
            if skip_empty:
                return None
            raise

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, docs))
    else:
        results = [one(d) for d in docs]
    vectors, skipped = [], []
    for doc, vec in zip(docs, results):
        if vec is None:
            skipped.append(doc.id)
        else:
            vectors.append(vec)
    return vectors, skipped


def load_corpus(path):
    """Read a JSONL corpus: one ``{"id", "text"[, "clean"]}`` object per line.

    Raises :class:`CorpusError` with the line number for malformed records
    and for duplicate ids.
    """
    docs = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}: line {lineno}: invalid JSON "
                                  f"({exc.msg})") from exc
            if not isinstance(record, dict):
                raise CorpusError(f"{path}: line {lineno}: expected an object")
            try:
                doc = Document(id=str(record["id"]), text=record["text"],
                               clean_text=record.get("clean"))
            except KeyError as exc:
                raise CorpusError(f"{path}: line {lineno}: missing field "
                                  f"{exc.args[0]!r}") from exc
            except CorpusError as exc:
                raise CorpusError(f"{path}: line {lineno}: {exc}") from exc
            if doc.id in seen:
                raise CorpusError(f"{path}: line {lineno}: duplicate id "
                                  f"{doc.id!r}")
            seen.add(doc.id)
            docs.append(doc)
    if not docs:
        raise CorpusError(f"{path}: empty corpus")
    return docs


def save_corpus(path, docs):
    """Write documents as JSONL (the inverse of :func:`load_corpus`)."""
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            record = {"id": doc.id, "text": doc.text}
            if doc.clean_text is not None:
                record["clean"] = doc.clean_text
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
