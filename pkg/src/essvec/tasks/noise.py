"""Recognition-noise simulator: stand-in for real speech transcripts.

Each token is independently corrupted with probability ``wer``: usually
substituted by a vocabulary word drawn from the corpus word distribution,
sometimes deleted, sometimes duplicated-with-substitution (a cheap proxy
for insertions).  The clean text rides along untouched so noisy/clean
training pairs can be built downstream.
"""

import logging
from dataclasses import dataclass

import numpy as np

from ..corpus import Document, EmptyBowError, bow_from_tokens, tokenize
from ..dev import PairedExample

log = logging.getLogger(__name__)

P_SUBSTITUTE = 0.8
P_DELETE = 0.1


@dataclass(frozen=True)
class NoiseStats:
    total_tokens: int
    corrupted: int
    substitutions: int
    deletions: int
    insertions: int


def _vocab_sampler(vocab):
    counts = np.array([vocab.counts[w] for w in vocab.words],
                      dtype=np.float64)
    return vocab.words, counts / counts.sum()


def simulate_recognition_noise(doc, vocab, wer, seed, config=None,
                               return_stats=False):
    """Corrupt one document's tokens at the given word error rate.

    Substituted and inserted words are sampled from the vocabulary's count
    distribution, so noise looks like common words, not uniform static.
    Returns a document whose ``text`` is the noisy token stream and whose
    ``clean_text`` is the original text, byte for byte.
    """
    if not 0.0 <= wer < 1.0:
        raise ValueError("wer must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    words, probs = _vocab_sampler(vocab)
    tokens = tokenize(doc.text, config)
    if not tokens:
        result = Document(id=doc.id, text=doc.text, clean_text=doc.text)
        stats = NoiseStats(0, 0, 0, 0, 0)
        return (result, stats) if return_stats else result
    noisy = []
    n_sub = n_del = n_ins = 0
    for token in tokens:
        if rng.random() >= wer:
            noisy.append(token)
            continue
        kind = rng.random()
        if kind < P_SUBSTITUTE:
            noisy.append(words[int(rng.choice(len(words), p=probs))])
            n_sub += 1
        elif kind < P_SUBSTITUTE + P_DELETE:
            n_del += 1
        else:
            noisy.append(token)
            noisy.append(words[int(rng.choice(len(words), p=probs))])
            n_ins += 1
    if not noisy:
        # every token was deleted; keep one so the document stays valid
        noisy = [tokens[0]]
        n_del -= 1
        log.warning("%s: noise deleted every token; kept the first",
                    doc.id)
    result = Document(id=doc.id, text=" ".join(noisy),
                      clean_text=doc.text)
    if not return_stats:
        return result
    return result, NoiseStats(total_tokens=len(tokens),
                              corrupted=n_sub + n_del + n_ins,
                              substitutions=n_sub, deletions=n_del,
                              insertions=n_ins)


def make_noisy_pairs(docs, vocab, wer, seed, config=None):
    """Noisy documents plus the noisy/clean distribution pairs.

    Per-document seeds are derived from (seed, position), so the output
    does not depend on traversal order.  Documents whose noisy or clean
    side has no in-vocabulary token are dropped with a warning.
    """
    noisy_docs = []
    pairs = []
    for i, doc in enumerate(docs):
        doc_seed = int(np.random.SeedSequence([seed, i]).generate_state(1)[0])
        noisy_doc = simulate_recognition_noise(doc, vocab, wer, doc_seed,
                                               config)
        noisy_docs.append(noisy_doc)
        try:
            noisy_bow = bow_from_tokens(tokenize(noisy_doc.text, config),
                                        vocab)
            clean_bow = bow_from_tokens(tokenize(doc.text, config), vocab)
        except EmptyBowError:
            log.warning("%s: no in-vocabulary tokens on one side; pair "
                        "dropped", doc.id)
            continue
        pairs.append(PairedExample(noisy=noisy_bow, clean=clean_bow))
    return noisy_docs, pairs
