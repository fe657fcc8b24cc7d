"""ROUGE-1/2/L in F-score form, for token lists.

Overlap counts are multiset-clipped (a candidate n-gram is credited at
most as often as it appears in the reference).  With several references,
precision and recall are arithmetic means across references and F is
recomputed from the means; a best-reference mode exists for sensitivity
checks.
"""

from collections import Counter
from dataclasses import dataclass

VARIANTS = ("rouge1", "rouge2", "rougeL")
AGGREGATES = ("mean", "max")


@dataclass(frozen=True)
class RougeScore:
    variant: str
    precision: float
    recall: float
    f: float

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        for name in ("precision", "recall", "f"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} = {v} outside [0, 1]")

    @classmethod
    def from_pr(cls, variant, precision, recall):
        return cls(variant, precision, recall,
                   f_measure(precision, recall))


def f_measure(precision, recall):
    """Harmonic mean; 0 when both components vanish."""
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def ngram_counts(tokens, n):
    return Counter(tuple(tokens[i:i + n])
                   for i in range(len(tokens) - n + 1))


def clipped_overlap(candidate_counts, reference_counts):
    """Total candidate n-grams credited, each clipped by its reference
    count."""
    return sum(min(count, reference_counts[gram])
               for gram, count in candidate_counts.items()
               if gram in reference_counts)


def lcs_length(a, b):
    """Longest common subsequence length by the classic quadratic table."""
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y
                       else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def _aggregate(variant, per_reference, aggregate):
    if aggregate == "mean":
        precision = sum(p for p, _ in per_reference) / len(per_reference)
        recall = sum(r for _, r in per_reference) / len(per_reference)
        return RougeScore.from_pr(variant, precision, recall)
    if aggregate == "max":
        best = max(per_reference,
                   key=lambda pr: f_measure(pr[0], pr[1]))
        return RougeScore.from_pr(variant, best[0], best[1])
    raise ValueError(f"aggregate must be one of {AGGREGATES}")


def rouge_n(candidate, references, n, aggregate="mean"):
    """N-gram overlap score against one or more references.

    A reference shorter than ``n`` tokens contributes zeros; so does a
    candidate with no n-grams.
    """
    if n not in (1, 2):
        raise ValueError("n must be 1 or 2")
    if not references:
        raise ValueError("at least one reference is required")
    cand = ngram_counts(candidate, n)
    cand_total = sum(cand.values())
    per_reference = []
    for reference in references:
        ref = ngram_counts(reference, n)
        ref_total = sum(ref.values())
        if cand_total == 0 or ref_total == 0:
            per_reference.append((0.0, 0.0))
            continue
        overlap = clipped_overlap(cand, ref)
        per_reference.append((overlap / cand_total, overlap / ref_total))
    variant = "rouge1" if n == 1 else "rouge2"
    return _aggregate(variant, per_reference, aggregate)


def rouge_l(candidate, references, aggregate="mean"):
    """Longest-common-subsequence score against one or more references."""
    if not references:
        raise ValueError("at least one reference is required")
    per_reference = []
    for reference in references:
        if not candidate or not reference:
            per_reference.append((0.0, 0.0))
            continue
        lcs = lcs_length(candidate, reference)
        per_reference.append((lcs / len(candidate), lcs / len(reference)))
    return _aggregate("rougeL", per_reference, aggregate)


def rouge_all(candidate, references, aggregate="mean"):
    """All three variants at once, keyed by variant name."""
    return {
        "rouge1": rouge_n(candidate, references, 1, aggregate),
        "rouge2": rouge_n(candidate, references, 2, aggregate),
        "rougeL": rouge_l(candidate, references, aggregate),
    }
