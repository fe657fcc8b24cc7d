"""Binary sentiment harness: a hinge-loss linear classifier plus paired
k-fold cross-validation over interchangeable featurizers.

The same fold plan is reused for every featurizer so accuracy differences
are paired comparisons, and each fold's training run is seeded from
(seed, fold) so parallel and sequential execution agree.
"""

import json
import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

LABELS = ("pos", "neg")


@dataclass(frozen=True)
class LabeledExample:
    features: np.ndarray
    label: str

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}")


@dataclass(frozen=True)
class LabeledDocument:
    id: str
    text: str
    label: str

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}")


def load_labeled_dataset(path):
    """JSONL with one {"id", "text", "label"} object per line."""
    docs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                docs.append(LabeledDocument(id=str(obj["id"]),
                                            text=obj["text"],
                                            label=obj["label"]))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise ValueError(f"{path}: line {lineno}: {exc}") from exc
    return docs


def _signs(labels):
    return np.array([1.0 if lab == "pos" else -1.0 for lab in labels])


@dataclass(frozen=True)
class LinearClassifierConfig:
    seed: int
    epochs: int = 200
    learning_rate: float = 0.05
    l2: float = 1e-4


@dataclass
class LinearClassifier:
    weights: np.ndarray
    bias: float

    def decision_function(self, x):
        return np.asarray(x, dtype=np.float64) @ self.weights + self.bias

    def predict(self, x):
        scores = np.atleast_1d(self.decision_function(x))
        return ["pos" if s >= 0 else "neg" for s in scores]

    def accuracy(self, features, labels):
        predicted = self.predict(features)
        return float(np.mean([p == t for p, t in zip(predicted, labels,
                                                     strict=True)]))


def linear_classifier_train(examples, config):
    """Subgradient descent on L2-regularized hinge loss.

    Shuffled per epoch from the config seed, with a 1/sqrt(t) step decay.
    """
    if not examples:
        raise ValueError("no training examples")
    labels = {e.label for e in examples}
    if len(labels) < 2:
        raise ValueError(f"training data contains only {labels.pop()!r} "
                         "examples; both classes are required")
    x = np.stack([np.asarray(e.features, dtype=np.float64)
                  for e in examples])
    y = _signs([e.label for e in examples])
    n, d = x.shape
    rng = np.random.default_rng(config.seed)
    w = np.zeros(d)
    b = 0.0
    t = 0
    for _ in range(config.epochs):
        for i in rng.permutation(n):
            t += 1
            lr = config.learning_rate / np.sqrt(t)
            margin = y[i] * (x[i] @ w + b)
            w *= 1.0 - lr * config.l2
            if margin < 1.0:
                w += lr * y[i] * x[i]
                b += lr * y[i]
    return LinearClassifier(weights=w, bias=float(b))


@dataclass(frozen=True)
class FoldPlan:
    """Shuffled assignment of examples to folds, sizes within one."""

    k: int
    assignments: np.ndarray
    seed: int

    def __post_init__(self):
        counts = np.bincount(self.assignments, minlength=self.k)
        if counts.max() - counts.min() > 1:
            raise ValueError("fold sizes differ by more than one")

    def fold_indices(self, fold):
        return np.flatnonzero(self.assignments == fold)


def make_fold_plan(n, k, seed):
    if not 2 <= k <= n:
        raise ValueError(f"k = {k} must lie in [2, n = {n}]")
    perm = np.random.default_rng(seed).permutation(n)
    assignments = np.empty(n, dtype=np.int64)
    assignments[perm] = np.arange(n) % k
    return FoldPlan(k=k, assignments=assignments, seed=seed)


def fold_seed(seed, fold):
    """Stable per-fold training seed derived from (seed, fold)."""
    return int(np.random.SeedSequence([seed, fold]).generate_state(1)[0])


@dataclass
class CrossValResult:
    plan: FoldPlan
    names: list
    fold_accuracies: dict  # name -> list of per-fold accuracy
    means: dict            # name -> mean accuracy

    def as_tsv(self):
        lines = ["featurizer\t" +
                 "\t".join(f"fold{f}" for f in range(self.plan.k)) +
                 "\tmean"]
        for name in self.names:
            accs = self.fold_accuracies[name]
            lines.append(name + "\t" +
                         "\t".join(f"{a:.4f}" for a in accs) +
                         f"\t{self.means[name]:.4f}")
        return "\n".join(lines) + "\n"


def concat_features(*featurizers):
    """Featurizer concatenating the outputs of several featurizers."""
    def combined(text):
        return np.concatenate([np.asarray(fn(text), dtype=np.float64)
                               for fn in featurizers])
    return combined


def crossvalidate(dataset, featurizers, k, seed, classifier_config=None):
    """Paired k-fold comparison of featurizers on one labeled dataset.

    ``featurizers`` is a list of (name, text -> vector) pairs.  Every
    featurizer sees the identical fold plan.
    """
    if not dataset:
        raise ValueError("empty dataset")
    labels = [doc.label for doc in dataset]
    for label in LABELS:
        if sum(lab == label for lab in labels) < 2:
            raise ValueError(f"need at least two {label!r} examples")
    plan = make_fold_plan(len(dataset), k, seed)
    names = [name for name, _ in featurizers]
    if len(set(names)) != len(names):
        raise ValueError("featurizer names must be unique")
    fold_accuracies = {}
    for name, fn in featurizers:
        features = np.stack([np.asarray(fn(doc.text), dtype=np.float64)
                             for doc in dataset])
        accs = []
        for fold in range(k):
            test_mask = plan.assignments == fold
            train = [LabeledExample(features[i], labels[i])
                     for i in np.flatnonzero(~test_mask)]
            config = classifier_config or LinearClassifierConfig(seed=0)
            config = LinearClassifierConfig(
                seed=fold_seed(seed, fold), epochs=config.epochs,
                learning_rate=config.learning_rate, l2=config.l2)
            clf = linear_classifier_train(train, config)
            test_idx = np.flatnonzero(test_mask)
            accs.append(clf.accuracy(features[test_idx],
                                     [labels[i] for i in test_idx]))
        fold_accuracies[name] = accs
        log.info("featurizer %s: mean accuracy %.4f", name,
                 float(np.mean(accs)))
    means = {name: float(np.mean(acc))
             for name, acc in fold_accuracies.items()}
    return CrossValResult(plan=plan, names=names,
                          fold_accuracies=fold_accuracies, means=means)
