"""Experiment harnesses: PCA baseline, sentiment cross-validation,
recognition-noise simulation, and the synthetic topic corpus."""

from .classify import (CrossValResult, FoldPlan, LabeledDocument,
                       LabeledExample, LinearClassifier,
                       LinearClassifierConfig, concat_features,
                       crossvalidate, fold_seed, linear_classifier_train,
                       load_labeled_dataset, make_fold_plan)
from .noise import NoiseStats, make_noisy_pairs, simulate_recognition_noise
from .pca import PcaModel, pca_fit, pca_reconstruct, pca_transform
from .synthetic import (SyntheticCorpus, make_synthetic_topic_corpus,
                        nearest_centroid_accuracy)

__all__ = [
    "CrossValResult", "FoldPlan", "LabeledDocument", "LabeledExample",
    "LinearClassifier", "LinearClassifierConfig", "concat_features",
    "crossvalidate", "fold_seed", "linear_classifier_train",
    "load_labeled_dataset", "make_fold_plan", "NoiseStats",
    "make_noisy_pairs", "simulate_recognition_noise", "PcaModel",
    "pca_fit", "pca_reconstruct", "pca_transform", "SyntheticCorpus",
    "make_synthetic_topic_corpus", "nearest_centroid_accuracy",
]
