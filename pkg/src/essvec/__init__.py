"""essvec: unsupervised paragraph essence embeddings.

Paragraphs are represented by low-dimensional codes trained so that mixing
a paragraph's code with a corpus-background code reconstructs the
paragraph's word distribution under a KL criterion; a denoising variant
additionally reconstructs clean text from noisy input.  The package also
ships the evaluation stack: density-peaks extractive summarization,
ROUGE-1/2/L, a PCA baseline, a sentiment cross-validation harness, a
recognition-noise simulator, and a synthetic topic corpus generator.
"""

from .corpus import (BowVector, CorpusError, Document, EmptyBowError,
                     TokenizerConfig, Vocabulary, background_distribution,
                     bow, bow_from_tokens, bow_many, build_vocabulary,
                     load_corpus, save_corpus, tokenize)
from .dev import (DevArchitecture, DevModelParams, PairedExample,
                  dev_backward, dev_forward, dev_loss, dev_params_from_ev,
                  init_dev_params, train_dev)
from .ev import (EpochStats, EvArchitecture, EvModelParams, ForwardTrace,
                 TrainingConfig, TrainingDiverged, attention,
                 encode_background, encode_many, encode_paragraph,
                 ev_backward, ev_loss, forward, init_ev_params, train_ev)
from .model_io import (ModelFormatError, load_embeddings, load_ev,
                       load_model, save_embeddings, save_history,
                       save_model)
from .numerics.dense import DegenerateDistributionError
from .rouge import RougeScore, rouge_all, rouge_l, rouge_n
from .summarize import (RankedSentence, SentenceUnit, SummaryBudget,
                        SummaryResult, density_peaks_rank, select_summary,
                        sentence_units, split_sentences,
                        summarize_document_set)

__version__ = "0.1.0"

__all__ = [
    "BowVector", "CorpusError", "Document", "EmptyBowError",
    "TokenizerConfig", "Vocabulary", "background_distribution", "bow",
    "bow_from_tokens", "bow_many", "build_vocabulary", "load_corpus",
    "save_corpus", "tokenize",
    "DevArchitecture", "DevModelParams", "PairedExample", "dev_backward",
    "dev_forward", "dev_loss", "dev_params_from_ev", "init_dev_params",
    "train_dev",
    "EpochStats", "EvArchitecture", "EvModelParams", "ForwardTrace",
    "TrainingConfig", "TrainingDiverged", "attention", "encode_background",
    "encode_many", "encode_paragraph", "ev_backward", "ev_loss", "forward",
    "init_ev_params", "train_ev",
    "ModelFormatError", "load_embeddings", "load_ev", "load_model",
    "save_embeddings", "save_history", "save_model",
    "DegenerateDistributionError",
    "RougeScore", "rouge_all", "rouge_l", "rouge_n",
    "RankedSentence", "SentenceUnit", "SummaryBudget", "SummaryResult",
    "density_peaks_rank", "select_summary", "sentence_units",
    "split_sentences", "summarize_document_set",
    "__version__",
]
