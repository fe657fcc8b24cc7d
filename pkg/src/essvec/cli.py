"""Command-line entry point.

One binary, subcommand style.  Every option can also come from a
``key = value`` config file (``--config``); explicit flags win.  Each run
writes its fully resolved configuration next to its outputs, so a run is
reproducible from that file alone, and removes partial outputs on failure.
Training and simulation commands refuse to run without a seed.
"""

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import model_io
from .checks import check_dev_gradients, check_ev_gradients, \
    toy_architecture
from .corpus import (CorpusError, EmptyBowError, Vocabulary,
                     background_distribution, bow, bow_from_tokens,
                     bow_many, build_vocabulary, load_corpus, save_corpus,
                     tokenize)
from .dev import DevArchitecture, PairedExample, train_dev
from .ev import (EvArchitecture, TrainingConfig, TrainingDiverged,
                 encode_paragraph, train_ev)
from .rouge import rouge_all
from .summarize import SummaryBudget, summarize_document_set
from .tasks.classify import (LinearClassifierConfig, concat_features,
                             crossvalidate, load_labeled_dataset)
from .tasks.noise import make_noisy_pairs
from .tasks.pca import pca_fit, pca_transform
from .tasks.synthetic import make_synthetic_topic_corpus

log = logging.getLogger(__name__)


def _widths(text):
    """Comma-separated hidden widths; empty or 'none' means no hidden."""
    text = str(text).strip()
    if not text or text.lower() == "none":
        return ()
    return tuple(int(part) for part in text.split(","))


def _bool(text):
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


class CliError(Exception):
    """User-facing failure with an actionable message."""


def parse_config_file(path):
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise CliError(f"{path}: line {lineno}: expected "
                               "'key = value'")
            key, _, value = line.partition("=")
            values[key.strip().replace("-", "_")] = value.strip()
    return values


class Command:
    """One subcommand: declared options plus a body.

    Options are declared once with their converter and default; the same
    declaration drives the argparse flags, the config-file parsing, and
    the resolved-config dump.
    """

    def __init__(self, name, help_text, body):
        self.name = name
        self.help_text = help_text
        self.body = body
        self.options = {}   # dest -> (converter, default, required)
        self.flags = []     # (flag, dest, converter, default, required,
                            #  help, is_bool)

    def add(self, flag, converter=str, default=None, required=False,
            help_text="", boolean=False):
        dest = flag.lstrip("-").replace("-", "_")
        self.options[dest] = (converter, default, required)
        self.flags.append((flag, dest, converter, help_text, boolean))
        return self

    def register(self, subparsers):
        parser = subparsers.add_parser(self.name, help=self.help_text)
        parser.add_argument("--config", default=None,
                            help="key = value config file; flags override")
        for flag, dest, converter, help_text, boolean in self.flags:
            if boolean:
                parser.add_argument(flag, dest=dest, default=None,
                                    action=argparse.BooleanOptionalAction,
                                    help=help_text)
            else:
                parser.add_argument(flag, dest=dest, default=None,
                                    type=str, help=help_text)
        parser.set_defaults(_command=self)

    def resolve(self, args):
        """defaults < config file < explicit flags, with validation."""
        resolved = {dest: default
                    for dest, (_, default, _) in self.options.items()}
        if args.config:
            for key, raw in parse_config_file(args.config).items():
                if key not in self.options:
                    raise CliError(f"{args.config}: unknown option "
                                   f"{key!r} for {self.name}")
                converter = self.options[key][0]
                try:
                    resolved[key] = converter(raw)
                except ValueError as exc:
                    raise CliError(f"{args.config}: {key}: {exc}") from exc
        for dest, (converter, _, _) in self.options.items():
            given = getattr(args, dest, None)
            if given is not None:
                resolved[dest] = given if isinstance(given, bool) \
                    else converter(given)
        for dest, (_, _, required) in self.options.items():
            if required and resolved[dest] is None:
                flag = "--" + dest.replace("_", "-")
                raise CliError(f"{self.name}: {flag} is required (flag or "
                               "config file)")
        return resolved


class RunContext:
    """Tracks files created by a run so failures can clean them up."""

    def __init__(self, command, resolved):
        self.command = command
        self.resolved = resolved
        self.created = []

    def open_out(self, path, mode="w"):
        self.created.append(path)
        return open(path, mode, encoding=None if "b" in mode else "utf-8")

    def track(self, path):
        self.created.append(path)
        return path

    def write_resolved_config(self, primary_output):
        path = primary_output + ".config"
        with self.open_out(path) as fh:
            fh.write(f"# resolved configuration: essvec {self.command}\n")
            for key in sorted(self.resolved):
                value = self.resolved[key]
                if value is None:
                    continue
                if isinstance(value, tuple):
                    value = ",".join(str(v) for v in value)
                fh.write(f"{key} = {value}\n")

    def discard_outputs(self):
        for path in self.created:
            try:
                os.remove(path)
            except OSError:
                pass


def _load_vocab(path):
    if not path:
        raise CliError("--vocab is required")
    return Vocabulary.load(path)


def _architecture(resolved, vocab, dev=False):
    common = dict(vocab_dim=len(vocab),
                  embedding_dim=resolved["embedding_dim"],
                  f_hidden=resolved["f_hidden"],
                  g_hidden=resolved["g_hidden"],
                  h_hidden=resolved["h_hidden"],
                  attention_floor=resolved["attention_floor"])
    if dev:
        return DevArchitecture(s_hidden=resolved["s_hidden"], **common)
    return EvArchitecture(**common)


def _training_config(resolved):
    return TrainingConfig(
        epochs=resolved["epochs"], seed=resolved["seed"],
        batch_size=resolved["batch_size"],
        learning_rate=resolved["learning_rate"],
        background_weight=resolved["background_weight"],
        shuffle=resolved["shuffle"])


def _background(resolved, docs, vocab):
    if resolved.get("background"):
        bg_docs = load_corpus(resolved["background"])
    else:
        bg_docs = docs
    return background_distribution(bg_docs, vocab)


# ---------------------------------------------------------------------------
# Command bodies
# ---------------------------------------------------------------------------

def run_build_vocab(ctx, r):
    docs = load_corpus(r["corpus"])
    vocab = build_vocabulary(docs, max_size=r["max_size"],
                             min_count=r["min_count"])
    if len(vocab) == 0:
        raise CliError("no word meets the vocabulary thresholds")
    vocab.save(ctx.track(r["out"]))
    ctx.write_resolved_config(r["out"])
    print(f"{len(vocab)} words -> {r['out']}")
    return 0


def run_train_ev(ctx, r):
    docs = load_corpus(r["corpus"])
    vocab = _load_vocab(r["vocab"])
    vectors, skipped = bow_many(docs, vocab, skip_empty=True)
    if skipped:
        log.warning("%d documents had no in-vocabulary tokens and were "
                    "dropped", len(skipped))
    if not vectors:
        raise CliError("no trainable documents after vocabulary filtering")
    p_bg = _background(r, docs, vocab)
    arch = _architecture(r, vocab)
    params, history = train_ev(vectors, p_bg, arch, _training_config(r))
    model_io.save_model(params, ctx.track(r["out"]))
    history_path = r["history"] or r["out"] + ".history.tsv"
    model_io.save_history(ctx.track(history_path), history)
    ctx.write_resolved_config(r["out"])
    print(f"trained {params.n_parameters()} parameters over "
          f"{r['epochs']} epochs -> {r['out']}")
    return 0


def run_train_dev(ctx, r):
    docs = load_corpus(r["corpus"])
    missing = [d.id for d in docs if d.clean_text is None]
    if missing:
        raise CliError(f"{len(missing)} documents lack the 'clean' field "
                       f"(first: {missing[0]!r}); train-dev needs "
                       "noisy/clean pairs")
    vocab = _load_vocab(r["vocab"])
    pairs = []
    dropped = 0
    for doc in docs:
        try:
            noisy = bow(doc, vocab)
            clean = bow(type(doc)(id=doc.id, text=doc.clean_text), vocab)
        except EmptyBowError:
            dropped += 1
            continue
        pairs.append(PairedExample(noisy=noisy, clean=clean))
    if dropped:
        log.warning("%d pairs dropped for having no in-vocabulary tokens",
                    dropped)
    if not pairs:
        raise CliError("no trainable pairs after vocabulary filtering")
    p_bg = _background(r, docs, vocab)
    arch = _architecture(r, vocab, dev=True)
    params, history = train_dev(pairs, p_bg, arch, _training_config(r))
    model_io.save_model(params, ctx.track(r["out"]))
    history_path = r["history"] or r["out"] + ".history.tsv"
    model_io.save_history(ctx.track(history_path), history)
    ctx.write_resolved_config(r["out"])
    print(f"trained {params.n_parameters()} parameters over "
          f"{r['epochs']} epochs -> {r['out']}")
    return 0


def run_encode(ctx, r):
    model = model_io.load_ev(r["model"])
    vocab = _load_vocab(r["vocab"])
    if len(vocab) != model.architecture.vocab_dim:
        raise CliError(f"vocabulary size {len(vocab)} does not match the "
                       f"model ({model.architecture.vocab_dim})")
    docs = load_corpus(r["corpus"])
    vectors, skipped = bow_many(docs, vocab, skip_empty=True,
                                threads=r["threads"])
    if skipped:
        log.warning("%d documents had no in-vocabulary tokens and were "
                    "skipped", len(skipped))
    kept = [d.id for d in docs if d.id not in set(skipped)]
    embeddings = [encode_paragraph(model, v) for v in vectors]
    model_io.save_embeddings(ctx.track(r["out"]), kept, embeddings)
    ctx.write_resolved_config(r["out"])
    print(f"{len(kept)} embeddings -> {r['out']}")
    return 0


def run_summarize(ctx, r):
    model = model_io.load_ev(r["model"])
    vocab = _load_vocab(r["vocab"])
    docs = {d.id: d for d in load_corpus(r["corpus"])}
    with open(r["manifest"], encoding="utf-8") as fh:
        manifest = json.load(fh)
    if not isinstance(manifest, dict) or not manifest:
        raise CliError(f"{r['manifest']}: expected a non-empty object "
                       "mapping cluster_id to document ids")
    budget = SummaryBudget(kind=r["budget_kind"], limit=r["budget_limit"])
    results = []
    for cluster_id in sorted(manifest):
        ids = manifest[cluster_id]
        unknown = [i for i in ids if i not in docs]
        if unknown:
            raise CliError(f"cluster {cluster_id!r} references unknown "
                           f"document {unknown[0]!r}")
        result = summarize_document_set([docs[i] for i in ids], model,
                                        vocab, budget)
        results.append({
            "cluster_id": cluster_id,
            "summary": result.summary,
            "sentences": [{
                "doc_id": s.sentence.doc_id, "index": s.sentence.index,
                "score": s.score, "rho": s.rho, "delta": s.delta,
            } for s in result.selected],
        })
    with ctx.open_out(r["out"]) as fh:
        json.dump(results, fh, ensure_ascii=False, indent=2)
        fh.write("\n")
    ctx.write_resolved_config(r["out"])
    print(f"{len(results)} cluster summaries -> {r['out']}")
    return 0


def _read_blocks(path):
    """Blank-line-separated text blocks, tokenized."""
    with open(path, encoding="utf-8") as fh:
        content = fh.read()
    blocks = [block for block in content.split("\n\n")
              if block.strip()]
    return [tokenize(block) for block in blocks]


def run_rouge(ctx, r):
    candidates = _read_blocks(r["candidate"])
    reference_files = [_read_blocks(p) for p in r["references"]]
    if not candidates:
        raise CliError(f"{r['candidate']}: no text blocks")
    for path, blocks in zip(r["references"], reference_files):
        if len(blocks) != len(candidates):
            raise CliError(f"{path}: {len(blocks)} blocks, expected "
                           f"{len(candidates)} (one per candidate)")
    totals = {v: np.zeros(3) for v in ("rouge1", "rouge2", "rougeL")}
    for i, cand in enumerate(candidates):
        refs = [blocks[i] for blocks in reference_files]
        for variant, score in rouge_all(cand, refs,
                                        aggregate=r["aggregate"]).items():
            totals[variant] += (score.precision, score.recall, score.f)
    lines = ["variant\tprecision\trecall\tf"]
    for variant, sums in totals.items():
        p, rec, f = sums / len(candidates)
        lines.append(f"{variant}\t{p:.6f}\t{rec:.6f}\t{f:.6f}")
    output = "\n".join(lines) + "\n"
    if r["out"]:
        with ctx.open_out(r["out"]) as fh:
            fh.write(output)
        ctx.write_resolved_config(r["out"])
    sys.stdout.write(output)
    return 0


def run_sentiment_cv(ctx, r):
    dataset = load_labeled_dataset(r["dataset"])
    vocab = _load_vocab(r["vocab"])

    def dense_bow(text):
        try:
            return bow_from_tokens(tokenize(text), vocab).to_dense()
        except EmptyBowError:
            return np.zeros(len(vocab))

    model = model_io.load_ev(r["model"]) if r["model"] else None

    def ev_vector(text):
        try:
            bow_vec = bow_from_tokens(tokenize(text), vocab)
        except EmptyBowError:
            return np.zeros(model.architecture.embedding_dim)
        return encode_paragraph(model, bow_vec)

    pca_model = None

    def pca_vector(text):
        return pca_transform(pca_model, dense_bow(text))

    atoms = {"bow": dense_bow, "ev": ev_vector, "pca": pca_vector}
    names = [name.strip() for name in r["features"].split(",")
             if name.strip()]
    if not names:
        raise CliError("--features must name at least one featurizer")
    featurizers = []
    for name in names:
        parts = [p.strip() for p in name.split("+")]
        unknown = [p for p in parts if p not in atoms]
        if unknown:
            raise CliError(f"unknown featurizer {unknown[0]!r} (choose "
                           f"from {sorted(atoms)})")
        if ("ev" in parts) and model is None:
            raise CliError("featurizer 'ev' needs --model")
        if "pca" in parts and pca_model is None:
            dim = r["pca_dim"] or (model.architecture.embedding_dim
                                   if model else None)
            if not dim:
                raise CliError("featurizer 'pca' needs --pca-dim or "
                               "--model to copy the dimension from")
            matrix = np.stack([dense_bow(d.text) for d in dataset])
            pca_model = pca_fit(matrix, k=dim, allow_degenerate=True)
        fn = atoms[parts[0]] if len(parts) == 1 else \
            concat_features(*[atoms[p] for p in parts])
        featurizers.append((name, fn))
    result = crossvalidate(
        dataset, featurizers, k=r["k"], seed=r["seed"],
        classifier_config=LinearClassifierConfig(
            seed=0, epochs=r["classifier_epochs"]))
    output = result.as_tsv()
    if r["out"]:
        with ctx.open_out(r["out"]) as fh:
            fh.write(output)
        ctx.write_resolved_config(r["out"])
    sys.stdout.write(output)
    return 0


def run_gradcheck(ctx, r):
    if r["kind"] not in ("ev", "dev", "both"):
        raise CliError("--kind must be ev, dev, or both")
    kinds = ("ev", "dev") if r["kind"] == "both" else (r["kind"],)
    worst = 0.0
    failed = False
    for kind in kinds:
        arch = toy_architecture(vocab_dim=r["vocab_dim"],
                                embedding_dim=r["embedding_dim"],
                                hidden=r["hidden"], dev=(kind == "dev"))
        check = check_dev_gradients if kind == "dev" else check_ev_gradients
        report = check(arch, seed=r["seed"], step=r["step"])
        ok = report.ok(r["tolerance"])
        worst = max(worst, report.max_relative_error)
        failed = failed or not ok
        print(f"{kind}: max relative error {report.max_relative_error:.3e} "
              f"at {report.worst_parameter} "
              f"({'ok' if ok else 'EXCEEDS ' + repr(r['tolerance'])})")
    return 1 if failed else 0


def run_make_synthetic(ctx, r):
    corpus = make_synthetic_topic_corpus(
        num_topics=r["num_topics"], docs_per_topic=r["docs_per_topic"],
        doc_length=r["doc_length"], vocab_size=r["vocab_size"],
        background_mass=r["background_mass"], seed=r["seed"])
    save_corpus(ctx.track(r["out"]), corpus.documents)
    labels_path = r["labels"] or r["out"] + ".labels.tsv"
    with ctx.open_out(labels_path) as fh:
        fh.write("id\ttopic\n")
        for doc, label in zip(corpus.documents, corpus.labels):
            fh.write(f"{doc.id}\t{label}\n")
    ctx.write_resolved_config(r["out"])
    print(f"{len(corpus.documents)} documents, {corpus.num_topics} topics "
          f"-> {r['out']}")
    return 0


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

def _commands():
    cmds = []

    c = Command("build-vocab", "count words and write a vocabulary file",
                run_build_vocab)
    c.add("--corpus", required=True, help_text="JSONL corpus")
    c.add("--out", required=True, help_text="vocabulary file to write")
    c.add("--max-size", int, 20000)
    c.add("--min-count", int, 2)
    cmds.append(c)

    def training_options(c, dev=False):
        c.add("--corpus", required=True, help_text="JSONL corpus")
        c.add("--vocab", required=True, help_text="vocabulary file")
        c.add("--background", help_text="JSONL corpus for the background "
              "distribution (default: the training corpus)")
        c.add("--out", required=True, help_text="model file to write")
        c.add("--history", help_text="loss history TSV "
              "(default: <out>.history.tsv)")
        c.add("--embedding-dim", int, 64)
        c.add("--f-hidden", _widths, (256,))
        c.add("--g-hidden", _widths, (256,))
        c.add("--h-hidden", _widths, (256,))
        if dev:
            c.add("--s-hidden", _widths, None,
                  help_text="clean-decoder widths (default: mirror h)")
        c.add("--attention-floor", float, 0.05)
        c.add("--epochs", int, 20)
        c.add("--batch-size", int, 32)
        c.add("--learning-rate", float, 1e-3)
        c.add("--background-weight", float, 1.0)
        c.add("--shuffle", _bool, True, boolean=True)
        c.add("--seed", int, required=True,
              help_text="training seed (mandatory)")

    c = Command("train-ev", "train a paragraph-embedding model",
                run_train_ev)
    training_options(c)
    cmds.append(c)

    c = Command("train-dev", "train a denoising model on noisy/clean "
                "pairs", run_train_dev)
    training_options(c, dev=True)
    cmds.append(c)

    c = Command("encode", "embed documents with a trained model",
                run_encode)
    c.add("--model", required=True)
    c.add("--vocab", required=True)
    c.add("--corpus", required=True)
    c.add("--out", required=True, help_text="embedding JSONL to write")
    c.add("--threads", int, 1)
    cmds.append(c)

    c = Command("summarize", "extractive summaries for document clusters",
                run_summarize)
    c.add("--model", required=True)
    c.add("--vocab", required=True)
    c.add("--corpus", required=True)
    c.add("--manifest", required=True,
          help_text="JSON mapping cluster_id to document ids")
    c.add("--budget-kind", str, "ratio",
          help_text="words, bytes, or ratio")
    c.add("--budget-limit", float, 0.1)
    c.add("--out", required=True, help_text="summary JSON to write")
    cmds.append(c)

    c = Command("rouge", "score candidate summaries against references",
                run_rouge)
    c.add("--candidate", required=True,
          help_text="text file, one summary per blank-line block")
    c.add("--references", _paths, required=True,
          help_text="comma-separated reference files")
    c.add("--aggregate", str, "mean", help_text="mean or max")
    c.add("--out", help_text="also write the TSV here")
    cmds.append(c)

    c = Command("sentiment-cv", "paired cross-validation of featurizers",
                run_sentiment_cv)
    c.add("--dataset", required=True,
          help_text="JSONL with id, text, label (pos/neg)")
    c.add("--vocab", required=True)
    c.add("--model", help_text="trained model for the 'ev' featurizer")
    c.add("--features", str, "bow,ev",
          help_text="comma list; combine with '+', e.g. ev+bow")
    c.add("--pca-dim", int)
    c.add("--k", int, 10)
    c.add("--classifier-epochs", int, 50)
    c.add("--seed", int, required=True)
    c.add("--out", help_text="also write the TSV here")
    cmds.append(c)

    c = Command("gradcheck", "finite-difference check of the analytic "
                "gradients", run_gradcheck)
    c.add("--vocab-dim", int, 8)
    c.add("--embedding-dim", int, 3)
    c.add("--hidden", _widths, (5,))
    c.add("--kind", str, "both", help_text="ev, dev, or both")
    c.add("--step", float, 1e-5)
    c.add("--tolerance", float, 1e-4)
    c.add("--seed", int, required=True)
    cmds.append(c)

    c = Command("make-synthetic", "generate the synthetic topic corpus",
                run_make_synthetic)
    c.add("--num-topics", int, 4)
    c.add("--docs-per-topic", int, 50)
    c.add("--doc-length", int, 50)
    c.add("--vocab-size", int, 500)
    c.add("--background-mass", float, 0.6)
    c.add("--out", required=True, help_text="corpus JSONL to write")
    c.add("--labels", help_text="labels TSV (default: <out>.labels.tsv)")
    c.add("--seed", int, required=True)
    cmds.append(c)

    return cmds


def _paths(text):
    return tuple(p.strip() for p in str(text).split(",") if p.strip())


def build_parser():
    parser = argparse.ArgumentParser(
        prog="essvec",
        description="paragraph essence embeddings: training, encoding, "
                    "summarization, and evaluation")
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="log at INFO level")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in _commands():
        command.register(subparsers)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")
    command = args._command
    try:
        resolved = command.resolve(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    ctx = RunContext(command.name, resolved)
    try:
        return command.body(ctx, resolved)
    except (CliError, CorpusError, model_io.ModelFormatError, ValueError,
            OSError) as exc:
        ctx.discard_outputs()
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TrainingDiverged as exc:
        ctx.discard_outputs()
        print(f"error: training diverged: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
