"""Model persistence: a self-describing text header plus binary payload.

The header records the format version, the model kind, every architecture
field, and one line per layer (stack, index, shape, activation).  The
payload holds each layer's weight matrix (row-major) then bias, as
little-endian float64, in header order.  Round-tripping is bit-exact.

A denoising model's file is the base file plus an ``s`` stack; loading one
as a base model simply drops that section.
"""

import json
import logging

import numpy as np

from .dev import DevArchitecture, DevModelParams
from .ev import EvArchitecture, EvModelParams
from .numerics.dense import DenseLayer

log = logging.getLogger(__name__)

MAGIC = "essvec-model"
FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """Raised when a model file cannot be parsed."""


def _header_lines(params, kind):
    arch = params.architecture
    lines = [f"{MAGIC} {FORMAT_VERSION}", f"kind {kind}",
             f"vocab_dim {arch.vocab_dim}",
             f"embedding_dim {arch.embedding_dim}",
             f"attention_floor {arch.attention_floor!r}",
             "f_hidden " + " ".join(str(w) for w in arch.f_hidden),
             "g_hidden " + " ".join(str(w) for w in arch.g_hidden),
             "h_hidden " + " ".join(str(w) for w in arch.h_hidden)]
    if kind == "dev":
        lines.append("s_hidden " + " ".join(str(w) for w in arch.s_hidden))
    for stack_name, layers in params.stacks():
        for i, layer in enumerate(layers):
            out_dim, in_dim = layer.weight.shape
            lines.append(f"layer {stack_name} {i} {out_dim} {in_dim} "
                         f"{layer.activation}")
    lines.append("end")
    return lines


def save_model(params, path):
    """Write a trained model; the kind is inferred from the value."""
    kind = "dev" if isinstance(params, DevModelParams) else "ev"
    header = "\n".join(_header_lines(params, kind)) + "\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("utf-8"))
        for stack_name, layers in params.stacks():
            for layer in layers:
                fh.write(np.ascontiguousarray(layer.weight,
                                              dtype="<f8").tobytes())
                fh.write(np.ascontiguousarray(layer.bias,
                                              dtype="<f8").tobytes())


def _parse_header(blob, path):
    end = blob.find(b"\nend\n")
    if end < 0:
        raise ModelFormatError(f"{path}: missing header terminator")
    try:
        text = blob[:end].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ModelFormatError(f"{path}: header is not UTF-8") from exc
    fields = {}
    layers = []
    for lineno, line in enumerate(text.split("\n"), start=1):
        parts = line.split()
        if lineno == 1:
            if parts[:1] != [MAGIC]:
                raise ModelFormatError(f"{path}: not a model file")
            if parts[1:] != [str(FORMAT_VERSION)]:
                raise ModelFormatError(
                    f"{path}: unsupported format version {parts[1:]}")
        elif parts and parts[0] == "layer":
            if len(parts) != 6:
                raise ModelFormatError(
                    f"{path}: line {lineno}: malformed layer line")
            layers.append((parts[1], int(parts[2]), int(parts[3]),
                           int(parts[4]), parts[5]))
        elif parts:
            fields[parts[0]] = parts[1:]
    return fields, layers, end + len(b"\nend\n")


def _architecture_from_fields(fields, kind, path):
    try:
        common = dict(
            vocab_dim=int(fields["vocab_dim"][0]),
            embedding_dim=int(fields["embedding_dim"][0]),
            attention_floor=float(fields["attention_floor"][0]),
            f_hidden=tuple(int(w) for w in fields["f_hidden"]),
            g_hidden=tuple(int(w) for w in fields["g_hidden"]),
            h_hidden=tuple(int(w) for w in fields["h_hidden"]))
        if kind == "dev":
            return DevArchitecture(
                s_hidden=tuple(int(w) for w in fields["s_hidden"]),
                **common)
        return EvArchitecture(**common)
    except KeyError as exc:
        raise ModelFormatError(f"{path}: missing header field {exc}") \
            from exc


def load_model(path):
    """Reload a saved model, bit for bit.

    Returns :class:`EvModelParams` or :class:`DevModelParams` according to
    the file's kind line.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    fields, layer_specs, offset = _parse_header(blob, path)
    kind = fields.get("kind", [None])[0]
    if kind not in ("ev", "dev"):
        raise ModelFormatError(f"{path}: unknown model kind {kind!r}")
    arch = _architecture_from_fields(fields, kind, path)
    payload = sum(out_dim * (in_dim + 1)
                  for _, _, out_dim, in_dim, _ in layer_specs) * 8
    if len(blob) - offset != payload:
        raise ModelFormatError(
            f"{path}: payload holds {len(blob) - offset} bytes, header "
            f"promises {payload}")
    stacks = {}
    for stack_name, index, out_dim, in_dim, activation in layer_specs:
        layers = stacks.setdefault(stack_name, [])
        if index != len(layers):
            raise ModelFormatError(f"{path}: layer {stack_name} {index} "
                                   "out of order")
        n_w = out_dim * in_dim
        weight = np.frombuffer(blob, dtype="<f8", count=n_w,
                               offset=offset).reshape(out_dim, in_dim)
        offset += n_w * 8
        bias = np.frombuffer(blob, dtype="<f8", count=out_dim,
                             offset=offset)
        offset += out_dim * 8
        layers.append(DenseLayer(weight=weight.astype(np.float64),
                                 bias=bias.astype(np.float64),
                                 activation=activation))
    expected = {"ev": {"f", "g", "h"}, "dev": {"f", "g", "h", "s"}}[kind]
    if set(stacks) != expected:
        raise ModelFormatError(f"{path}: expected stacks {sorted(expected)},"
                               f" found {sorted(stacks)}")
    ev = EvModelParams(f_layers=stacks["f"], g_layers=stacks["g"],
                       h_layers=stacks["h"], architecture=arch)
    if kind == "dev":
        return DevModelParams(ev=ev, s_layers=stacks["s"])
    return ev


def load_ev(path):
    """Load any model file as a base model (a denoising file's clean
    decoder is ignored; only the shared stacks are kept)."""
    model = load_model(path)
    if isinstance(model, DevModelParams):
        log.info("%s: loading denoising model as base model "
                 "(clean decoder ignored)", path)
        return model.ev
    return model


# ---------------------------------------------------------------------------
# Sidecar artifacts
# ---------------------------------------------------------------------------

def save_embeddings(path, ids, vectors):
    """JSONL embedding dump: one {"id", "vector"} object per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for doc_id, vec in zip(ids, vectors, strict=True):
            fh.write(json.dumps({"id": doc_id,
                                 "vector": [float(x) for x in vec]}) + "\n")


def load_embeddings(path):
    """Inverse of :func:`save_embeddings`: (ids, matrix)."""
    ids = []
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                ids.append(obj["id"])
                rows.append(np.asarray(obj["vector"], dtype=np.float64))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}: line {lineno}: {exc}") from exc
    return ids, np.stack(rows) if rows else np.zeros((0, 0))


def save_history(path, history):
    """Loss history as TSV, one row per epoch, components in columns."""
    has_clean = any(s.clean_kl is not None for s in history)
    cols = ["epoch", "mean_loss", "paragraph_kl", "background_kl"]
    if has_clean:
        cols.append("clean_kl")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(cols) + "\n")
        for s in history:
            row = [str(s.epoch), repr(s.mean_loss), repr(s.paragraph_kl),
                   repr(s.background_kl)]
            if has_clean:
                row.append(repr(s.clean_kl))
            fh.write("\t".join(row) + "\n")
