"""
Attention trace export.

``dump_attention`` greedily captions one example and records, for every
decode step (the EOS step included):

    step            0-based decode step
    token           emitted word (or its id when no vocabulary is given)
    token_id        emitted word id
    spatial         β^s over the N regions (sums to 1)
    channel         {"min", "mean", "max"} of β^c, null for conventional attention
    argmax_region   index of the region with the largest spatial weight

JSON layout:

    {"example_id": str, "attention": "xlinear" | "conventional",
     "regions": N, "caption": [words], "steps": [step records]}

A ``.txt`` output path selects the text layout instead: ``#``-prefixed
header lines followed by one tab-separated line per step
(step, token, token_id, argmax_region, channel min/mean/max, spatial weights
separated by spaces). Floats are written with ``repr`` so a dump reloads
bit-exactly.
"""

import json
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np

from autograd import no_grad
from inference.decoding import greedy_decode
from model.attention import XLinearTrace
from model.captioner import BOS_ID, EOS_ID, CaptionModel

from .dataset import CaptionExample
from .errors import FileFormatError
from .vocab import Vocabulary

PathLike = Union[str, Path]


def _step_record(step: int, token_id: int, trace, vocab: Optional[Vocabulary]) -> dict:
    spatial = np.asarray(trace.spatial_weights, dtype=np.float64)
    channel = None
    if isinstance(trace, XLinearTrace):
        weights = np.asarray(trace.channel_weights)
        channel = {"min": float(weights.min()), "mean": float(weights.mean()), "max": float(weights.max())}
    return {
        "step": step,
        "token": vocab.decode([token_id], strip_special=False)[0] if vocab is not None else str(token_id),
        "token_id": int(token_id),
        "spatial": [float(w) for w in spatial],
        "channel": channel,
        "argmax_region": int(np.argmax(spatial)),
    }


def attention_records(
    model: CaptionModel, example: CaptionExample, vocab: Optional[Vocabulary] = None, max_len: Optional[int] = None
) -> dict:
    """Build the dump document for ``example`` without writing it."""
    if max_len is None:
        max_len = model.config.max_caption_len
    with no_grad():
        enc = model.encode(example.regions)
    caption = greedy_decode(model, enc, max_len, keep_trace=True)
    emitted = list(caption.tokens) + ([EOS_ID] if caption.finished else [])
    steps = [_step_record(i, tok, trace, vocab) for i, (tok, trace) in enumerate(zip(emitted, caption.traces))]
    words = vocab.decode(caption.tokens) if vocab is not None else [str(t) for t in caption.tokens]
    return {
        "example_id": example.example_id,
        "attention": model.config.attention_kind.value,
        "regions": int(np.shape(example.regions)[0]),
        "caption": words,
        "steps": steps,
    }


# ============================================================================
# Writing and reading
# ============================================================================

def _format_text(doc: dict) -> str:
    lines = [
        f"# example_id: {doc['example_id']}",
        f"# attention: {doc['attention']}",
        f"# regions: {doc['regions']}",
        f"# caption: {' '.join(doc['caption'])}",
        "# step\ttoken\ttoken_id\targmax_region\tchannel_min\tchannel_mean\tchannel_max\tspatial",
    ]
    for rec in doc["steps"]:
        channel = rec["channel"]
        summary = [repr(channel[k]) for k in ("min", "mean", "max")] if channel else ["-", "-", "-"]
        lines.append("\t".join(
            [str(rec["step"]), rec["token"], str(rec["token_id"]), str(rec["argmax_region"])]
            + summary
            + [" ".join(repr(w) for w in rec["spatial"])]
        ))
    return "\n".join(lines) + "\n"


def dump_attention(
    model: CaptionModel,
    example: CaptionExample,
    out_path: PathLike,
    vocab: Optional[Vocabulary] = None,
    max_len: Optional[int] = None,
) -> dict:
    """
    Caption ``example`` greedily and write its per-step attention trace.

    Returns:
        The document that was written

    Raises:
        OSError: If the file cannot be written
    """
    doc = attention_records(model, example, vocab, max_len)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    if out_path.suffix == ".txt":
        out_path.write_text(_format_text(doc), encoding="utf-8")
    else:
        out_path.write_text(json.dumps(doc, indent=2), encoding="utf-8")
    return doc


def load_attention_dump(path: PathLike) -> dict:
    """Read a dump written by ``dump_attention`` (JSON or text layout)."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix != ".txt":
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise FileFormatError(f"attention dump is not valid JSON: {exc}", path) from exc

    header, steps = {}, []
    for line in text.splitlines():
        if line.startswith("# step"):
            continue
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            header[key] = value
            continue
        fields = line.split("\t")
        if len(fields) != 8:
            raise FileFormatError("attention dump line has the wrong field count", path, expected=8, found=len(fields))
        channel = None
        if fields[4] != "-":
            channel = {"min": float(fields[4]), "mean": float(fields[5]), "max": float(fields[6])}
        steps.append({
            "step": int(fields[0]),
            "token": fields[1],
            "token_id": int(fields[2]),
            "argmax_region": int(fields[3]),
            "channel": channel,
            "spatial": [float(w) for w in fields[7].split()],
        })
    return {
        "example_id": header.get("example_id"),
        "attention": header.get("attention"),
        "regions": int(header.get("regions", 0)),
        "caption": header.get("caption", "").split(),
        "steps": steps,
    }


def replay_attention(model: CaptionModel, example: CaptionExample, token_ids: Sequence[int]) -> np.ndarray:
    """
    Feed ``token_ids`` (the dumped step tokens) back through the decoder and
    collect β^s at every step.

    Returns:
        Array of shape (len(token_ids), N)
    """
    rows: List[np.ndarray] = []
    with no_grad():
        enc = model.encode(example.regions)
        state = model.init_state()
        global_feature = model.global_feature(enc)
        token = BOS_ID
        for next_token in token_ids:
            _, state, trace = model.step_log_probs(state, token, enc, global_feature, keep_trace=True)
            rows.append(np.asarray(trace.spatial_weights))
            token = int(next_token)
    return np.stack(rows) if rows else np.zeros((0, np.shape(example.regions)[0]))
