"""Export jobs: encode a tokenized corpus and write CEMB store files.

The store format is the consumer toolkit's documented external interface:
a block file with a 16-byte header (magic ``CEMB``, version u32 = 1, dim u32,
reserved u32, little-endian) followed by raw little-endian float32 rows, plus
a JSONL manifest (header line with dim/layer/count, then one record per
sentence with id, tokens, and float offset). Gender-swapped twins are
produced by the consumer's own ``swap`` subcommand so swap semantics have a
single source of truth: the lexicon TSV.
"""

from __future__ import annotations

import json
import os
import struct
import subprocess
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"CEMB"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIII")


class ExportError(Exception):
    pass


@dataclass(frozen=True)
class ExportJob:
    corpus: Path              # one pre-tokenized sentence per line
    encoder: str = "hashed"
    layer: str = "top"
    out: Path = Path("store.cemb")
    batch_size: int = 1

    def __post_init__(self):
        if not self.layer:
            raise ExportError("layer selector must be non-empty")
        if self.batch_size < 1:
            raise ExportError("batch size must be >= 1")


def read_corpus(path: str | Path) -> list[list[str]]:
    sentences = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            tokens = line.split()
            if tokens:
                sentences.append(tokens)
    return sentences


def sentence_id(index: int) -> str:
    return f"s{index:06d}"


def _write_block(path: Path, dim: int, blobs: list[bytes]) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=path.name + ".tmp")
    with os.fdopen(fd, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, dim, 0))
        for blob in blobs:
            fh.write(blob)
    os.replace(tmp, path)


def _write_manifest(path: Path, dim: int, layer: str, records: list[dict]) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=path.name + ".tmp")
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"dim": dim, "layer": layer, "count": len(records)}, sort_keys=True) + "\n")
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    os.replace(tmp, path)


def export(job: ExportJob, encoder=None) -> Path:
    """Encode the corpus and write block + manifest; returns the block path."""
    from .encoders import get_encoder

    if encoder is None:
        encoder = get_encoder(job.encoder)
    sentences = read_corpus(job.corpus)
    out = Path(job.out)
    dim = encoder.dim
    blobs: list[bytes] = []
    records: list[dict] = []
    offset = 0
    for start in range(0, len(sentences), job.batch_size):
        batch = sentences[start : start + job.batch_size]
        matrices = encoder.encode_batch(batch)
        for local, (tokens, matrix) in enumerate(zip(batch, matrices)):
            sid = sentence_id(start + local)
            matrix = np.asarray(matrix, dtype="<f4")
            if matrix.shape != (len(tokens), dim):
                raise ExportError(
                    f"sentence {sid}: encoder produced {matrix.shape[0]} vectors "
                    f"for {len(tokens)} tokens"
                )
            if not np.all(np.isfinite(matrix)):
                raise ExportError(f"sentence {sid}: encoder produced non-finite values")
            blobs.append(matrix.tobytes(order="C"))
            records.append({"id": sid, "tokens": tokens, "offset": offset})
            offset += matrix.size
    _write_block(out, dim, blobs)
    _write_manifest(Path(str(out) + ".manifest"), dim, job.layer, records)
    return out


def swap_corpus_via_cli(corpus: Path, lexicon: Path, out: Path) -> None:
    """Invoke the consumer toolkit's ``swap`` subcommand on a text corpus."""
    result = subprocess.run(
        [
            sys.executable, "-m", "biascope", "swap",
            "--in", str(corpus), "--lexicon", str(lexicon), "--out", str(out),
        ],
        capture_output=True,
        text=True,
    )
    if result.returncode != 0:
        raise ExportError(f"swap subcommand failed: {result.stderr.strip()}")


def export_pair(
    corpus: str | Path,
    lexicon: str | Path,
    out_a: str | Path,
    out_b: str | Path,
    encoder: str = "hashed",
    layer: str = "top",
    batch_size: int = 1,
) -> tuple[Path, Path]:
    """Export a corpus and its gender-swapped twin as two aligned stores."""
    corpus = Path(corpus)
    originals = read_corpus(corpus)
    with tempfile.TemporaryDirectory() as tmpdir:
        swapped_path = Path(tmpdir) / "swapped.txt"
        swap_corpus_via_cli(corpus, Path(lexicon), swapped_path)
        swapped = read_corpus(swapped_path)
        if len(swapped) != len(originals):
            raise ExportError(
                f"swapped corpus has {len(swapped)} sentences, expected {len(originals)}"
            )
        for i, (a, b) in enumerate(zip(originals, swapped)):
            if len(a) != len(b):
                raise ExportError(
                    f"sentence {sentence_id(i)}: token count changed under swap "
                    f"({len(a)} vs {len(b)})"
                )
        path_a = export(
            ExportJob(corpus=corpus, encoder=encoder, layer=layer, out=Path(out_a),
                      batch_size=batch_size)
        )
        path_b = export(
            ExportJob(corpus=swapped_path, encoder=encoder, layer=layer, out=Path(out_b),
                      batch_size=batch_size)
        )
    return path_a, path_b
