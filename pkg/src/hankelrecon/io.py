"""Plain-text containers for complex arrays, sampling masks and reports.

CPLX: ``#CPLX v1 <d1>[ <d2>[ <d3>]]`` then one ``re,im`` pair per line in
row-major order, written with 17 significant digits so doubles round-trip.

MASK: ``#MASK v1 <N> <M> <seed> <kind>`` then one sample index per line.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from hankelrecon.sampling import KINDS, SamplingPattern


class FormatError(ValueError):
    """A data file does not follow its container format."""


def write_cplx(path, data) -> None:
    data = np.asarray(data, dtype=complex)
    if not 1 <= data.ndim <= 3:
        raise ValueError(f"CPLX holds 1 to 3 dimensions, got {data.ndim}")
    flat = data.ravel(order="C")
    lines = ["#CPLX v1 " + " ".join(str(d) for d in data.shape)]
    lines.extend(f"{v.real:.17g},{v.imag:.17g}" for v in flat)
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_cplx(path) -> np.ndarray:
    text = Path(path).read_text(encoding="ascii").splitlines()
    if not text:
        raise FormatError(f"{path}: empty file")
    head = text[0].split()
    if head[:2] != ["#CPLX", "v1"] or not 3 <= len(head) <= 5:
        raise FormatError(f"{path}: bad CPLX header {text[0]!r}")
    try:
        shape = tuple(int(d) for d in head[2:])
    except ValueError:
        raise FormatError(f"{path}: non-integer dimension in header") from None
    if any(d < 1 for d in shape):
        raise FormatError(f"{path}: dimensions must be positive")
    body = [ln for ln in text[1:] if ln.strip()]
    n = int(np.prod(shape))
    if len(body) != n:
        raise FormatError(f"{path}: header promises {n} values, found {len(body)}")
    out = np.empty(n, dtype=complex)
    for i, ln in enumerate(body):
        try:
            re, im = ln.split(",")
            out[i] = complex(float(re), float(im))
        except ValueError:
            raise FormatError(f"{path}: line {i + 2} is not 're,im'") from None
    return out.reshape(shape)


def write_mask(path, pattern: SamplingPattern) -> None:
    lines = [f"#MASK v1 {pattern.n_total} {pattern.m} {pattern.seed} {pattern.kind}"]
    lines.extend(str(int(i)) for i in pattern.omega)
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_mask(path) -> SamplingPattern:
    text = Path(path).read_text(encoding="ascii").splitlines()
    if not text:
        raise FormatError(f"{path}: empty file")
    head = text[0].split()
    if head[:2] != ["#MASK", "v1"] or len(head) != 6:
        raise FormatError(f"{path}: bad MASK header {text[0]!r}")
    try:
        n, m, seed = int(head[2]), int(head[3]), int(head[4])
        omega = np.array([int(ln) for ln in text[1:] if ln.strip()], dtype=np.int64)
    except ValueError:
        raise FormatError(f"{path}: non-integer field") from None
    if head[5] not in KINDS:
        raise FormatError(f"{path}: unknown pattern kind {head[5]!r}")
    if omega.size != m:
        raise FormatError(f"{path}: header promises {m} indices, found {omega.size}")
    try:
        return SamplingPattern(omega, n, seed, head[5])
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None


def write_csv(path, columns, rows, header: dict | None = None) -> None:
    """CSV with optional ``#``-prefixed provenance lines (JSON) on top.

    Floats are written with ``repr`` so the text is exact and stable.
    """
    with open(path, "w", newline="") as fh:
        if header:
            for key, value in header.items():
                fh.write(f"# {key}: {json.dumps(value, sort_keys=True)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            values = [row[c] for c in columns] if isinstance(row, dict) else list(row)
            w.writerow([_cell(v) for v in values])


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def read_csv(path) -> tuple[list[str], list[dict]]:
    """Read a CSV written by :func:`write_csv`, skipping ``#`` lines."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    rows = list(reader)
    return list(reader.fieldnames or []), rows
