"""Chain files and trace CSVs.

A chain file is JSON with fields ``n``, ``P`` (row-major list of rows),
``partition`` (list of lists of zero-based state indices) and an optional
``metadata`` object. Floats are written with ``repr`` precision, so a load
after a save reproduces every entry bit for bit.
"""
import csv
import json
from dataclasses import dataclass, field

import numpy as np

from . import lumpability as lump
from . import markov_core as mc

FORMAT_VERSION = 1


class ChainFileError(ValueError):
    pass


@dataclass
class ChainFile:
    P: np.ndarray
    partition: lump.StatePartition
    metadata: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.P.shape[0]

    def to_dict(self):
        return {
            "format": "quasilump-chain",
            "version": FORMAT_VERSION,
            "n": self.n,
            "P": [[float(v) for v in row] for row in self.P],
            "partition": self.partition.to_lists(),
            "metadata": self.metadata,
        }


def dumps_chain(chain):
    return json.dumps(chain.to_dict(), indent=1) + "\n"


def save_chain(path, chain):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_chain(chain))


def loads_chain(text, source="<string>"):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ChainFileError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ChainFileError(f"{source}: top level must be an object")
    for key in ("n", "P", "partition"):
        if key not in doc:
            raise ChainFileError(f"{source}: missing field '{key}'")
    n = doc["n"]
    if not isinstance(n, int) or n < 1:
        raise ChainFileError(f"{source}: field 'n' must be a positive integer")
    rows = doc["P"]
    if not isinstance(rows, list) or len(rows) != n:
        raise ChainFileError(f"{source}: field 'P' must have n = {n} rows")
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n:
            got = len(row) if isinstance(row, list) else type(row).__name__
            raise ChainFileError(
                f"{source}: field 'P' row {i} has {got} entries; matrix must be square ({n}x{n})"
            )
    try:
        P = np.array(rows, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ChainFileError(f"{source}: field 'P' has non-numeric entries") from exc
    check = mc.validate_stochastic(P)
    if not check.ok:
        detail = "; ".join(str(v) for v in check.violations[:3])
        raise ChainFileError(f"{source}: field 'P' is not stochastic: {detail}")
    try:
        Q = lump.StatePartition(doc["partition"], n)
    except (lump.PartitionError, TypeError, ValueError) as exc:
        raise ChainFileError(f"{source}: field 'partition': {exc}") from exc
    meta = doc.get("metadata") or {}
    if not isinstance(meta, dict):
        raise ChainFileError(f"{source}: field 'metadata' must be an object")
    return ChainFile(P, Q, meta)


def load_chain(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ChainFileError(f"{path}: {exc.strerror}") from exc
    return loads_chain(text, str(path))


def trace_header(m):
    return ["t"] + [f"mass_{i}" for i in range(m)] + ["deviation", "bound", "norm"]


def write_trace(path, rows):
    m = len(rows[0].mass) if rows else 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(trace_header(m))
        for r in rows:
            w.writerow(
                [r.t]
                + [repr(float(x)) for x in r.mass]
                + [repr(float(r.deviation)), repr(float(r.bound)), r.norm]
            )


def read_trace(path):
    """Parse a trace CSV into a list of dicts with float arrays for mass."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        m = sum(1 for h in header if h.startswith("mass_"))
        if header != trace_header(m):
            raise ValueError(f"{path}: unexpected header {header}")
        for rec in reader:
            out.append(
                {
                    "t": int(rec[0]),
                    "mass": np.array([float(x) for x in rec[1:1 + m]]),
                    "deviation": float(rec[1 + m]),
                    "bound": float(rec[2 + m]),
                    "norm": rec[3 + m],
                }
            )
    return out
