"""Reading and writing decay curves, fits and suite results.

Decay curves are stored one row per (protocol, qubit, length, sequence)::

    protocol,qubit,length,seq_index,probability
    mcm_rb,control,1,0,0.9987...

Means and standard deviations are never stored; they are recomputed on
load. Probabilities are written with ``repr`` so floats round-trip exactly.
The JSON variant is a list of objects with the same five fields.
"""

from __future__ import annotations

import csv
import json
import math
from collections import defaultdict
from pathlib import Path

import numpy as np

from .analysis import PROTOCOLS, QUBITS, FitResult, curve_from_samples

COLUMNS = ("protocol", "qubit", "length", "seq_index", "probability")


class DataFormatError(ValueError):
    """Decay-curve file that does not match the schema."""


def curve_rows(curves: dict):
    for protocol in PROTOCOLS:
        for qubit in QUBITS:
            if (protocol, qubit) not in curves:
                continue
            curve = curves[(protocol, qubit)]
            for n, samples in zip(curve.lengths, curve.samples):
                for s, p in enumerate(samples):
                    yield protocol, qubit, int(n), s, float(p)


def write_curves(curves: dict, path, fmt: str = "csv") -> Path:
    path = Path(path)
    rows = list(curve_rows(curves))
    if fmt == "json":
        path.write_text(json.dumps([dict(zip(COLUMNS, r)) for r in rows], indent=1))
    else:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(COLUMNS)
            for r in rows:
                w.writerow([*r[:4], repr(r[4])])
    return path


def _raw_rows(path: Path):
    """Yield (location, mapping) pairs from a CSV or JSON curve file."""
    if path.suffix.lower() == ".json":
        try:
            records = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from exc
        if not isinstance(records, list):
            raise DataFormatError(f"{path}: expected a JSON list of records")
        for i, rec in enumerate(records):
            if not isinstance(rec, dict) or set(rec) != set(COLUMNS):
                raise DataFormatError(f"{path}: record {i}: expected keys {', '.join(COLUMNS)}")
            yield f"{path}: record {i}", rec
        return
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataFormatError(f"{path}: empty file")
        if tuple(h.strip() for h in header) != COLUMNS:
            raise DataFormatError(f"{path}:1: header must be {','.join(COLUMNS)}, got {','.join(header)}")
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            loc = f"{path}:{reader.line_num}"
            if len(row) != len(COLUMNS):
                raise DataFormatError(f"{loc}: expected {len(COLUMNS)} fields, got {len(row)}")
            yield loc, dict(zip(COLUMNS, (c.strip() for c in row)))


def read_curves(path, shots: int = 0) -> dict:
    """Load decay curves keyed by ``(protocol, qubit)``.

    ``shots`` sets the standard deviation of curves with one value per
    length (see :func:`mcmrb.analysis.curve_from_samples`).

    Raises:
        DataFormatError: with the file location of the first bad row.
    """
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"{path}: no such file")
    table = defaultdict(lambda: defaultdict(dict))
    for loc, rec in _raw_rows(path):
        protocol, qubit = str(rec["protocol"]), str(rec["qubit"])
        if protocol not in PROTOCOLS:
            raise DataFormatError(f"{loc}: unknown protocol {protocol!r}")
        if qubit not in QUBITS:
            raise DataFormatError(f"{loc}: unknown qubit {qubit!r}")
        try:
            n, s = int(rec["length"]), int(rec["seq_index"])
            p = float(rec["probability"])
        except (TypeError, ValueError) as exc:
            raise DataFormatError(f"{loc}: {exc}") from exc
        if n < 0 or s < 0:
            raise DataFormatError(f"{loc}: length and seq_index must be non-negative")
        if not (math.isfinite(p) and 0.0 <= p <= 1.0):
            raise DataFormatError(f"{loc}: probability {p} outside [0, 1]")
        if s in table[(protocol, qubit)][n]:
            raise DataFormatError(f"{loc}: duplicate row for {protocol}/{qubit} N={n} seq {s}")
        table[(protocol, qubit)][n][s] = p
    if not table:
        raise DataFormatError(f"{path}: no data rows")

    curves = {}
    for key, by_length in table.items():
        lengths = sorted(by_length)
        samples = []
        for n in lengths:
            seqs = by_length[n]
            if sorted(seqs) != list(range(len(seqs))):
                raise DataFormatError(f"{path}: {key[0]}/{key[1]} N={n}: seq_index values must be 0..{len(seqs) - 1}")
            samples.append(np.array([seqs[i] for i in range(len(seqs))]))
        curves[key] = curve_from_samples(lengths, samples, shots)
    return curves


def require_full_suite(curves: dict, path=None) -> None:
    missing = [f"{p}/{q}" for p in PROTOCOLS for q in QUBITS if (p, q) not in curves]
    if missing:
        raise DataFormatError(f"{path or 'data'}: missing curves {', '.join(missing)}")


def fit_to_dict(fit: FitResult) -> dict:
    return {
        "A": fit.A, "alpha": fit.alpha, "B": fit.B,
        "sigma_A": fit.sigma_A, "sigma_alpha": fit.sigma_alpha, "sigma_B": fit.sigma_B,
        "residual_rms": fit.residual_rms, "converged": fit.converged, "degenerate": fit.degenerate,
        "epc": fit.epc, "sigma_epc": fit.sigma_epc,
    }


def fits_to_dict(fits: dict) -> dict:
    return {f"{p}/{q}": fit_to_dict(f) for (p, q), f in fits.items()}


def write_json(obj, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2, default=_json_default) + "\n")
    return path


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def write_table(rows: list, columns, path, fmt: str = "csv") -> Path:
    """Write a list of dicts as CSV or JSON."""
    path = Path(path)
    if fmt == "json":
        return write_json(rows, path)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(columns))
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return path
