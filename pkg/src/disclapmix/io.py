"""File formats: population / dataset / evaluation CSVs and the model JSON.

All writers produce byte-stable output (fixed column order, ``\\n`` line
endings, floats with 17 significant digits) and replace the target file
atomically.
"""
from __future__ import annotations

import csv
import json
import os
import tempfile
from pathlib import Path
from typing import Sequence

import numpy as np

from .dataset import EvaluationTable, SampledDataset
from .fwsim import HaplotypeTable
from .mixture import FitReport, MixtureModel


class FormatError(ValueError):
    """A file does not follow the expected layout; message carries the line number."""


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def atomic_write(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _lines(header: Sequence[str], rows) -> str:
    out = [",".join(header)]
    out.extend(",".join(row) for row in rows)
    return "\n".join(out) + "\n"


def _read_rows(path) -> tuple[list[str], list[tuple[int, list[str]]]]:
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            rows = [(i, row) for i, row in enumerate(reader, start=1) if row]
    except (OSError, UnicodeDecodeError, csv.Error) as exc:
        raise FormatError(f"{path}: cannot read: {exc}") from exc
    if not rows:
        raise FormatError(f"{path}: line 1: missing header")
    header = [h.strip() for h in rows[0][1]]
    return header, rows[1:]


def _int_cell(path, line: int, value: str) -> int:
    try:
        return int(value.strip())
    except ValueError:
        raise FormatError(f"{path}: line {line}: expected an integer, got {value!r}") from None


def _float_cell(path, line: int, value: str) -> float:
    try:
        return float(value.strip())
    except ValueError:
        raise FormatError(f"{path}: line {line}: expected a number, got {value!r}") from None


def _check_width(path, line: int, row, width: int) -> None:
    if len(row) != width:
        raise FormatError(f"{path}: line {line}: expected {width} fields, got {len(row)}")


# ------------------------------------------------------------- population


def population_csv(table: HaplotypeTable) -> str:
    rows = ([str(int(a)) for a in h] + [str(int(n))] for h, n in zip(table.haplotypes, table.counts))
    return _lines(list(table.locus_names) + ["N"], rows)


def write_population(path, table: HaplotypeTable) -> None:
    atomic_write(path, population_csv(table))


def read_population(path) -> HaplotypeTable:
    header, rows = _read_rows(path)
    if len(header) < 2 or header[-1] != "N":
        raise FormatError(f"{path}: line 1: header must be Locus1,...,LocusR,N")
    r = len(header) - 1
    haps, counts = [], []
    for line, row in rows:
        _check_width(path, line, row, r + 1)
        haps.append([_int_cell(path, line, v) for v in row[:r]])
        n = _int_cell(path, line, row[r])
        if n < 1:
            raise FormatError(f"{path}: line {line}: multiplicity N must be >= 1")
        counts.append(n)
    if not haps:
        raise FormatError(f"{path}: population has no rows")
    try:
        return HaplotypeTable(np.array(haps, dtype=np.int64), np.array(counts), tuple(header[:r]))
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None


# ---------------------------------------------------------------- dataset


def dataset_csv(db, locus_names: Sequence[str]) -> str:
    return _lines(list(locus_names), ([str(int(a)) for a in row] for row in np.asarray(db)))


def write_dataset(path, db, locus_names: Sequence[str]) -> None:
    atomic_write(path, dataset_csv(db, locus_names))


def read_dataset(path) -> tuple[np.ndarray, tuple[str, ...]]:
    """Integer haplotype matrix (possibly with zero rows) and its locus names."""
    header, rows = _read_rows(path)
    r = len(header)
    db = []
    for line, row in rows:
        _check_width(path, line, row, r)
        db.append([_int_cell(path, line, v) for v in row])
    return np.array(db, dtype=np.int64).reshape(len(db), r), tuple(header)


UNIQUE_EXTRA = ("Ndb", "true_freq", "source")


def unique_csv(ds: SampledDataset) -> str:
    rows = (
        [str(int(a)) for a in h] + [str(int(k)), fmt_float(f), s]
        for h, k, f, s in zip(ds.unique, ds.ndb, ds.true_freq, ds.source)
    )
    return _lines(list(ds.locus_names) + list(UNIQUE_EXTRA), rows)


def read_unique(path) -> SampledDataset:
    """Unique-haplotype table written by ``unique_csv`` (``db`` is re-expanded from Ndb)."""
    header, rows = _read_rows(path)
    if tuple(header[-3:]) != UNIQUE_EXTRA or len(header) < 4:
        raise FormatError(f"{path}: line 1: header must end with Ndb,true_freq,source")
    r = len(header) - 3
    haps, ndb, freq, src = [], [], [], []
    for line, row in rows:
        _check_width(path, line, row, r + 3)
        haps.append([_int_cell(path, line, v) for v in row[:r]])
        ndb.append(_int_cell(path, line, row[r]))
        freq.append(_float_cell(path, line, row[r + 1]))
        src.append(row[r + 2].strip())
    unique = np.array(haps, dtype=np.int64).reshape(len(haps), r)
    ndb_arr = np.array(ndb, dtype=np.int64)
    return SampledDataset(
        db=np.repeat(unique, ndb_arr, axis=0),
        unique=unique,
        ndb=ndb_arr,
        true_freq=np.array(freq, dtype=float),
        source=tuple(src),
        locus_names=tuple(header[:r]),
    )


def evaluation_csv(ev: EvaluationTable) -> str:
    rows = (
        [str(int(a)) for a in h] + [fmt_float(t), fmt_float(p), s]
        for h, t, p, s in zip(ev.haplotypes, ev.true_freq, ev.predicted_freq, ev.source)
    )
    return _lines(list(ev.locus_names) + ["true_freq", "predicted_freq", "source"], rows)


def predictions_csv(xs, locus_names: Sequence[str], freqs) -> str:
    rows = ([str(int(a)) for a in h] + [fmt_float(f)] for h, f in zip(np.asarray(xs), freqs))
    return _lines(list(locus_names) + ["predicted_freq"], rows)


# ------------------------------------------------------------------ model


def _num_list(values) -> str:
    return "[" + ", ".join(fmt_float(v) for v in values) + "]"


def model_json(model: MixtureModel, report: FitReport | None = None) -> str:
    centers = ",\n    ".join("[" + ", ".join(str(int(a)) for a in row) + "]" for row in model.centers)
    parts = [
        f'  "c": {model.c}',
        f'  "r": {model.r}',
        f'  "locus_names": {json.dumps(list(model.locus_names))}',
        f'  "tau": {_num_list(model.tau)}',
        f'  "centers": [\n    {centers}\n  ]',
        f'  "omega": {_num_list(model.omega)}',
        f'  "lambda": {_num_list(model.lambda_)}',
    ]
    if report is not None:
        parts.append(
            '  "fit": {'
            f'"loglik": {fmt_float(report.loglik)}, "bic": {fmt_float(report.bic)}, '
            f'"iterations": {report.iterations}, "converged": {"true" if report.converged else "false"}'
            "}"
        )
    return "{\n" + ",\n".join(parts) + "\n}\n"


def write_model(path, model: MixtureModel, report: FitReport | None = None) -> None:
    atomic_write(path, model_json(model, report))


def read_model(path) -> MixtureModel:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: cannot read model: {exc}") from exc
    try:
        model = MixtureModel(
            tau=np.array(doc["tau"], dtype=float),
            centers=np.array(doc["centers"], dtype=np.int64),
            omega=np.array(doc["omega"], dtype=float),
            lambda_=np.array(doc["lambda"], dtype=float),
            locus_names=tuple(doc.get("locus_names", ())),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: invalid model: {exc}") from exc
    if model.c != doc.get("c", model.c) or model.r != doc.get("r", model.r):
        raise FormatError(f"{path}: c/r fields disagree with parameter shapes")
    return model


def bic_csv(results: Sequence[tuple[int, FitReport, str]]) -> str:
    rows = (
        [str(c), fmt_float(rep.loglik), str(rep.n_params), fmt_float(rep.bic),
         str(rep.iterations), "true" if rep.converged else "false", name]
        for c, rep, name in results
    )
    return _lines(["clusters", "loglik", "n_params", "bic", "iterations", "converged", "model"], rows)


def dispersions_csv(model: MixtureModel) -> str:
    p = model.dispersions
    rows = ([str(j + 1), model.locus_names[k], fmt_float(p[j, k])] for j in range(model.c) for k in range(model.r))
    return _lines(["cluster", "locus", "dispersion"], rows)
