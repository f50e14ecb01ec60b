"""Directed and undirected affinity matrices between feature types.

The directed entry for an ordered pair is the translation error minus the
reconstruction error of that pair's trained translator on a held-out split.
Row and column min-max normalizations produce R and C; the undirected matrix
is U = (R + R^T + C + C^T) / 4. Degenerate (constant) rows or columns
normalize to all zeros and are flagged.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, MissingPair, UnsupportedForBaseline
from .feature_io import PairedSet
from .nn_core import euclid_loss
from .translator import KIND_MLP, TranslatorModel, reconstruct, translate

DIRECTED_M = "directed_M"
ROW_NORM_R = "row_norm_R"
COL_NORM_C = "col_norm_C"
UNDIRECTED_U = "undirected_U"

_SYM_TOL = 1e-12


@dataclass(frozen=True)
class AffinityMatrix:
    names: tuple[str, ...]
    values: np.ndarray  # (n, n) float64, rows = source, cols = target
    kind: str
    degenerate: tuple[int, ...] = ()  # constant rows (R) or columns (C)

    def __post_init__(self):
        vals = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64))
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "names", tuple(self.names))
        n = len(self.names)
        if n < 2 or vals.shape != (n, n):
            raise DataError(f"expected square matrix over >= 2 names, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise DataError("affinity matrix contains non-finite values")
        if self.kind in (ROW_NORM_R, COL_NORM_C, UNDIRECTED_U):
            if vals.min() < -_SYM_TOL or vals.max() > 1 + _SYM_TOL:
                raise DataError(f"{self.kind} entries must lie in [0, 1]")
        if self.kind == UNDIRECTED_U and np.abs(vals - vals.T).max() > _SYM_TOL:
            raise DataError("undirected matrix must be symmetric")
        vals.setflags(write=False)

    def entry(self, source: str, target: str) -> float:
        return float(self.values[self.names.index(source), self.names.index(target)])


def dam_entry(model: TranslatorModel, paired: PairedSet) -> float:
    """Translation error minus reconstruction error on the given split."""
    if model.kind == KIND_MLP:
        raise UnsupportedForBaseline("dam_entry")
    v_t = paired.target.vectors
    trans, _ = euclid_loss(translate(model, paired.source).vectors, v_t)
    recon, _ = euclid_loss(reconstruct(model, paired.target).vectors, v_t)
    return trans - recon


def build_dam(
    models: dict[tuple[str, str], TranslatorModel],
    pairs: dict[tuple[str, str], PairedSet],
    names: list[str] | tuple[str, ...],
) -> AffinityMatrix:
    """Assemble the full directed matrix, diagonal included."""
    names = tuple(names)
    n = len(names)
    values = np.zeros((n, n))
    for i, s in enumerate(names):
        for j, t in enumerate(names):
            if (s, t) not in models or (s, t) not in pairs:
                raise MissingPair(s, t)
            values[i, j] = dam_entry(models[(s, t)], pairs[(s, t)])
    return AffinityMatrix(names=names, values=values, kind=DIRECTED_M)


def _minmax(values: np.ndarray, axis: int) -> tuple[np.ndarray, tuple[int, ...]]:
    lo = values.min(axis=axis, keepdims=True)
    hi = values.max(axis=axis, keepdims=True)
    span = hi - lo
    degenerate = np.nonzero(span.ravel() == 0.0)[0]
    span = np.where(span == 0.0, 1.0, span)
    out = (values - lo) / span
    if degenerate.size:
        if axis == 1:
            out[degenerate, :] = 0.0
        else:
            out[:, degenerate] = 0.0
    return out, tuple(int(k) for k in degenerate)


def normalize_rows(m: AffinityMatrix) -> AffinityMatrix:
    """Min-max normalize each row to [0, 1]; constant rows map to zeros."""
    if m.kind != DIRECTED_M:
        raise DataError(f"expected a directed matrix, got kind {m.kind!r}")
    out, degenerate = _minmax(m.values.copy(), axis=1)
    return AffinityMatrix(names=m.names, values=out, kind=ROW_NORM_R, degenerate=degenerate)


def normalize_cols(m: AffinityMatrix) -> AffinityMatrix:
    """Column-wise analogue of normalize_rows."""
    if m.kind != DIRECTED_M:
        raise DataError(f"expected a directed matrix, got kind {m.kind!r}")
    out, degenerate = _minmax(m.values.copy(), axis=0)
    return AffinityMatrix(names=m.names, values=out, kind=COL_NORM_C, degenerate=degenerate)


def uam(r: AffinityMatrix, c: AffinityMatrix) -> AffinityMatrix:
    if r.names != c.names or r.values.shape != c.values.shape:
        raise DataError("R and C must share names and shape")
    u = (r.values + r.values.T + c.values + c.values.T) / 4.0
    u = np.clip((u + u.T) / 2.0, 0.0, 1.0)  # exact symmetry against rounding
    return AffinityMatrix(names=r.names, values=u, kind=UNDIRECTED_U)


def average_affinity(matrices: list[AffinityMatrix]) -> AffinityMatrix:
    """Entrywise mean over matrices of identical names, order and kind."""
    if not matrices:
        raise DataError("nothing to average")
    first = matrices[0]
    for m in matrices[1:]:
        if m.names != first.names or m.kind != first.kind:
            raise DataError("matrices must share names and kind to be averaged")
    mean = np.mean([m.values for m in matrices], axis=0)
    return AffinityMatrix(names=first.names, values=mean, kind=first.kind)


def write_matrix_csv(m: AffinityMatrix, path) -> None:
    """First row/column are the feature names; full float64 precision."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["", *m.names])
        for name, row in zip(m.names, m.values):
            w.writerow([name, *(repr(float(x)) for x in row)])


def read_matrix_csv(path, kind: str) -> AffinityMatrix:
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    if not rows or rows[0][0] != "":
        raise DataError(f"{path}: expected a header row starting with an empty cell")
    names = tuple(rows[0][1:])
    values = []
    for row in rows[1:]:
        if not row:
            continue
        if row[0] != names[len(values)]:
            raise DataError(f"{path}: row label {row[0]!r} does not match header order")
        values.append([float(x) for x in row[1:]])
    return AffinityMatrix(names=names, values=np.array(values), kind=kind)
