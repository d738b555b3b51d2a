"""Categorical encoding and sparse marginal count tables.

Dense joint arrays over the full variable domain are out of the question
for realistic schemas (four POS-valued variables alone span ~26**4 cells),
so marginal tables store only the observed cells: sorted flat indices with
aligned counts. Fitting, scoring and sampling all work off this
representation; dense conversion exists for small domains only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

# Value domain per variable, tag variable first by convention.
Levels = dict[str, list[str]]

MAX_DENSE_CELLS = 2_000_000


def flat_strides(shape: Sequence[int]) -> np.ndarray:
    """Row-major strides turning per-variable codes into one flat index."""
    k = len(shape)
    strides = np.ones(k, dtype=np.int64)
    for i in range(k - 2, -1, -1):
        strides[i] = strides[i + 1] * shape[i + 1]
    return strides


def domain_size(levels: Levels) -> int:
    size = 1
    for values in levels.values():
        size *= len(values)
    return size


def build_levels(row_groups, feature_names: Sequence[str], tag_name: str = "tag") -> Levels:
    """Fix sorted value domains from the union of the given row groups.

    Domains are fixed up front (typically from train plus test) so that
    values unseen in training are representable with zero counts instead of
    raising at classification time. The tag variable is listed first.
    """
    if tag_name in feature_names:
        raise ValueError(f"tag name {tag_name!r} collides with a feature name")
    tags: set[str] = set()
    values: list[set[str]] = [set() for _ in feature_names]
    for rows in row_groups:
        for row in rows:
            if row.tag is not None:
                tags.add(row.tag)
            if len(row.values) != len(feature_names):
                raise ValueError(
                    f"row arity {len(row.values)} does not match "
                    f"{len(feature_names)} feature variables")
            for acc, value in zip(values, row.values):
                acc.add(value)
    if not tags:
        raise ValueError("no tagged rows; cannot fix the tag domain")
    levels: Levels = {tag_name: sorted(tags)}
    for name, acc in zip(feature_names, values):
        if not acc:
            raise ValueError(f"no observed values for variable {name!r}")
        levels[name] = sorted(acc)
    return levels


def _encode_column(values: np.ndarray, domain: list[str], name: str) -> np.ndarray:
    domain_arr = np.asarray(domain)
    codes = np.searchsorted(domain_arr, values)
    codes = np.minimum(codes, len(domain) - 1)
    bad = domain_arr[codes] != values
    if bad.any():
        value = values[np.argmax(bad)]
        raise ValueError(f"value {value!r} not in the domain of {name!r}")
    return codes.astype(np.int64)


def encode_feature_rows(rows, levels: Levels, tag_name: str = "tag") -> np.ndarray:
    """Encode feature values as an (N, V-1) integer matrix.

    Columns follow the order of the non-tag variables in ``levels``; the
    rows' value tuples must be aligned the same way.
    """
    names = [v for v in levels if v != tag_name]
    if not rows:
        return np.empty((0, len(names)), dtype=np.int64)
    matrix = np.asarray([row.values for row in rows])
    if matrix.shape[1] != len(names):
        raise ValueError(
            f"row arity {matrix.shape[1]} does not match {len(names)} variables")
    out = np.empty(matrix.shape, dtype=np.int64)
    for j, name in enumerate(names):
        out[:, j] = _encode_column(matrix[:, j], levels[name], name)
    return out


def encode_tags(rows, levels: Levels, tag_name: str = "tag") -> np.ndarray:
    if any(row.tag is None for row in rows):
        raise ValueError("every row must carry a tag")
    values = np.asarray([row.tag for row in rows])
    return _encode_column(values, levels[tag_name], tag_name)


def encode_rows(rows, levels: Levels, tag_name: str = "tag") -> np.ndarray:
    """Encode rows as an (N, V) matrix with columns in ``levels`` order."""
    names = list(levels)
    tag_col = names.index(tag_name)
    features = encode_feature_rows(rows, levels, tag_name)
    tags = encode_tags(rows, levels, tag_name)
    out = np.empty((len(rows), len(names)), dtype=np.int64)
    feature_cols = [j for j in range(len(names)) if j != tag_col]
    out[:, tag_col] = tags
    out[:, feature_cols] = features
    return out


def enumerate_domain_codes(shape: Sequence[int]) -> np.ndarray:
    """All code tuples of a small domain as an (M, k) matrix."""
    size = int(np.prod(shape, dtype=np.int64)) if len(shape) else 1
    if size > MAX_DENSE_CELLS:
        raise ValueError(f"domain of {size} cells is too large to enumerate")
    if not len(shape):
        return np.empty((1, 0), dtype=np.int64)
    return np.indices(shape).reshape(len(shape), -1).T.astype(np.int64)


@dataclass(eq=False)
class CountTable:
    """Observed-cell counts of a marginal over ``variables``.

    ``codes`` holds sorted flat indices (row-major over ``shape``) of the
    cells seen at least once; ``counts`` is aligned with it. A zero-variable
    table is the scalar total.
    """

    variables: tuple[str, ...]
    shape: tuple[int, ...]
    codes: np.ndarray
    counts: np.ndarray

    @classmethod
    def from_code_matrix(cls, variables: Sequence[str], shape: Sequence[int],
                         code_matrix: np.ndarray) -> "CountTable":
        if code_matrix.shape[0] == 0:
            raise ValueError("cannot tabulate zero rows")
        flat = code_matrix @ flat_strides(shape)
        codes, counts = np.unique(flat, return_counts=True)
        return cls(tuple(variables), tuple(int(s) for s in shape),
                   codes.astype(np.int64), counts.astype(np.int64))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def lookup(self, flat: np.ndarray) -> np.ndarray:
        """Counts for the given flat indices, zero where unobserved."""
        pos = np.searchsorted(self.codes, flat)
        pos = np.minimum(pos, len(self.codes) - 1)
        hit = self.codes[pos] == flat
        return np.where(hit, self.counts[pos], 0)

    def decode_cells(self) -> np.ndarray:
        """Per-variable codes of the observed cells as an (E, k) matrix."""
        k = len(self.shape)
        out = np.empty((len(self.codes), k), dtype=np.int64)
        strides = flat_strides(self.shape)
        for j in range(k):
            out[:, j] = (self.codes // strides[j]) % self.shape[j]
        return out

    def to_dense(self) -> np.ndarray:
        size = int(np.prod(self.shape, dtype=np.int64)) if self.shape else 1
        if size > MAX_DENSE_CELLS:
            raise ValueError(f"table of {size} cells is too large to densify")
        dense = np.zeros(size, dtype=np.int64)
        dense[self.codes] = self.counts
        return dense.reshape(self.shape)
