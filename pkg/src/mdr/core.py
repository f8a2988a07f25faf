"""Shared domain types, dataset validation and the contiguous fold partition."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from math import comb
from pathlib import Path
from typing import Sequence

import numpy as np


class DatasetValidationError(ValueError):
    """Raised when a raw table does not fit the declared factor/response spaces.

    ``problems`` lists every offending cell as ``(row, column, value)`` with
    1-based rows and the column header name.
    """

    def __init__(self, message: str, problems: list[tuple[int, str, int]] | None = None):
        super().__init__(message)
        self.problems = problems or []


@dataclass(frozen=True)
class ResponseSpace:
    """Responses live in {-m, ..., m}."""

    m: int

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"m must be a positive integer, got {self.m!r}")

    @property
    def size(self) -> int:
        return 2 * self.m + 1

    @property
    def values(self) -> np.ndarray:
        return np.arange(-self.m, self.m + 1)


@dataclass(frozen=True)
class FactorSpace:
    """``n`` factors, each coded 0..s."""

    n: int
    s: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if int(self.s) != self.s or self.s < 0:
            raise ValueError(f"s must be a nonnegative integer, got {self.s!r}")

    @property
    def base(self) -> int:
        return self.s + 1

    def n_cells(self, r: int) -> int:
        # python ints, no overflow
        return self.base ** r


@dataclass(frozen=True)
class FactorSubset:
    """Strictly increasing 1-based factor indices (k_1 < ... < k_r)."""

    indices: tuple[int, ...]

    def __init__(self, indices: Sequence[int]):
        idx = tuple(int(i) for i in indices)
        if not idx:
            raise ValueError("factor subset must be nonempty")
        if any(i < 1 for i in idx):
            raise ValueError(f"factor indices are 1-based, got {idx}")
        if any(a >= b for a, b in zip(idx, idx[1:])):
            raise ValueError(f"factor indices must be strictly increasing, got {idx}")
        object.__setattr__(self, "indices", idx)

    @property
    def r(self) -> int:
        return len(self.indices)

    @property
    def columns(self) -> np.ndarray:
        """0-based column positions into a factor table."""
        return np.asarray(self.indices, dtype=np.intp) - 1

    def check(self, space: FactorSpace) -> None:
        if self.indices[-1] > space.n:
            raise ValueError(f"subset {self.indices} exceeds n={space.n}")

    def __iter__(self):
        return iter(self.indices)

    def __len__(self):
        return len(self.indices)

    def __str__(self):
        return "(" + ",".join(map(str, self.indices)) + ")"


@dataclass(frozen=True)
class FoldPartition:
    """Blocks S_1(N), ..., S_K(N) of 1-based sample indices."""

    N: int
    K: int
    blocks: tuple[tuple[int, ...], ...]

    def block0(self, k: int) -> np.ndarray:
        """0-based indices of block ``k`` (itself 0-based)."""
        return np.asarray(self.blocks[k], dtype=np.intp) - 1

    def complement0(self, k: int) -> np.ndarray:
        mask = np.ones(self.N, dtype=bool)
        mask[self.block0(k)] = False
        return np.flatnonzero(mask)

    def sizes(self) -> np.ndarray:
        return np.array([len(b) for b in self.blocks], dtype=np.int64)

    def fold_of(self) -> np.ndarray:
        """0-based fold label for every (0-based) sample."""
        out = np.empty(self.N, dtype=np.int64)
        for k in range(self.K):
            out[self.block0(k)] = k
        return out


def make_partition(N: int, K: int) -> FoldPartition:
    """Split {1..N} into K contiguous blocks of size floor(N/K), remainder in the last.

    >>> make_partition(10, 3).blocks
    ((1, 2, 3), (4, 5, 6), (7, 8, 9, 10))
    """
    N, K = int(N), int(K)
    if K <= 1:
        raise ValueError(f"fold count K must exceed 1, got {K}")
    if K > N:
        raise ValueError(f"fold count K={K} exceeds sample count N={N}")
    q = N // K
    blocks = []
    for k in range(1, K + 1):
        start = (k - 1) * q + 1
        stop = k * q if k < K else N
        blocks.append(tuple(range(start, stop + 1)))
    return FoldPartition(N=N, K=K, blocks=tuple(blocks))


@dataclass(frozen=True)
class PenaltyVector:
    """Nonnegative penalty psi(y) for y in {-m..m}, stored at position y + m."""

    values: np.ndarray
    m: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (2 * self.m + 1,):
            raise ValueError(f"penalty needs {2 * self.m + 1} entries, got shape {v.shape}")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("penalty values must be finite and nonnegative")
        if not np.any(v > 0):
            raise ValueError("penalty identically zero is excluded")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, m: int, c: float = 1.0) -> "PenaltyVector":
        return cls(np.full(2 * m + 1, float(c)), m)

    @classmethod
    def from_mapping(cls, mapping: dict[int, float], m: int) -> "PenaltyVector":
        vals = np.zeros(2 * m + 1)
        for y, v in mapping.items():
            vals[int(y) + m] = v
        return cls(vals, m)

    def __getitem__(self, y: int) -> float:
        return float(self.values[int(y) + self.m])

    def scaled(self, c: float) -> "PenaltyVector":
        return PenaltyVector(self.values * c, self.m)


@dataclass(frozen=True)
class Dataset:
    """N rows of factor codes (0..s) and responses (-m..m).

    Rows are i.i.d. draws by contract; nothing here can check that. ``metadata``
    carries free-form provenance such as the code-to-value map of a generator.
    """

    factors: np.ndarray
    responses: np.ndarray
    response_space: ResponseSpace
    factor_space: FactorSpace
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        X = np.ascontiguousarray(self.factors, dtype=np.uint8)
        y = np.ascontiguousarray(self.responses, dtype=np.int64)
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "factors", X)
        object.__setattr__(self, "responses", y)

    @property
    def N(self) -> int:
        return int(self.responses.shape[0])

    @property
    def n(self) -> int:
        return self.factor_space.n

    @property
    def m(self) -> int:
        return self.response_space.m

    @property
    def s(self) -> int:
        return self.factor_space.s

    def subset_rows(self, rows: np.ndarray) -> "Dataset":
        return Dataset(self.factors[rows], self.responses[rows], self.response_space,
                       self.factor_space, dict(self.metadata))


def validate_dataset(factors, responses, m: int, s: int, metadata: dict | None = None) -> Dataset:
    """Check a raw table against the spaces and build a :class:`Dataset`.

    Every out-of-range cell is collected before raising, so one call reports
    the whole damage rather than the first offending value.
    """
    X = np.asarray(factors)
    y = np.asarray(responses)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise DatasetValidationError("empty or non-rectangular factor table")
    if y.shape != (X.shape[0],):
        raise DatasetValidationError(
            f"response column has {y.shape[0] if y.ndim else 0} rows, factor table has {X.shape[0]}")
    rspace, fspace = ResponseSpace(m), FactorSpace(X.shape[1], s)
    problems: list[tuple[int, str, int]] = []
    bad_rows, bad_cols = np.nonzero((X < 0) | (X > s) | (X != np.round(X)))
    for i, j in zip(bad_rows, bad_cols):
        problems.append((int(i) + 1, f"x{j + 1}", X[i, j].item()))
    for i in np.flatnonzero((y < -m) | (y > m) | (y != np.round(y))):
        problems.append((int(i) + 1, "y", y[i].item()))
    if problems:
        problems.sort()
        head = "; ".join(f"row {r}, column {c}: {v}" for r, c, v in problems[:20])
        more = f" (+{len(problems) - 20} more)" if len(problems) > 20 else ""
        raise DatasetValidationError(f"{len(problems)} out-of-range cell(s): {head}{more}", problems)
    return Dataset(X.astype(np.uint8), y.astype(np.int64), rspace, fspace, dict(metadata or {}))


def n_subsets(n: int, r: int) -> int:
    return comb(n, r)


def read_dataset_csv(path, m: int, s: int, metadata: dict | None = None) -> Dataset:
    """Read ``x1,...,xn,y`` CSV. Spaces come from the caller (sidecar or flags)."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetValidationError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        n = len(header) - 1
        expected = [f"x{i}" for i in range(1, n + 1)] + ["y"]
        if n < 1 or header != expected:
            raise DatasetValidationError(f"{path}: header must be x1,...,xn,y; got {','.join(header)}")
        rows = []
        for lineno, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != n + 1:
                raise DatasetValidationError(f"{path}: row {lineno} has {len(row)} cells, expected {n + 1}")
            try:
                rows.append([int(v) for v in row])
            except ValueError:
                raise DatasetValidationError(f"{path}: row {lineno} has a non-integer cell") from None
    if not rows:
        raise DatasetValidationError(f"{path}: no data rows")
    table = np.array(rows, dtype=np.int64)
    return validate_dataset(table[:, :n], table[:, n], m=m, s=s, metadata=metadata)


def write_dataset_csv(data: Dataset, path) -> None:
    path = Path(path)
    header = ",".join([f"x{i}" for i in range(1, data.n + 1)] + ["y"])
    table = np.column_stack([data.factors.astype(np.int64), data.responses])
    lines = [header] + [",".join(map(str, row)) for row in table.tolist()]
    path.write_text("\n".join(lines) + "\n")


def encode_cells(factors: np.ndarray, base: int) -> np.ndarray:
    """Mixed-radix cell code of each row, first column most significant.

    Codes are ordered like the lexicographic order of the value tuples.
    """
    X = np.asarray(factors, dtype=np.int64)
    if X.ndim == 1:
        X = X[None, :]
    code = np.zeros(X.shape[0], dtype=np.int64)
    for t in range(X.shape[1]):
        code = code * base + X[:, t]
    return code


def decode_cell(code: int, base: int, r: int) -> tuple[int, ...]:
    digits = []
    for _ in range(r):
        code, d = divmod(int(code), base)
        digits.append(d)
    return tuple(reversed(digits))
