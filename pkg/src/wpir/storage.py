"""File model and per-server encoded columns with appended dummy rows.

Effective parameters (n, k) are N, K reduced by gcd(N, K); each file is a
lambda x K matrix with lambda = n - k.  Every server stores, per file, the
lambda encoded data rows followed by k all-zero dummy rows, so query row
indices range over [0:n-1].  Row indices are 0-based; server and file
indices are 1-based.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .fields import FieldMatrix, PrimeField
from .mds import MdsCode, encode_row


@dataclass(frozen=True)
class EffectiveParams:
    """Reduced code parameters: n = N/gcd, k = K/gcd, r = lam = n - k."""

    n: int
    k: int
    r: int
    lam: int

    def __post_init__(self):
        assert math.gcd(self.n, self.k) == 1
        assert self.r == self.lam == self.n - self.k >= 1


def effective_params(n_servers: int, dim: int) -> EffectiveParams:
    if not n_servers > dim >= 1:
        raise ValueError(f"need N > K >= 1, got N={n_servers}, K={dim}")
    g = math.gcd(n_servers, dim)
    n, k = n_servers // g, dim // g
    return EffectiveParams(n=n, k=k, r=n - k, lam=n - k)


class FileSet:
    """M independent files, each a lambda x K matrix over one field."""

    __slots__ = ("m_files", "files", "field")

    def __init__(self, files):
        files = tuple(files)
        if not files:
            raise ValueError("need at least one file")
        shape = (files[0].rows, files[0].cols)
        fld = files[0].field
        for f in files:
            if (f.rows, f.cols) != shape or f.field != fld:
                raise ValueError("files must share dimensions and field")
        self.m_files = len(files)
        self.files = files
        self.field = fld

    def file(self, m: int) -> FieldMatrix:
        if not 1 <= m <= self.m_files:
            raise ValueError(f"file index {m} outside [1:{self.m_files}]")
        return self.files[m - 1]

    @classmethod
    def random(cls, m_files: int, lam: int, dim: int, fld: PrimeField, seed: int) -> "FileSet":
        """Pseudo-random files from a seed, for reproducible retrieval tests."""
        rng = random.Random(seed)
        return cls(
            FieldMatrix.from_ints(
                [[rng.randrange(fld.q) for _ in range(dim)] for _ in range(lam)], fld
            )
            for _ in range(m_files)
        )

    @classmethod
    def zeros(cls, m_files: int, lam: int, dim: int, fld: PrimeField) -> "FileSet":
        return cls(FieldMatrix.zeros(lam, dim, fld) for _ in range(m_files))

    @classmethod
    def from_text(cls, text: str, fld: PrimeField) -> "FileSet":
        """Parse files from plain text: one row per line, space-separated
        residues mod q, files separated by blank lines."""
        blocks, current = [], []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                if current:
                    blocks.append(current)
                    current = []
                continue
            current.append([int(tok) % fld.q for tok in line.split()])
        if current:
            blocks.append(current)
        if not blocks:
            raise ValueError("no file data found")
        return cls(FieldMatrix.from_ints(b, fld) for b in blocks)


class EncodedStorage:
    """Per-server stacked columns of M blocks, each n rows.

    Rows [0:lam-1] of block m at server j are the code symbols of file m;
    rows [lam:n-1] are the dummy zero rows.
    """

    __slots__ = ("code", "params", "file_set", "columns")

    def __init__(self, code: MdsCode, params: EffectiveParams, file_set: FileSet, columns):
        self.code = code
        self.params = params
        self.file_set = file_set
        self.columns = columns

    @property
    def n_servers(self) -> int:
        return self.code.n_total

    @property
    def m_files(self) -> int:
        return self.file_set.m_files

    def symbol(self, m: int, row: int, j: int) -> "FieldElement":
        """Stored symbol of file m at row index row in [0:n-1], server j."""
        n = self.params.n
        if not 1 <= m <= self.m_files:
            raise ValueError(f"file index {m} outside [1:{self.m_files}]")
        if not 0 <= row < n:
            raise ValueError(f"row {row} outside [0:{n - 1}]")
        return self.columns[j - 1][(m - 1) * n + row]


def encode_storage(file_set: FileSet, code: MdsCode) -> EncodedStorage:
    params = effective_params(code.n_total, code.dim)
    lam, k = params.lam, params.k
    f0 = file_set.files[0]
    if (f0.rows, f0.cols) != (lam, code.dim):
        raise ValueError(
            f"files are {f0.rows}x{f0.cols} but code needs {lam}x{code.dim}"
        )
    if file_set.field != code.field:
        raise ValueError("file field differs from code field")
    zero = code.field.zero()
    encoded = [
        [encode_row(code, f.row(i)) for i in range(lam)] for f in file_set.files
    ]
    columns = tuple(
        tuple(
            encoded[m][i][j] if i < lam else zero
            for m in range(file_set.m_files)
            for i in range(lam + k)
        )
        for j in range(code.n_total)
    )
    return EncodedStorage(code, params, file_set, columns)


def server_column(storage: EncodedStorage, j: int) -> tuple:
    """The j-th stacked column (M blocks of n rows each), read-only."""
    if not 1 <= j <= storage.n_servers:
        raise ValueError(f"server index {j} outside [1:{storage.n_servers}]")
    return storage.columns[j - 1]
