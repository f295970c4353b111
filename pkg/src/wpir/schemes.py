"""Strategy alphabets, query encoders, answers, and time sharing.

A strategy drawn from the scheme's alphabet is expanded into one k x M
query matrix per server; each server returns one sub-response per query
row, suppressing rows that touch only dummy storage.  Time sharing
rotates the per-server encoders by a uniform cyclic shift, which makes
leakage identical at every server.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from itertools import permutations, product

from .storage import EffectiveParams, effective_params


class SchemeKind(str, Enum):
    ZYQT = "zyqt"
    ZTSL = "ztsl"
    OLR = "olr"


@dataclass(frozen=True)
class PermSelector:
    """A column of k pairwise-distinct row indices in [0:n-1]."""

    entries: tuple[int, ...]

    def __post_init__(self):
        if len(set(self.entries)) != len(self.entries):
            raise ValueError(f"entries must be distinct, got {self.entries}")

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def __iter__(self):
        return iter(self.entries)

    def shifted(self, d: int, n: int) -> "PermSelector":
        return PermSelector(tuple((e + d) % n for e in self.entries))


def enumerate_pnk(n: int, k: int) -> tuple[PermSelector, ...]:
    """All n!/(n-k)! ordered k-selections from [0:n-1], lexicographic."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    return tuple(PermSelector(p) for p in permutations(range(n), k))


@dataclass(frozen=True)
class StrategyAlphabet:
    """The ordered strategy set S for one scheme and one (n, k, M)."""

    kind: SchemeKind
    n: int
    k: int
    m_files: int
    members: tuple

    @property
    def size(self) -> int:
        return len(self.members)


def enumerate_strategies(kind: SchemeKind, n: int, k: int, m_files: int) -> StrategyAlphabet:
    """Build the full alphabet in canonical (lexicographic) member order."""
    kind = SchemeKind(kind)
    if m_files < 1:
        raise ValueError("need at least one file")
    if kind is SchemeKind.ZTSL:
        members = tuple(
            v for v in product(range(n), repeat=m_files) if sum(v) % n == 0
        )
    elif kind is SchemeKind.ZYQT:
        selectors = enumerate_pnk(n, k)
        members = tuple(product(selectors, repeat=m_files))
    elif kind is SchemeKind.OLR:
        selectors = enumerate_pnk(n, k)
        members = tuple(
            tup
            for tup in product(selectors, repeat=m_files - 1)
            if _olr_implied_column(tup, n, k, shift=0) is not None
        )
    else:  # pragma: no cover - SchemeKind() above rejects unknown kinds
        raise ValueError(f"unknown scheme kind {kind!r}")
    return StrategyAlphabet(kind=kind, n=n, k=k, m_files=m_files, members=members)


def _olr_implied_column(selectors, n: int, k: int, shift: int):
    """((shift)*1 - sum of selectors) mod n, or None if entries collide."""
    entries = tuple(
        (shift - sum(sel[i] for sel in selectors)) % n for i in range(k)
    )
    if len(set(entries)) != len(entries):
        return None
    return entries


def zyqt_size(n: int, k: int, m_files: int) -> int:
    return math.perm(n, k) ** m_files


def ztsl_size(n: int, m_files: int) -> int:
    return n ** (m_files - 1)


@dataclass(frozen=True)
class QueryMatrix:
    """A k x M matrix of row indices in [0:n-1], row-major."""

    rows: tuple[tuple[int, ...], ...]

    @property
    def k_rows(self) -> int:
        return len(self.rows)

    @property
    def m_cols(self) -> int:
        return len(self.rows[0])

    def entry(self, i: int, m: int) -> int:
        """Row i (0-based), file column m (1-based)."""
        return self.rows[i][m - 1]

    def column(self, m: int) -> tuple[int, ...]:
        return tuple(r[m - 1] for r in self.rows)


def _from_columns(cols) -> QueryMatrix:
    k = len(cols[0])
    return QueryMatrix(tuple(tuple(c[i] for c in cols) for i in range(k)))


@dataclass(frozen=True)
class SchemeInstance:
    """One (M, N, K) scheme: parameters plus its strategy alphabet."""

    kind: SchemeKind
    m_files: int
    n_servers: int
    dim: int
    params: EffectiveParams
    alphabet: StrategyAlphabet


def make_scheme(kind: SchemeKind, m_files: int, n_servers: int, dim: int) -> SchemeInstance:
    kind = SchemeKind(kind)
    params = effective_params(n_servers, dim)
    alphabet = enumerate_strategies(kind, params.n, params.k, m_files)
    return SchemeInstance(
        kind=kind,
        m_files=m_files,
        n_servers=n_servers,
        dim=dim,
        params=params,
        alphabet=alphabet,
    )


def _check_indices(inst: SchemeInstance, m: int, j: int):
    if not 1 <= m <= inst.m_files:
        raise ValueError(f"file index {m} outside [1:{inst.m_files}]")
    if not 1 <= j <= inst.n_servers:
        raise ValueError(f"server index {j} outside [1:{inst.n_servers}]")


def query_zyqt(inst: SchemeInstance, m: int, s, j: int) -> QueryMatrix:
    """Desired column shifted by j-1 (mod n); other columns verbatim."""
    _check_indices(inst, m, j)
    n = inst.params.n
    cols = [
        tuple(sel.shifted(j - 1, n)) if mm == m else tuple(sel)
        for mm, sel in enumerate(s, start=1)
    ]
    return _from_columns(cols)


def query_ztsl(inst: SchemeInstance, m: int, s, j: int) -> QueryMatrix:
    """Row i = (s + (j-1) e_m + i) mod n: a k-step staircase on the base row."""
    _check_indices(inst, m, j)
    n, k = inst.params.n, inst.params.k
    base = tuple(
        (v + (j - 1 if mm == m else 0)) % n for mm, v in enumerate(s, start=1)
    )
    return QueryMatrix(
        tuple(tuple((v + i) % n for v in base) for i in range(k))
    )


def query_olr(inst: SchemeInstance, m: int, s, j: int) -> QueryMatrix:
    """Position m holds ((j-1)*1 - sum of the strategy columns) mod n."""
    _check_indices(inst, m, j)
    n, k = inst.params.n, inst.params.k
    implied = _olr_implied_column(s, n, k, shift=j - 1)
    if implied is None:  # pragma: no cover - alphabet membership prevents this
        raise ValueError("strategy has a colliding implied column")
    cols = [tuple(sel) for sel in s]
    cols.insert(m - 1, implied)
    return _from_columns(cols)


_QUERY_FNS = {
    SchemeKind.ZYQT: query_zyqt,
    SchemeKind.ZTSL: query_ztsl,
    SchemeKind.OLR: query_olr,
}


def base_query(inst: SchemeInstance, m: int, s, j: int) -> QueryMatrix:
    return _QUERY_FNS[inst.kind](inst, m, s, j)


def cyclic_shift(j: int, l: int, n_servers: int) -> int:
    """sigma^l(j) = ((j-1+l) mod N) + 1."""
    return ((j - 1 + l) % n_servers) + 1


def time_shared_query(inst: SchemeInstance, m: int, s, t: int, j: int) -> QueryMatrix:
    """Server j receives the base query of server sigma^(t-1)(j)."""
    if not 1 <= t <= inst.n_servers:
        raise ValueError(f"shift {t} outside [1:{inst.n_servers}]")
    return base_query(inst, m, s, cyclic_shift(j, t - 1, inst.n_servers))


def transmitted_rows(q: QueryMatrix, params: EffectiveParams) -> tuple[int, ...]:
    """Sub-response indices that touch at least one data row (index < lam)."""
    lam = params.lam
    return tuple(i for i, row in enumerate(q.rows) if min(row) < lam)


def answer_length(q: QueryMatrix, params: EffectiveParams) -> int:
    """Number of transmitted sub-responses for query q."""
    return len(transmitted_rows(q, params))


def answer(q: QueryMatrix, column, params: EffectiveParams) -> tuple:
    """Transmitted sub-responses, in row order.

    Sub-response i sums, over files, the stored symbol at the queried
    row; rows whose every index lands in dummy storage are suppressed.
    """
    n = params.n
    m_files = q.m_cols
    if len(column) != m_files * n:
        raise ValueError(
            f"column has {len(column)} entries, expected M*n = {m_files * n}"
        )
    zero_like = column[0] - column[0]
    out = []
    for i in transmitted_rows(q, params):
        total = zero_like
        for m in range(1, m_files + 1):
            total = total + column[(m - 1) * n + q.entry(i, m)]
        out.append(total)
    return tuple(out)
