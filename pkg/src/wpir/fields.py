"""Exact arithmetic over prime fields GF(q) and dense linear algebra.

Everything here is exact: no floating point, no tolerances.  Elements are
immutable and safe to share across threads.
"""
from __future__ import annotations

from dataclasses import dataclass, field


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def smallest_prime_at_least(n: int) -> int:
    """Smallest prime >= n (used to pick a default modulus per instance)."""
    p = max(n, 2)
    while not is_prime(p):
        p += 1
    return p


class PrimeField:
    """The field of integers modulo a prime q."""

    __slots__ = ("q",)

    def __init__(self, q: int):
        if not is_prime(q):
            raise ValueError(f"modulus {q} is not prime")
        self.q = q

    def __call__(self, value: int) -> FieldElement:
        return FieldElement(value % self.q, self)

    def zero(self) -> FieldElement:
        return FieldElement(0, self)

    def one(self) -> FieldElement:
        return FieldElement(1, self)

    def elements(self):
        """All q elements, in residue order."""
        for v in range(self.q):
            yield FieldElement(v, self)

    def __eq__(self, other):
        return isinstance(other, PrimeField) and self.q == other.q

    def __hash__(self):
        return hash(("PrimeField", self.q))

    def __repr__(self):
        return f"GF({self.q})"


class FieldElement:
    """A residue in [0:q-1] tagged with its field.

    Elements of different fields never combine; mixing raises ValueError.
    """

    __slots__ = ("value", "field")

    def __init__(self, value: int, fld: PrimeField):
        self.value = value % fld.q
        self.field = fld

    def _coerce(self, other) -> "FieldElement":
        if isinstance(other, FieldElement):
            if other.field != self.field:
                raise ValueError(
                    f"cannot combine elements of {self.field} and {other.field}"
                )
            return other
        if isinstance(other, int):
            return FieldElement(other, self.field)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return FieldElement(self.value + o.value, self.field)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return FieldElement(self.value - o.value, self.field)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return FieldElement(o.value - self.value, self.field)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return FieldElement(self.value * o.value, self.field)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElement(-self.value, self.field)

    def inverse(self) -> "FieldElement":
        if self.value == 0:
            raise ZeroDivisionError(f"0 has no inverse in {self.field}")
        # Fermat: a^(q-2) = a^-1 for prime q
        return FieldElement(pow(self.value, self.field.q - 2, self.field.q), self.field)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return o * self.inverse()

    def __eq__(self, other):
        if isinstance(other, FieldElement):
            return self.value == other.value and self.field == other.field
        if isinstance(other, int):
            return self.value == other % self.field.q
        return NotImplemented

    def __hash__(self):
        return hash((self.value, self.field.q))

    def __bool__(self):
        return self.value != 0

    def __int__(self):
        return self.value

    def __repr__(self):
        return f"{self.value}"


class FieldMatrix:
    """A rectangular matrix of FieldElements over one field."""

    __slots__ = ("rows", "cols", "field", "_data")

    def __init__(self, data):
        rows = [tuple(r) for r in data]
        if not rows or not rows[0]:
            raise ValueError("matrix must be nonempty")
        ncols = len(rows[0])
        fld = rows[0][0].field
        for r in rows:
            if len(r) != ncols:
                raise ValueError("ragged rows")
            for e in r:
                if not isinstance(e, FieldElement) or e.field != fld:
                    raise ValueError("all entries must share one field")
        self._data = tuple(rows)
        self.rows = len(rows)
        self.cols = ncols
        self.field = fld

    @classmethod
    def from_ints(cls, data, fld: PrimeField) -> "FieldMatrix":
        return cls([[fld(v) for v in row] for row in data])

    @classmethod
    def identity(cls, n: int, fld: PrimeField) -> "FieldMatrix":
        return cls.from_ints([[1 if i == j else 0 for j in range(n)] for i in range(n)], fld)

    @classmethod
    def zeros(cls, rows: int, cols: int, fld: PrimeField) -> "FieldMatrix":
        return cls.from_ints([[0] * cols for _ in range(rows)], fld)

    def __getitem__(self, idx) -> FieldElement:
        i, j = idx
        return self._data[i][j]

    def row(self, i: int):
        return self._data[i]

    def column(self, j: int):
        return tuple(self._data[i][j] for i in range(self.rows))

    def to_ints(self) -> list[list[int]]:
        return [[e.value for e in r] for r in self._data]

    def __matmul__(self, other: "FieldMatrix") -> "FieldMatrix":
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch: {self.rows}x{self.cols} @ {other.rows}x{other.cols}")
        z = self.field.zero()
        out = []
        for i in range(self.rows):
            out.append([
                sum((self._data[i][t] * other._data[t][j] for t in range(self.cols)), z)
                for j in range(other.cols)
            ])
        return FieldMatrix(out)

    def __add__(self, other: "FieldMatrix") -> "FieldMatrix":
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("shape mismatch")
        return FieldMatrix([
            [self._data[i][j] + other._data[i][j] for j in range(self.cols)]
            for i in range(self.rows)
        ])

    def submatrix(self, row_idx, col_idx) -> "FieldMatrix":
        return FieldMatrix([[self._data[i][j] for j in col_idx] for i in row_idx])

    def __eq__(self, other):
        return (
            isinstance(other, FieldMatrix)
            and self._data == other._data
        )

    def __hash__(self):
        return hash(self._data)

    def __repr__(self):
        body = "; ".join(" ".join(str(e) for e in r) for r in self._data)
        return f"FieldMatrix[{body}]"


def mat_vec(a: FieldMatrix, v) -> tuple:
    """a @ v for a plain sequence v of FieldElements."""
    if a.cols != len(v):
        raise ValueError("shape mismatch")
    z = a.field.zero()
    return tuple(sum((a[i, j] * v[j] for j in range(a.cols)), z) for i in range(a.rows))


@dataclass(frozen=True)
class LinearSolution:
    """Reduced-echelon description of the solution set of A x = b.

    status is "unique", "underdetermined" or "infeasible".  For feasible
    systems, `solution` is the particular solution with free variables set
    to zero, and `determined[v]` says whether unknown v takes the same
    value in every solution.
    """

    status: str
    pivot_cols: tuple[int, ...]
    free_cols: tuple[int, ...]
    solution: tuple | None
    determined: tuple[bool, ...]
    reduced_rows: tuple = field(repr=False, default=())
    reduced_rhs: tuple = field(repr=False, default=())

    @property
    def is_feasible(self) -> bool:
        return self.status != "infeasible"


def solve_linear(a: FieldMatrix, b) -> LinearSolution:
    """Gaussian elimination of [A | b] over GF(q) to reduced echelon form.

    Pivots on the first nonzero entry in each column.  Inconsistency is
    reported through the status, never raised.
    """
    if a.rows != len(b):
        raise ValueError(f"A has {a.rows} rows but b has {len(b)} entries")
    fld = a.field
    n = a.cols
    rows = [list(a.row(i)) + [b[i]] for i in range(a.rows)]

    pivot_cols: list[int] = []
    pivot_of_col: dict[int, int] = {}
    r = 0
    for c in range(n):
        pr = next((i for i in range(r, len(rows)) if rows[i][c].value != 0), None)
        if pr is None:
            continue
        rows[r], rows[pr] = rows[pr], rows[r]
        inv = rows[r][c].inverse()
        rows[r] = [e * inv for e in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c].value != 0:
                f = rows[i][c]
                rows[i] = [ei - f * ej for ei, ej in zip(rows[i], rows[r])]
        pivot_of_col[c] = r
        pivot_cols.append(c)
        r += 1
        if r == len(rows):
            break

    # a zero row with nonzero rhs means the system is inconsistent
    for i in range(r, len(rows)):
        if rows[i][n].value != 0:
            return LinearSolution(
                status="infeasible",
                pivot_cols=tuple(pivot_cols),
                free_cols=tuple(c for c in range(n) if c not in pivot_of_col),
                solution=None,
                determined=tuple(False for _ in range(n)),
            )

    free_cols = tuple(c for c in range(n) if c not in pivot_of_col)
    zero = fld.zero()
    sol = [zero] * n
    determined = [False] * n
    for c in pivot_cols:
        row = rows[pivot_of_col[c]]
        sol[c] = row[n]
        # unique iff the pivot row involves no free variable
        determined[c] = all(row[fc].value == 0 for fc in free_cols)
    status = "unique" if not free_cols else "underdetermined"
    return LinearSolution(
        status=status,
        pivot_cols=tuple(pivot_cols),
        free_cols=free_cols,
        solution=tuple(sol),
        determined=tuple(determined),
        reduced_rows=tuple(tuple(row[:n]) for row in rows[:r]),
        reduced_rhs=tuple(rows[i][n] for i in range(r)),
    )
