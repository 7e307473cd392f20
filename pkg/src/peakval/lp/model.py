from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

LE, EQ, GE = "<", "=", ">"


class LpError(RuntimeError):
    pass


class NumericalError(LpError):
    """The solver stopped without a certified termination state."""


@dataclass(frozen=True)
class Tolerances:
    feasibility: float = 1e-7  # absolute
    optimality: float = 1e-6  # relative


@dataclass(frozen=True)
class Sos2Set:
    """Ordered variable indices of which at most two adjacent ones may be nonzero.

    ``weights`` orders the members for branching; by default the position in
    the set is used.
    """

    indices: tuple[int, ...]
    weights: tuple[float, ...] | None = None

    def __post_init__(self):
        if len(self.indices) < 2:
            raise ValueError("an SOS-2 set needs at least 2 members")
        if len(set(self.indices)) != len(self.indices):
            raise ValueError("SOS-2 members must be distinct")
        if self.weights is not None and len(self.weights) != len(self.indices):
            raise ValueError("weights must match indices")

    def __len__(self) -> int:
        return len(self.indices)

    @property
    def weight_array(self) -> np.ndarray:
        if self.weights is None:
            return np.arange(len(self.indices), dtype=float)
        return np.asarray(self.weights, dtype=float)


@dataclass(frozen=True, eq=False)
class LpModel:
    """``min c.x + offset`` subject to ``A x (sense) rhs`` and ``lb <= x <= ub``."""

    c: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    A: sp.csr_matrix
    sense: np.ndarray  # one of "<", "=", ">" per row
    rhs: np.ndarray
    offset: float = 0.0
    names: tuple[str, ...] | None = None
    row_names: tuple[str, ...] | None = None

    @property
    def n_vars(self) -> int:
        return self.c.size

    @property
    def n_rows(self) -> int:
        return self.rhs.size

    def errors(self) -> list[str]:
        errs = []
        n = self.c.size
        if self.lb.size != n or self.ub.size != n:
            errs.append("bound arrays must match the variable count")
        elif np.any(self.lb > self.ub):
            bad = np.flatnonzero(self.lb > self.ub)
            errs.append(f"lower bound exceeds upper bound for variables {bad.tolist()[:10]}")
        if self.A.shape != (self.rhs.size, n):
            errs.append(f"constraint matrix shape {self.A.shape} != ({self.rhs.size}, {n})")
        if self.sense.size != self.rhs.size:
            errs.append("sense and rhs lengths differ")
        elif not np.all(np.isin(self.sense, (LE, EQ, GE))):
            errs.append("sense entries must be '<', '=' or '>'")
        if np.any(np.isnan(self.c)) or np.any(np.isnan(self.rhs)):
            errs.append("NaN in objective or right-hand side")
        return errs

    def check(self) -> LpModel:
        errs = self.errors()
        if errs:
            raise ValueError("; ".join(errs))
        return self

    def with_bounds(self, lb: np.ndarray | None = None, ub: np.ndarray | None = None) -> LpModel:
        return replace(
            self,
            lb=self.lb if lb is None else lb,
            ub=self.ub if ub is None else ub,
        )

    def with_objective(self, c: np.ndarray, offset: float = 0.0) -> LpModel:
        return replace(self, c=np.asarray(c, dtype=float), offset=offset)

    def add_rows(self, A_new, sense_new, rhs_new) -> LpModel:
        A_new = sp.csr_matrix(A_new, shape=(len(rhs_new), self.n_vars))
        row_names = None
        if self.row_names is not None:
            row_names = self.row_names + tuple(
                f"r{i}" for i in range(self.n_rows, self.n_rows + len(rhs_new))
            )
        return replace(
            self,
            A=sp.vstack([self.A, A_new], format="csr"),
            sense=np.concatenate([self.sense, np.asarray(sense_new)]),
            rhs=np.concatenate([self.rhs, np.asarray(rhs_new, dtype=float)]),
            row_names=row_names,
        )

    def permute_rows(self, order) -> LpModel:
        order = np.asarray(order)
        return replace(
            self,
            A=self.A[order],
            sense=self.sense[order],
            rhs=self.rhs[order],
            row_names=None if self.row_names is None else tuple(self.row_names[i] for i in order),
        )


@dataclass
class LpSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    objective: float = float("nan")
    x: np.ndarray = field(default_factory=lambda: np.empty(0))
    activities: np.ndarray = field(default_factory=lambda: np.empty(0))
    iterations: int = 0
    nodes: int = 1
    message: str = ""

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


class LpBuilder:
    """Incremental assembly of an :class:`LpModel` from column blocks and COO rows."""

    def __init__(self):
        self._lb: list[np.ndarray] = []
        self._ub: list[np.ndarray] = []
        self._c: list[np.ndarray] = []
        self._names: list[str] = []
        self.n_vars = 0
        self._rows: list[np.ndarray] = []
        self._cols: list[np.ndarray] = []
        self._vals: list[np.ndarray] = []
        self._sense: list[np.ndarray] = []
        self._rhs: list[np.ndarray] = []
        self._row_names: list[str] = []
        self.n_rows = 0
        self.offset = 0.0

    def add_vars(self, n: int, lb=0.0, ub=np.inf, cost=0.0, name: str = "x") -> np.ndarray:
        idx = np.arange(self.n_vars, self.n_vars + n)
        self._lb.append(np.broadcast_to(np.asarray(lb, dtype=float), (n,)).copy())
        self._ub.append(np.broadcast_to(np.asarray(ub, dtype=float), (n,)).copy())
        self._c.append(np.broadcast_to(np.asarray(cost, dtype=float), (n,)).copy())
        self._names.extend(f"{name}_{k}" if n > 1 else name for k in range(n))
        self.n_vars += n
        return idx

    def add_var(self, lb=0.0, ub=np.inf, cost=0.0, name: str = "x") -> int:
        return int(self.add_vars(1, lb, ub, cost, name)[0])

    def add_rows(self, rows, cols, vals, sense, rhs, name: str = "c") -> np.ndarray:
        """Append ``len(rhs)`` constraints given as COO triplets with local row ids."""
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
        k = rhs.size
        sense = np.broadcast_to(np.asarray(sense), (k,))
        self._rows.append(np.asarray(rows, dtype=np.int64) + self.n_rows)
        self._cols.append(np.asarray(cols, dtype=np.int64))
        self._vals.append(np.asarray(vals, dtype=float))
        self._sense.append(np.asarray(sense).copy())
        self._rhs.append(rhs)
        self._row_names.extend(f"{name}_{i}" if k > 1 else name for i in range(k))
        ids = np.arange(self.n_rows, self.n_rows + k)
        self.n_rows += k
        return ids

    def add_row(self, cols, vals, sense, rhs, name: str = "c") -> int:
        cols = np.atleast_1d(cols)
        return int(self.add_rows(np.zeros(len(cols), dtype=int), cols, vals, sense, [rhs], name)[0])

    def build(self) -> LpModel:
        def cat(parts, dtype=float):
            return np.concatenate(parts) if parts else np.empty(0, dtype=dtype)

        rows, cols, vals = cat(self._rows, int), cat(self._cols, int), cat(self._vals)
        A = sp.csr_matrix((vals, (rows, cols)), shape=(self.n_rows, self.n_vars))
        A.sum_duplicates()
        return LpModel(
            c=cat(self._c),
            lb=cat(self._lb),
            ub=cat(self._ub),
            A=A,
            sense=cat(self._sense, "<U1").astype("<U1") if self._sense else np.empty(0, "<U1"),
            rhs=cat(self._rhs),
            offset=self.offset,
            names=tuple(self._names),
            row_names=tuple(self._row_names),
        )
