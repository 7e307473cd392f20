"""Plain-text dump in CPLEX LP layout, for cross-checking against external solvers.

Layout written by :func:`write_lp`::

    \\ offset <constant objective term>
    Minimize
     obj: <coef> <var> + ...
    Subject To
     <row>: <coef> <var> + ... <= | = | >= <rhs>
    Bounds
     <lb> <= <var> <= <ub>        (or "<var> free", "-inf"/"+inf" for open sides)
    SOS
     <name>: S2:: <var>:<weight> ...
    End

Variables are named ``x<i>`` and rows ``r<i>`` by position.
:func:`read_lp` parses exactly this layout back.
"""

from __future__ import annotations

import re
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .model import EQ, GE, LE, LpModel, Sos2Set

_SENSE_OUT = {LE: "<=", EQ: "=", GE: ">="}
_SENSE_IN = {"<=": LE, "=": EQ, ">=": GE}


def _fmt(v: float) -> str:
    if v == np.inf:
        return "+inf"
    if v == -np.inf:
        return "-inf"
    return repr(float(v))


def _terms(cols, vals, names) -> str:
    parts = []
    for j, v in zip(cols, vals):
        sign = "-" if v < 0 else "+"
        parts.append(f"{sign} {_fmt(abs(v))} {names[j]}")
    if not parts:
        return "0"
    s = " ".join(parts)
    return s[2:] if s.startswith("+ ") else s


def write_lp(m: LpModel, path: str | Path, sos: Sequence[Sos2Set] = ()) -> None:
    names = [f"x{i}" for i in range(m.n_vars)]
    rnames = [f"r{i}" for i in range(m.n_rows)]
    nz = np.flatnonzero(m.c)
    lines = [f"\\ offset {_fmt(m.offset)}", "Minimize", f" obj: {_terms(nz, m.c[nz], names)}", "Subject To"]
    A = m.A.tocsr()
    for i in range(m.n_rows):
        lo, hi = A.indptr[i], A.indptr[i + 1]
        lines.append(
            f" {rnames[i]}: {_terms(A.indices[lo:hi], A.data[lo:hi], names)} "
            f"{_SENSE_OUT[m.sense[i]]} {_fmt(m.rhs[i])}"
        )
    lines.append("Bounds")
    for j in range(m.n_vars):
        lb, ub = m.lb[j], m.ub[j]
        if lb == -np.inf and ub == np.inf:
            lines.append(f" {names[j]} free")
        else:
            lines.append(f" {_fmt(lb)} <= {names[j]} <= {_fmt(ub)}")
    if sos:
        lines.append("SOS")
        for k, s in enumerate(sos):
            members = " ".join(f"{names[j]}:{_fmt(w)}" for j, w in zip(s.indices, s.weight_array))
            lines.append(f" s{k}: S2:: {members}")
    lines.append("End")
    Path(path).write_text("\n".join(lines) + "\n")


_TERM = re.compile(r"([+-]?)\s*([0-9.eE+\-]+|[+-]?inf)\s+x(\d+)")


def _parse_terms(expr: str, n: int) -> dict[int, float]:
    out: dict[int, float] = {}
    expr = expr.strip()
    if expr == "0":
        return out
    for sign, coef, var in _TERM.findall(expr):
        v = float(coef)
        out[int(var)] = out.get(int(var), 0.0) + (-v if sign == "-" else v)
    return out


def read_lp(path: str | Path) -> tuple[LpModel, list[Sos2Set]]:
    text = Path(path).read_text().splitlines()
    offset = 0.0
    section = None
    obj: dict[int, float] = {}
    rows: list[tuple[dict[int, float], str, float]] = []
    bounds: dict[int, tuple[float, float]] = {}
    sos: list[Sos2Set] = []
    for raw in text:
        line = raw.strip()
        if not line:
            continue
        if line.startswith("\\ offset"):
            offset = float(line.split()[-1])
            continue
        if line in ("Minimize", "Subject To", "Bounds", "SOS", "End"):
            section = line
            continue
        if section == "Minimize":
            obj = _parse_terms(line.split(":", 1)[1], 0)
        elif section == "Subject To":
            body = line.split(":", 1)[1]
            mt = re.search(r"(<=|>=|=)\s*(\S+)$", body)
            rows.append((_parse_terms(body[: mt.start()], 0), _SENSE_IN[mt.group(1)], float(mt.group(2))))
        elif section == "Bounds":
            if line.endswith("free"):
                bounds[int(line.split()[0][1:])] = (-np.inf, np.inf)
            else:
                lo, _, var, _, hi = line.split()
                bounds[int(var[1:])] = (float(lo), float(hi))
        elif section == "SOS":
            members = line.split("S2::", 1)[1].split()
            idx, w = zip(*(mem.split(":") for mem in members))
            sos.append(Sos2Set(tuple(int(i[1:]) for i in idx), tuple(float(v) for v in w)))
    n = max([*obj.keys(), *bounds.keys(), *(j for r in rows for j in r[0])], default=-1) + 1
    c = np.zeros(n)
    for j, v in obj.items():
        c[j] = v
    lb = np.zeros(n)
    ub = np.full(n, np.inf)
    for j, (lo, hi) in bounds.items():
        lb[j], ub[j] = lo, hi
    r_idx, c_idx, vals = [], [], []
    for i, (terms, _, _) in enumerate(rows):
        for j, v in terms.items():
            r_idx.append(i)
            c_idx.append(j)
            vals.append(v)
    A = sp.csr_matrix((vals, (r_idx, c_idx)), shape=(len(rows), n))
    model = LpModel(
        c=c,
        lb=lb,
        ub=ub,
        A=A,
        sense=np.array([r[1] for r in rows], dtype="<U1"),
        rhs=np.array([r[2] for r in rows], dtype=float),
        offset=offset,
    )
    return model, sos
