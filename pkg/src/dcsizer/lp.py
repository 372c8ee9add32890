"""Solver-agnostic linear programs: sparse construction, solving, export.

A :class:`LinearProgram` is built from named variable blocks (any array
shape) and tagged constraint blocks added as vectorized triplets, so building
stays O(nonzeros) even for millions of rows.  The finished program can be
handed to the bundled HiGHS backend (via scipy), exported as an
industry-standard LP file for any external solver, or solved in exact mode by
branch-and-bound on designated exclusivity indicators.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

LESS_EQUAL = -1
EQUAL = 0
GREATER_EQUAL = 1

_SENSE_TEXT = {LESS_EQUAL: "<=", EQUAL: "=", GREATER_EQUAL: ">="}

_STATUS_BY_CODE = {0: "optimal", 1: "iteration_limit", 2: "infeasible",
                   3: "unbounded", 4: "failed"}


class SolverError(RuntimeError):
    """Base class for solver-layer failures."""


class BackendFailure(SolverError):
    """The LP backend crashed, hit a limit, or returned garbage."""


@dataclass(frozen=True)
class VariableBlock:
    """A named, contiguously indexed group of decision variables."""

    name: str
    shape: tuple[int, ...]
    start: int

    @property
    def size(self) -> int:
        return int(np.prod(self.shape)) if self.shape else 1

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.start, self.start + self.size,
                         dtype=np.intp).reshape(self.shape)


@dataclass(frozen=True)
class SolveOptions:
    """Backend knobs; defaults favor tight feasibility over speed."""

    method: str = "highs"
    feasibility_tol: float = 1e-9
    presolve: bool = True
    time_limit: float | None = None


@dataclass(frozen=True, eq=False)
class LpResult:
    """Outcome of one LP solve."""

    status: str
    objective: float | None
    x: np.ndarray | None
    max_residual: float
    wall_time: float
    iterations: int
    message: str = ""


class LinearProgram:
    """Incrementally built sparse LP: min c'x s.t. Ax {<=,=,>=} b, lb<=x<=ub."""

    def __init__(self, name: str = "problem"):
        self.name = name
        self._blocks: dict[str, VariableBlock] = {}
        self._lb: list[np.ndarray] = []
        self._ub: list[np.ndarray] = []
        self._n_vars = 0
        self._obj_idx: list[np.ndarray] = []
        self._obj_coef: list[np.ndarray] = []
        self._rows_i: list[np.ndarray] = []
        self._cols: list[np.ndarray] = []
        self._data: list[np.ndarray] = []
        self._senses: list[np.ndarray] = []
        self._rhs: list[np.ndarray] = []
        self._n_rows = 0
        self._row_blocks: dict[str, tuple[int, int]] = {}

    # -- variables ----------------------------------------------------------

    def add_variable(self, name: str, shape: tuple[int, ...] | int = (),
                     lower=-np.inf, upper=np.inf) -> np.ndarray:
        """Register a variable block; returns its index array (scalar shape ok)."""
        if name in self._blocks:
            raise ValueError(f"variable block {name!r} already registered")
        if isinstance(shape, int):
            shape = (shape,)
        block = VariableBlock(name=name, shape=tuple(shape), start=self._n_vars)
        self._blocks[name] = block
        size = block.size
        self._lb.append(np.broadcast_to(np.asarray(lower, dtype=float), (size,)).ravel().copy()
                        if np.ndim(lower) == 0
                        else np.asarray(lower, dtype=float).reshape(size).copy())
        self._ub.append(np.broadcast_to(np.asarray(upper, dtype=float), (size,)).ravel().copy()
                        if np.ndim(upper) == 0
                        else np.asarray(upper, dtype=float).reshape(size).copy())
        self._n_vars += size
        return block.indices

    def variable(self, name: str) -> VariableBlock:
        return self._blocks[name]

    @property
    def variable_blocks(self) -> dict[str, VariableBlock]:
        return dict(self._blocks)

    @property
    def n_variables(self) -> int:
        return self._n_vars

    @property
    def n_constraints(self) -> int:
        return self._n_rows

    @property
    def constraint_blocks(self) -> dict[str, tuple[int, int]]:
        """Tag -> (first row, row count); records what each block encodes."""
        return dict(self._row_blocks)

    # -- objective ----------------------------------------------------------

    def add_objective(self, indices: np.ndarray, coefficients) -> None:
        """Accumulate linear objective terms (repeated indices add up)."""
        idx = np.asarray(indices, dtype=np.intp).ravel()
        coef = np.broadcast_to(np.asarray(coefficients, dtype=float),
                               np.asarray(indices).shape).ravel()
        self._obj_idx.append(idx)
        self._obj_coef.append(coef.copy())

    # -- constraints ---------------------------------------------------------

    def add_block(self, tag: str,
                  terms: Sequence[tuple[np.ndarray, object]],
                  sense: int, rhs) -> None:
        """Add a tagged block of constraints, one row per leading index.

        Each term is ``(indices, coefficients)`` with indices of shape (R,)
        or (R, L); row r reads ``sum_t coef_t[r, :] . x[idx_t[r, :]]``.
        ``rhs`` is scalar or shape (R,).  Rows of one block are contiguous.
        """
        if tag in self._row_blocks:
            raise ValueError(f"constraint block {tag!r} already added")
        if sense not in _SENSE_TEXT:
            raise ValueError(f"sense must be one of {sorted(_SENSE_TEXT)}, got {sense!r}")
        n_rows = None
        for idx, _ in terms:
            rows = int(np.asarray(idx).shape[0])
            if n_rows is None:
                n_rows = rows
            elif rows != n_rows:
                raise ValueError(f"{tag}: term row counts differ ({rows} vs {n_rows})")
        if n_rows is None or n_rows == 0:
            raise ValueError(f"{tag}: block has no rows")

        for idx, coef in terms:
            idx = np.asarray(idx, dtype=np.intp)
            if idx.ndim == 1:
                idx = idx[:, None]
            elif idx.ndim != 2:
                raise ValueError(f"{tag}: term indices must be 1-D or 2-D")
            coef = np.broadcast_to(np.asarray(coef, dtype=float), idx.shape)
            self._rows_i.append(np.repeat(np.arange(n_rows, dtype=np.intp) + self._n_rows,
                                          idx.shape[1]))
            self._cols.append(idx.ravel())
            self._data.append(coef.ravel().copy())
        self._senses.append(np.full(n_rows, sense, dtype=np.int8))
        self._rhs.append(np.broadcast_to(np.asarray(rhs, dtype=float), (n_rows,)).copy())
        self._row_blocks[tag] = (self._n_rows, n_rows)
        self._n_rows += n_rows

    # -- assembly -------------------------------------------------------------

    def build(self) -> tuple[np.ndarray, sparse.csr_matrix, np.ndarray, np.ndarray,
                             np.ndarray, np.ndarray]:
        """Materialize (c, A, senses, rhs, lb, ub)."""
        c = np.zeros(self._n_vars)
        if self._obj_idx:
            np.add.at(c, np.concatenate(self._obj_idx), np.concatenate(self._obj_coef))
        if self._rows_i:
            matrix = sparse.coo_matrix(
                (np.concatenate(self._data),
                 (np.concatenate(self._rows_i), np.concatenate(self._cols))),
                shape=(self._n_rows, self._n_vars)).tocsr()
        else:
            matrix = sparse.csr_matrix((0, self._n_vars))
        senses = (np.concatenate(self._senses) if self._senses
                  else np.zeros(0, dtype=np.int8))
        rhs = np.concatenate(self._rhs) if self._rhs else np.zeros(0)
        lb = np.concatenate(self._lb) if self._lb else np.zeros(0)
        ub = np.concatenate(self._ub) if self._ub else np.zeros(0)
        return c, matrix, senses, rhs, lb, ub

    # -- export ---------------------------------------------------------------

    def _variable_names(self) -> list[str]:
        names = [""] * self._n_vars
        for block in self._blocks.values():
            if block.shape == ():
                names[block.start] = block.name
                continue
            for flat, multi in enumerate(np.ndindex(block.shape)):
                names[block.start + flat] = block.name + "_" + "_".join(map(str, multi))
        return names

    def write_lp_file(self, path) -> None:
        """Write the program in CPLEX LP text format for external solvers."""
        c, matrix, senses, rhs, lb, ub = self.build()
        names = self._variable_names()
        matrix = matrix.tocsr()
        row_names = [""] * self._n_rows
        for tag, (start, count) in self._row_blocks.items():
            for r in range(count):
                row_names[start + r] = f"{tag}_{r}"

        def term_text(coef: float, name: str) -> str:
            sign = "-" if coef < 0 else "+"
            return f" {sign} {abs(coef):.12g} {name}"

        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(f"\\ LP export of {self.name}\n")
            handle.write("Minimize\n obj:")
            wrote_any = False
            for j in np.flatnonzero(c):
                handle.write(term_text(c[j], names[j]))
                wrote_any = True
            if not wrote_any:
                handle.write(" 0 " + (names[0] if names else "x0"))
            handle.write("\nSubject To\n")
            for r in range(self._n_rows):
                handle.write(f" {row_names[r]}:")
                begin, end = matrix.indptr[r], matrix.indptr[r + 1]
                for j, value in zip(matrix.indices[begin:end], matrix.data[begin:end]):
                    handle.write(term_text(value, names[j]))
                handle.write(f" {_SENSE_TEXT[int(senses[r])]} {rhs[r]:.12g}\n")
            handle.write("Bounds\n")
            for j, name in enumerate(names):
                low, high = lb[j], ub[j]
                if np.isneginf(low) and np.isposinf(high):
                    handle.write(f" {name} free\n")
                elif np.isneginf(low):
                    handle.write(f" -inf <= {name} <= {high:.12g}\n")
                elif np.isposinf(high):
                    handle.write(f" {name} >= {low:.12g}\n")
                else:
                    handle.write(f" {low:.12g} <= {name} <= {high:.12g}\n")
            handle.write("End\n")


# ---------------------------------------------------------------------------
# Residuals
# ---------------------------------------------------------------------------

def constraint_residuals(program: LinearProgram, x: np.ndarray,
                         built=None) -> dict[str, float]:
    """Max violation per constraint block (0 when satisfied)."""
    c, matrix, senses, rhs, lb, ub = built if built is not None else program.build()
    ax = matrix @ x
    violation = np.where(
        senses == EQUAL, np.abs(ax - rhs),
        np.where(senses == LESS_EQUAL, np.maximum(ax - rhs, 0.0),
                 np.maximum(rhs - ax, 0.0)))
    out = {}
    for tag, (start, count) in program.constraint_blocks.items():
        out[tag] = float(violation[start:start + count].max()) if count else 0.0
    bound_violation = np.maximum(lb - x, 0.0) + np.maximum(x - ub, 0.0)
    out["variable_bounds"] = float(bound_violation.max()) if x.size else 0.0
    return out


# ---------------------------------------------------------------------------
# HiGHS backend
# ---------------------------------------------------------------------------

def _linprog_options(options: SolveOptions) -> dict:
    opts: dict = {"presolve": options.presolve}
    if options.method in ("highs", "highs-ds"):
        opts["primal_feasibility_tolerance"] = options.feasibility_tol
        opts["dual_feasibility_tolerance"] = options.feasibility_tol
    elif options.method == "highs-ipm":
        opts["primal_feasibility_tolerance"] = options.feasibility_tol
        opts["dual_feasibility_tolerance"] = options.feasibility_tol
        opts["ipm_optimality_tolerance"] = max(options.feasibility_tol, 1e-12)
    if options.time_limit is not None:
        opts["time_limit"] = options.time_limit
    return opts


def solve_linear(program: LinearProgram, options: SolveOptions | None = None,
                 bounds_override: tuple[np.ndarray, np.ndarray] | None = None,
                 built=None) -> LpResult:
    """Solve with HiGHS through scipy.optimize.linprog.

    ``bounds_override`` substitutes (lb, ub) without rebuilding the matrix —
    used by branch-and-bound.  Raises BackendFailure only for backend
    crashes; infeasible/unbounded outcomes come back as statuses.
    """
    options = options or SolveOptions()
    c, matrix, senses, rhs, lb, ub = built if built is not None else program.build()
    if bounds_override is not None:
        lb, ub = bounds_override

    ineq = senses != EQUAL
    flip = np.where(senses == GREATER_EQUAL, -1.0, 1.0)
    a_ub = sparse.diags(flip[ineq]) @ matrix[ineq] if ineq.any() else None
    b_ub = (flip[ineq] * rhs[ineq]) if ineq.any() else None
    eq = senses == EQUAL
    a_eq = matrix[eq] if eq.any() else None
    b_eq = rhs[eq] if eq.any() else None

    begin = time.perf_counter()
    try:
        result = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                         bounds=np.column_stack((lb, ub)),
                         method=options.method,
                         options=_linprog_options(options))
    except Exception as exc:   # scipy raises on malformed input only
        raise BackendFailure(f"LP backend raised: {exc}") from exc
    wall = time.perf_counter() - begin

    status = _STATUS_BY_CODE.get(result.status, "failed")
    x = np.asarray(result.x, dtype=float) if result.x is not None else None
    if status == "optimal" and x is None:
        raise BackendFailure("backend reported optimal without a solution vector")
    max_residual = 0.0
    if x is not None:
        residuals = constraint_residuals(program, x, built=(c, matrix, senses, rhs, lb, ub))
        max_residual = max(residuals.values(), default=0.0)
    iterations = int(getattr(result, "nit", 0) or 0)
    objective = float(result.fun) if result.fun is not None else None
    return LpResult(status=status, objective=objective, x=x,
                    max_residual=max_residual, wall_time=wall,
                    iterations=iterations, message=str(result.message))


# ---------------------------------------------------------------------------
# Exact mode: branch-and-bound on exclusivity indicators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExclusivityFamily:
    """Variables whose positive/negative parts must not overlap.

    ``positive``/``negative``/``indicator`` are aligned flat index arrays:
    overlap of entry i is min(x[positive[i]], -x[negative[i]]), and fixing
    indicator[i] to 0 (or 1) shuts the negative (positive) side.
    """

    name: str
    positive: np.ndarray
    negative: np.ndarray
    indicator: np.ndarray


def _worst_overlap(x: np.ndarray, families: Sequence[ExclusivityFamily]
                   ) -> tuple[float, int | None, int | None]:
    worst, family_idx, entry = 0.0, None, None
    for f_idx, fam in enumerate(families):
        overlap = np.minimum(x[fam.positive], -x[fam.negative])
        i = int(np.argmax(overlap))
        if overlap[i] > worst:
            worst, family_idx, entry = float(overlap[i]), f_idx, i
    return worst, family_idx, entry


def solve_exact(program: LinearProgram, families: Sequence[ExclusivityFamily],
                options: SolveOptions | None = None, overlap_tol: float = 1e-6,
                max_nodes: int = 10_000) -> LpResult:
    """Branch-and-bound to a solution whose splits are truly exclusive.

    Solves the continuous relaxation; while some charge/discharge or
    import/export pair overlaps beyond ``overlap_tol``, branches on that
    pair's indicator (0 = positive branch only, 1 = negative branch only).
    Nodes are pruned against the incumbent objective.
    """
    options = options or SolveOptions()
    built = program.build()
    lb0, ub0 = built[4], built[5]

    incumbent: LpResult | None = None
    root_status: str | None = None
    stack: list[list[tuple[int, float]]] = [[]]
    nodes = 0
    while stack:
        if nodes >= max_nodes:
            raise BackendFailure(f"branch-and-bound exceeded {max_nodes} nodes")
        fixes = stack.pop()
        nodes += 1
        lb, ub = lb0.copy(), ub0.copy()
        for var, value in fixes:
            lb[var] = ub[var] = value
        result = solve_linear(program, options, bounds_override=(lb, ub), built=built)
        if nodes == 1:
            root_status = result.status
        if result.status != "optimal":
            continue
        if incumbent is not None and incumbent.objective is not None \
                and result.objective >= incumbent.objective - 1e-12 * max(1.0, abs(incumbent.objective)):
            continue
        worst, family_idx, entry = _worst_overlap(result.x, families)
        if worst <= overlap_tol:
            incumbent = result
            continue
        fam = families[family_idx]
        z = int(fam.indicator[entry])
        stack.append(fixes + [(z, 0.0)])
        stack.append(fixes + [(z, 1.0)])

    if incumbent is not None:
        return incumbent
    status = root_status if root_status not in (None, "optimal") else "infeasible"
    return LpResult(status=status, objective=None, x=None, max_residual=np.inf,
                    wall_time=0.0, iterations=nodes,
                    message="no node produced an exclusive optimal solution")
