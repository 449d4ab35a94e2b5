"""Adaptive solve loop: mesh refinement around linearization around PCG.

The algorithm nests three loops.  On each mesh a damped fixed-point
linearization of the quasilinear operator is iterated; each linear system
is solved inexactly, one preconditioned CG step at a time; the error
estimator is recomputed after every step and drives both stopping tests
and the marking of elements for refinement.  The contraction factor of
the linearization and of the preconditioned solver are mesh independent,
so total work stays proportional to the cumulative number of elements.

Each executed solver step produces one StepRecord; a RunLog serializes to
CSV for the benchmark harness.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import algsolver as alg
from .estimator import EstimatorData, IndicatorField, doerfler_mark
from .fem import (DofMap, FeFunction, apply_nonlinear, assemble_laplacian,
                  assemble_rhs, evict_cache, prolongate)
from .mesh import create_initial, refine
from .nonlinearity import derived_constants
from .problems import ErrorData, get_problem


@dataclass(frozen=True)
class AdaptiveConfig:
    """Knobs of the adaptive run.

    theta is the bulk marking parameter; lambda_alg and lambda_pic scale
    the algebraic and linearization stopping tests against the estimator.
    The run stops after solving on the first mesh with at least
    max_elements elements (or once the estimator drops to eta_tol).
    uniform=True replaces marking by full refinement.  track_error adds a
    per-step energy error column when the exact solution is known;
    diagnostics additionally solves each linear system exactly to log the
    algebraic error and the combined quasi-error.
    """

    domain: str = "zshape"
    theta: float = 0.5
    lambda_alg: float = 1e-2
    lambda_pic: float = 1e-2
    max_elements: int = 10 ** 6
    eta_tol: float = 0.0
    uniform: bool = False
    track_error: bool = False
    diagnostics: bool = False
    precond: str = "multilevel"
    # safety valve only; theta = 0.1 legitimately needs ~700 levels per 1e5 elements
    max_levels: int = 10 ** 4
    max_picard_per_level: int = 10 ** 4
    max_pcg_per_linearization: int = 10 ** 4


@dataclass
class StepRecord:
    """One executed solver step (level l, linearization k, solver step j)."""

    l: int
    k: int
    j: int
    step: int
    nT: int
    eta: float
    alg_inc: float
    pic_inc: float
    cumcost: int
    alg_stop: int
    pic_stop: int
    err: Optional[float] = None
    delta: Optional[float] = None
    alg_err: Optional[float] = None


_BASE_COLUMNS = ("l", "k", "j", "step", "nT", "eta", "alg_inc", "pic_inc",
                 "cumcost", "alg_stop", "pic_stop")
_OPT_COLUMNS = ("err", "delta", "alg_err")
_INT_COLUMNS = {"l", "k", "j", "step", "nT", "cumcost", "alg_stop", "pic_stop"}


@dataclass
class RunLog:
    records: List[StepRecord] = field(default_factory=list)
    exit_reason: str = ""
    config: Optional[AdaptiveConfig] = None

    def final(self) -> StepRecord:
        if not self.records:
            raise ValueError("empty run log")
        return self.records[-1]

    def level_table(self) -> List[dict]:
        """Per-level summary from the accepted (last) step of each level."""
        rows = []
        for rec in self.records:
            if not rows or rows[-1]["l"] != rec.l:
                rows.append({"l": rec.l, "nT": rec.nT, "n_picard": rec.k,
                             "n_steps": 1, "eta": rec.eta, "cumcost": rec.cumcost,
                             "err": rec.err, "max_pcg": rec.j})
            else:
                row = rows[-1]
                row.update(n_picard=rec.k, n_steps=row["n_steps"] + 1,
                           eta=rec.eta, cumcost=rec.cumcost, err=rec.err,
                           max_pcg=max(row["max_pcg"], rec.j))
        return rows

    def columns(self) -> List[str]:
        cols = list(_BASE_COLUMNS)
        for name in _OPT_COLUMNS:
            if any(getattr(r, name) is not None for r in self.records):
                cols.append(name)
        return cols

    def to_csv(self, path=None) -> Optional[str]:
        cols = self.columns()
        buf = io.StringIO()
        buf.write(",".join(cols) + "\n")
        for rec in self.records:
            cells = []
            for name in cols:
                v = getattr(rec, name)
                if name in _INT_COLUMNS:
                    cells.append(str(int(v)))
                else:
                    cells.append("" if v is None else f"{v:.12g}")
            buf.write(",".join(cells) + "\n")
        text = buf.getvalue()
        if path is None:
            return text
        with open(path, "w") as fh:
            fh.write(text)
        return None

    @classmethod
    def from_csv(cls, source) -> "RunLog":
        if hasattr(source, "read"):
            text = source.read()
        else:
            with open(source) as fh:
                text = fh.read()
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty run log file")
        cols = lines[0].split(",")
        unknown = set(cols) - set(_BASE_COLUMNS) - set(_OPT_COLUMNS)
        if unknown or list(cols[:len(_BASE_COLUMNS)]) != list(_BASE_COLUMNS):
            raise ValueError(f"unrecognized run log header: {lines[0]!r}")
        records = []
        for ln in lines[1:]:
            cells = ln.split(",")
            kw = {}
            for name, cell in zip(cols, cells):
                if cell == "":
                    kw[name] = None
                elif name in _INT_COLUMNS:
                    kw[name] = int(cell)
                else:
                    kw[name] = float(cell)
            records.append(StepRecord(**kw))
        return cls(records=records)


def algebraic_stop(alg_inc: float, pic_inc: float, eta: float,
                   lambda_alg: float) -> bool:
    """Solver step accepted once its increment is estimator-small."""
    return alg_inc <= lambda_alg * (eta + pic_inc)


def picard_stop(pic_inc: float, eta: float, lambda_pic: float) -> bool:
    """Linearization accepted once its increment is estimator-small."""
    return pic_inc <= lambda_pic * eta


def picard_rhs(nl, operator, load: np.ndarray, u: FeFunction,
               damping: float) -> np.ndarray:
    """Right-hand side of the damped fixed-point linear system at u."""
    return operator @ u.coeffs + damping * (load - apply_nonlinear(nl, u))


def quasi_error(record: StepRecord) -> float:
    """Combined error measure: true error + algebraic error + estimator."""
    return (record.err or 0.0) + (record.alg_err or 0.0) + record.eta


def run_adaptive(config: AdaptiveConfig) -> RunLog:
    problem = get_problem(config.domain)
    nl = problem.nonlinearity
    damping = derived_constants(nl).damping
    track = config.track_error or config.diagnostics

    mesh = create_initial(problem.domain)
    dofmap = DofMap.from_mesh(mesh)
    u = FeFunction.zero(dofmap)
    if config.precond == "multilevel":
        pre = alg.build_preconditioner([mesh], [dofmap])
    elif config.precond == "identity":
        pre = alg.IdentityPreconditioner()
    else:
        raise ValueError(f"unknown preconditioner {config.precond!r}")

    log = RunLog(config=config)
    step = 0
    cumcost = 0
    for level in range(config.max_levels):
        operator = assemble_laplacian(dofmap)
        load = assemble_rhs(dofmap, problem.source, problem.neumann)
        est = EstimatorData(mesh, problem.source, problem.neumann)
        errdata = ErrorData(mesh, problem.exact) \
            if track and problem.exact is not None else None
        lu = alg.factorized(operator) if config.diagnostics else None

        x = u.coeffs
        vertex_values = np.zeros(mesh.n_vertices)
        squared = None
        k = 0
        while True:
            k += 1
            if k > config.max_picard_per_level:
                raise RuntimeError(f"linearization did not stop within "
                                   f"{config.max_picard_per_level} iterations")
            rhs = picard_rhs(nl, operator, load, FeFunction(dofmap, x), damping)
            xstar = lu(rhs) if lu is not None else None
            state = alg.init_solver_state(operator, rhs, x)
            while True:
                if state.iterations >= config.max_pcg_per_linearization:
                    raise RuntimeError(f"solver did not stop within "
                                       f"{config.max_pcg_per_linearization} steps")
                state = alg.pcg_step(state, pre)
                vertex_values[dofmap.free_vertices] = state.iterate
                squared = est.eval_squared(nl, vertex_values)
                eta = float(np.sqrt(squared.sum()))
                alg_inc = state.increment
                pic_inc = state.drift_norm()
                stop_alg = algebraic_stop(alg_inc, pic_inc, eta, config.lambda_alg)
                stop_pic = stop_alg and picard_stop(pic_inc, eta, config.lambda_pic)
                step += 1
                cumcost += mesh.n_triangles
                rec = StepRecord(l=level, k=k, j=state.iterations, step=step,
                                 nT=mesh.n_triangles, eta=eta, alg_inc=alg_inc,
                                 pic_inc=pic_inc, cumcost=cumcost,
                                 alg_stop=int(stop_alg), pic_stop=int(stop_pic))
                if errdata is not None:
                    rec.err = errdata.error(vertex_values)
                if config.diagnostics:
                    d = xstar - state.iterate
                    rec.alg_err = float(np.sqrt(max(d @ (operator @ d), 0.0)))
                    rec.delta = quasi_error(rec)
                log.records.append(rec)
                if stop_alg:
                    break
            x = state.iterate
            if stop_pic:
                break
        u = FeFunction(dofmap, x)

        eta_final = log.records[-1].eta
        if eta_final <= config.eta_tol:
            log.exit_reason = "eta_zero" if eta_final == 0.0 else "eta_tol"
            break
        if mesh.n_triangles >= config.max_elements:
            log.exit_reason = "budget"
            break
        if config.uniform:
            marked = np.arange(mesh.n_triangles)
        else:
            marked = doerfler_mark(IndicatorField(mesh, squared), config.theta)
        new_mesh = refine(mesh, marked)
        new_dofmap = DofMap.from_mesh(new_mesh)
        if config.precond == "multilevel":
            pre = pre.extended(new_dofmap)
        u = prolongate(u, new_dofmap)
        evict_cache(mesh)
        mesh, dofmap = new_mesh, new_dofmap
    else:
        log.exit_reason = "max_levels"
    return log
