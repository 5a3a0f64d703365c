"""Newton/continuation solver for the generalized Monge-Ampere equation.

The equation on the unit 2-torus is

    A11[u]*A22[u] - A12[u]^2 = E1 + E2*exp(F),

with affine second-order operator fields

    A11[u] = u_11 + B11*u_2 + C11 + D*u,
    A12[u] = u_12 + B12*u_2 + C12,
    A22[u] = u_22 + B22*u_2 + C22,

all subject to mean(u) = 0 and mean(exp(F)) = 1.  The solver embeds the
target in the homotopy with right-hand side E1 + (1-tau)*E2 + tau*E2*exp(F)
and marches tau from 0 (where u = 0 is exact, by the coefficient identity) to
1, warm-starting each stage and correcting with an exact-Jacobian Newton
iteration.  Each linear solve runs preconditioned GMRES on the zero-mean
subspace, with the constant-coefficient operator

    mean(A22)*d_11 + mean(A11)*d_22

inverted per Fourier mode (identity on the mean mode) as preconditioner.
Ellipticity (pointwise positivity of A11 and A22) is enforced along the whole
path by the line search, not just verified at solutions.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from . import grid as tg
from .errors import (GridMismatch, LinearSolveFailed, LineSearchFailed,
                     HomotopyFailed, UnnormalizedF)
from .grid import TorusField, TorusGrid
from .macoeffs import MACoefficients, check_hypotheses

JACOBIAN_EXACT = "exact"
# quasi-Newton variant: second-order coefficients A_ij[v] + C_ij and
# zeroth-order term D*(A22[v] + C22)
JACOBIAN_SHIFTED = "shifted"
JACOBIAN_MODES = (JACOBIAN_EXACT, JACOBIAN_SHIFTED)

F_NORMALIZATION_TOL = 1e-8


@dataclass(frozen=True)
class OperatorTriple:
    """The three operator fields A11[u], A12[u], A22[u]."""

    a11: TorusField
    a12: TorusField
    a22: TorusField


@dataclass(frozen=True)
class SolverConfig:
    n1: int = 64
    n2: int = 64
    backend: str = tg.SPECTRAL
    newton_tol: float = 1e-10
    max_newton: int = 30
    tau_steps: int = 8
    ls_shrink: float = 0.5
    ls_min_step: float = 1e-6
    linear_method: str = "gmres"
    linear_tol: float = 1e-12
    linear_max_iter: int = 500
    jacobian_mode: str = JACOBIAN_EXACT

    def __post_init__(self):
        TorusGrid(self.n1, self.n2)  # validates sizes
        if self.backend not in tg.BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.jacobian_mode not in JACOBIAN_MODES:
            raise ValueError(f"unknown jacobian mode {self.jacobian_mode!r}")
        for name in ("newton_tol", "ls_shrink", "ls_min_step", "linear_tol"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.tau_steps < 1:
            raise ValueError("tau_steps must be >= 1")

    @property
    def grid(self) -> TorusGrid:
        return TorusGrid(self.n1, self.n2)

    def to_dict(self) -> dict:
        return {
            "n1": self.n1, "n2": self.n2, "backend": self.backend,
            "newton_tol": self.newton_tol, "max_newton": self.max_newton,
            "tau_steps": self.tau_steps,
            "line_search": {"shrink": self.ls_shrink, "min_step": self.ls_min_step},
            "linear_solver": {"method": self.linear_method,
                              "tol": self.linear_tol,
                              "max_iter": self.linear_max_iter},
            "jacobian_mode": self.jacobian_mode,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SolverConfig":
        kw = {}
        for name in ("n1", "n2", "max_newton", "tau_steps"):
            if name in d:
                kw[name] = int(d[name])
        for name in ("backend", "jacobian_mode"):
            if name in d:
                kw[name] = str(d[name])
        if "newton_tol" in d:
            kw["newton_tol"] = float(d["newton_tol"])
        ls = d.get("line_search", {})
        if "shrink" in ls:
            kw["ls_shrink"] = float(ls["shrink"])
        if "min_step" in ls:
            kw["ls_min_step"] = float(ls["min_step"])
        lin = d.get("linear_solver", {})
        if "method" in lin:
            kw["linear_method"] = str(lin["method"])
        if "tol" in lin:
            kw["linear_tol"] = float(lin["tol"])
        if "max_iter" in lin:
            kw["linear_max_iter"] = int(lin["max_iter"])
        return cls(**kw)


@dataclass(frozen=True)
class StageRecord:
    tau: float
    newton_iterations: int
    residual_sup: float
    min_a11: float
    min_a22: float
    line_search_activations: int

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "newton_iterations": self.newton_iterations,
            "residual_sup": self.residual_sup,
            "min_a11": self.min_a11,
            "min_a22": self.min_a22,
            "line_search_activations": self.line_search_activations,
        }


@dataclass(frozen=True)
class SolveReport:
    stages: tuple[StageRecord, ...]
    final_residual_sup: float
    min_a11: float
    min_a22: float
    norms: tg.NormReport
    apriori_bound: float
    c2_within_bound: bool
    du_min: float
    du_lower_bound: float
    du_bound_ok: bool
    wall_time_s: float
    backend: str
    jacobian_mode: str

    def to_dict(self) -> dict:
        return {
            "stages": [s.to_dict() for s in self.stages],
            "final_residual_sup": self.final_residual_sup,
            "min_a11": self.min_a11,
            "min_a22": self.min_a22,
            "norms": {"c0": self.norms.c0, "c1": self.norms.c1, "c2": self.norms.c2},
            "apriori_bound": self.apriori_bound,
            "c2_within_bound": self.c2_within_bound,
            "du_min": self.du_min,
            "du_lower_bound": self.du_lower_bound,
            "du_bound_ok": self.du_bound_ok,
            "wall_time_s": self.wall_time_s,
            "backend": self.backend,
            "jacobian_mode": self.jacobian_mode,
        }


def operator_fields(u: TorusField, c: MACoefficients, backend: str = tg.SPECTRAL) -> OperatorTriple:
    """Evaluate the three affine operator fields at u."""
    d2u = tg.derivative(u, 2, 1, backend)
    a11 = (tg.derivative(u, 1, 2, backend).values + c.B11 * d2u.values
           + c.C11 + c.D * u.values)
    a12 = tg.mixed_second(u, backend).values + c.B12 * d2u.values + c.C12
    a22 = tg.derivative(u, 2, 2, backend).values + c.B22 * d2u.values + c.C22
    g = u.grid
    return OperatorTriple(TorusField(g, a11), TorusField(g, a12), TorusField(g, a22))


def _check_normalized(F: TorusField) -> np.ndarray:
    expF = np.exp(F.values)
    defect = abs(float(expF.mean()) - 1.0)
    if defect > F_NORMALIZATION_TOL:
        raise UnnormalizedF(
            f"mean(exp(F)) - 1 = {defect:.3e}; apply normalize_F first")
    return expF


def residual(u: TorusField, c: MACoefficients, F: TorusField, tau: float,
             backend: str = tg.SPECTRAL) -> TorusField:
    """Homotopy residual A11*A22 - A12^2 - E1 - (1-tau)*E2 - tau*E2*exp(F)."""
    tg.require_same_grid(u, F)
    expF = _check_normalized(F)
    ops = operator_fields(u, c, backend)
    T = (ops.a11.values * ops.a22.values - ops.a12.values**2
         - c.E1 - (1.0 - tau) * c.E2 - tau * c.E2 * expF)
    return TorusField(u.grid, T)


def ellipticity(u: TorusField, c: MACoefficients, backend: str = tg.SPECTRAL) -> tuple[float, float]:
    """Pointwise minima of A11[u] and A22[u] over the grid."""
    ops = operator_fields(u, c, backend)
    return float(ops.a11.values.min()), float(ops.a22.values.min())


def _apply_jacobian_values(ops: OperatorTriple, w: np.ndarray, c: MACoefficients,
                           gr: TorusGrid, backend: str, mode: str) -> np.ndarray:
    wf = TorusField(gr, w)
    d2w = tg.derivative(wf, 2, 1, backend).values
    d11w = tg.derivative(wf, 1, 2, backend).values
    d22w = tg.derivative(wf, 2, 2, backend).values
    d12w = tg.mixed_second(wf, backend).values
    a11, a12, a22 = ops.a11.values, ops.a12.values, ops.a22.values
    if mode == JACOBIAN_EXACT:
        return (a22 * (d11w + c.B11 * d2w + c.D * w)
                + a11 * (d22w + c.B22 * d2w)
                - 2.0 * a12 * (d12w + c.B12 * d2w))
    s11, s12, s22 = a11 + c.C11, a12 + c.C12, a22 + c.C22
    return (s22 * d11w - 2.0 * s12 * d12w + s11 * d22w
            + (c.B11 * s22 - 2.0 * c.B12 * s12 + c.B22 * s11) * d2w
            + c.D * s22 * w)


def apply_jacobian(v: TorusField, w: TorusField, c: MACoefficients,
                   backend: str = tg.SPECTRAL, mode: str = JACOBIAN_EXACT) -> TorusField:
    """Apply the linearized operator at v to the direction w.

    ``exact`` is the Frechet derivative of u -> A11[u]*A22[u] - A12[u]^2 (its
    coefficients are the operator fields themselves); ``shifted`` is the
    quasi-Newton variant with coefficients A_ij[v] + C_ij and zeroth-order
    term D*(A22[v] + C22).
    """
    if mode not in JACOBIAN_MODES:
        raise ValueError(f"unknown jacobian mode {mode!r}")
    tg.require_same_grid(v, w)
    ops = operator_fields(v, c, backend)
    out = _apply_jacobian_values(ops, w.values, c, v.grid, backend, mode)
    return TorusField(v.grid, out)


def _second_derivative_symbol(n: int, backend: str) -> np.ndarray:
    if backend == tg.SPECTRAL:
        w = 2.0 * np.pi * np.fft.fftfreq(n, d=1.0 / n)
        return -(w * w)
    k = np.arange(n)
    return (2.0 * np.cos(2.0 * np.pi * k / n) - 2.0) * float(n) * float(n)


def _solve_newton_correction(ops: OperatorTriple, c: MACoefficients, gr: TorusGrid,
                             backend: str, mode: str, rhs: np.ndarray,
                             cfg: SolverConfig) -> tuple[np.ndarray, int]:
    """Solve L w = rhs on the zero-mean subspace by preconditioned GMRES."""
    n1, n2 = gr.shape
    N = n1 * n2
    m_a11 = float(ops.a11.values.mean())
    m_a22 = float(ops.a22.values.mean())
    denom = (m_a22 * _second_derivative_symbol(n1, backend)[:, None]
             + m_a11 * _second_derivative_symbol(n2, backend)[None, :])
    denom[0, 0] = 1.0  # identity on the mean mode

    def matvec(x):
        w = x.reshape(gr.shape)
        wm = w.mean()
        w0 = w - wm
        y = _apply_jacobian_values(ops, w0, c, gr, backend, mode)
        return (y - y.mean() + wm).ravel()

    def precond(x):
        r = x.reshape(gr.shape)
        rm = r.mean()
        z = np.fft.ifft2(np.fft.fft2(r - rm) / denom).real
        return (z - z.mean() + rm).ravel()

    A = LinearOperator((N, N), matvec=matvec, dtype=np.float64)
    M = LinearOperator((N, N), matvec=precond, dtype=np.float64)
    iters = 0

    def count(_):
        nonlocal iters
        iters += 1

    restart = min(100, N)
    maxiter = max(1, -(-cfg.linear_max_iter // restart))
    x, info = gmres(A, rhs.ravel(), rtol=cfg.linear_tol, atol=0.0,
                    restart=restart, maxiter=maxiter, M=M,
                    callback=count, callback_type="pr_norm")
    if info != 0:
        raise LinearSolveFailed(f"GMRES stalled (info={info}, {iters} iterations)")
    w = x.reshape(gr.shape)
    return w - w.mean(), iters


def _newton_iterate(u: TorusField, ops: OperatorTriple, res: TorusField, rsup: float,
                    c: MACoefficients, F: TorusField, tau: float,
                    cfg: SolverConfig):
    """One Newton correction with ellipticity-preserving backtracking.

    Returns (u_next, ops_next, res_next, stats); raises LineSearchFailed when
    no step down to ls_min_step is admissible.
    """
    if not (ops.a11.values.min() > 0.0 and ops.a22.values.min() > 0.0):
        raise AssertionError("newton step requires pointwise positive A11 and A22")
    rhs = -(res.values - res.values.mean())
    w, kiters = _solve_newton_correction(ops, c, u.grid, cfg.backend,
                                         cfg.jacobian_mode, rhs, cfg)
    s = 1.0
    backtracks = 0
    while s >= cfg.ls_min_step:
        u_try = TorusField(u.grid, u.values + s * w)
        u_try = tg.project_zero_mean(u_try)
        ops_try = operator_fields(u_try, c, cfg.backend)
        if ops_try.a11.values.min() > 0.0 and ops_try.a22.values.min() > 0.0:
            res_try = residual(u_try, c, F, tau, cfg.backend)
            rsup_try = res_try.sup()
            if rsup_try <= rsup:
                stats = {
                    "residual_before": rsup,
                    "residual_after": rsup_try,
                    "krylov_iterations": kiters,
                    "step_size": s,
                    "backtracks": backtracks,
                }
                return u_try, ops_try, res_try, rsup_try, stats
        s *= cfg.ls_shrink
        backtracks += 1
    raise LineSearchFailed(
        f"no admissible step at tau={tau:.6f} (residual sup {rsup:.3e})")


def newton_step(u: TorusField, c: MACoefficients, F: TorusField, tau: float,
                cfg: SolverConfig) -> tuple[TorusField, dict]:
    """Public single Newton step; see _newton_iterate for the contract."""
    ops = operator_fields(u, c, cfg.backend)
    res = residual(u, c, F, tau, cfg.backend)
    u_next, _, _, _, stats = _newton_iterate(u, ops, res, res.sup(), c, F, tau, cfg)
    return u_next, stats


def _newton_stage(u: TorusField, c: MACoefficients, F: TorusField, tau: float,
                  cfg: SolverConfig):
    """Newton-iterate at fixed tau until the residual sup meets newton_tol.

    Returns (u, StageRecord, converged); LineSearchFailed/LinearSolveFailed
    propagate to the continuation driver.
    """
    ops = operator_fields(u, c, cfg.backend)
    res = residual(u, c, F, tau, cfg.backend)
    rsup = res.sup()
    iterations = 0
    activations = 0
    while rsup > cfg.newton_tol and iterations < cfg.max_newton:
        u, ops, res, rsup, stats = _newton_iterate(u, ops, res, rsup, c, F, tau, cfg)
        iterations += 1
        activations += stats["backtracks"]
    record = StageRecord(
        tau=tau,
        newton_iterations=iterations,
        residual_sup=rsup,
        min_a11=float(ops.a11.values.min()),
        min_a22=float(ops.a22.values.min()),
        line_search_activations=activations,
    )
    return u, record, rsup <= cfg.newton_tol


MIN_TAU_STEP = 1e-4


def apriori_bound(c: MACoefficients) -> float:
    """Solution-independent C^2 bound: 2(|B11|+1)|B22|exp(2 C22) + C11 + C22."""
    return float(2.0 * (abs(c.B11) + 1.0) * abs(c.B22) * np.exp(2.0 * c.C22)
                 + c.C11 + c.C22)


def continuity_solve(c: MACoefficients, F: TorusField,
                     cfg: SolverConfig) -> tuple[TorusField, SolveReport]:
    """March tau from 0 to 1 and return the zero-mean solution at tau = 1.

    The schedule is uniform with 1/tau_steps increments, halved after a
    failed stage and doubled back (up to the uniform step) after a success.
    Raises HomotopyFailed if the increment underflows 1e-4.
    """
    hyp = check_hypotheses(c)
    if not hyp.valid:
        names = ", ".join(name for name, _, _ in hyp.violations)
        raise ValueError(f"coefficient hypotheses fail: {names}")
    if F.grid != cfg.grid:
        raise GridMismatch(
            f"F lives on {F.grid.shape} but the config requests {cfg.grid.shape}")
    _check_normalized(F)

    t_start = time.perf_counter()
    u = tg.zeros(cfg.grid)
    stages = []

    # tau = 0: u = 0 is exact thanks to C11*C22 - C12^2 = E1 + E2
    u, record, ok = _newton_stage(u, c, F, 0.0, cfg)
    stages.append(record)
    if not ok:
        raise HomotopyFailed("stage tau=0 did not converge; "
                             "coefficient identities are out of tolerance",
                             last_tau=0.0, last_field=u, stages=stages)

    tau = 0.0
    dt_uniform = 1.0 / cfg.tau_steps
    dt = dt_uniform
    while tau < 1.0:
        target = min(tau + dt, 1.0)
        try:
            u_new, record, ok = _newton_stage(u, c, F, target, cfg)
        except (LineSearchFailed, LinearSolveFailed):
            ok = False
        if ok:
            u = u_new
            tau = target
            stages.append(record)
            dt = min(2.0 * dt, dt_uniform)
        else:
            dt *= 0.5
            if dt < MIN_TAU_STEP:
                raise HomotopyFailed(
                    f"continuation step underflowed below {MIN_TAU_STEP} at "
                    f"tau={tau:.6f}", last_tau=tau, last_field=u, stages=stages)

    wall = time.perf_counter() - t_start
    final = stages[-1]
    norms = tg.sup_norms(u, cfg.backend)
    bound = apriori_bound(c)
    du = c.D * u.values
    du_min = float(du.min())
    du_lower = -c.C11  # minimum-principle bound: C11 + D*u > 0 at solutions
    report = SolveReport(
        stages=tuple(stages),
        final_residual_sup=final.residual_sup,
        min_a11=final.min_a11,
        min_a22=final.min_a22,
        norms=norms,
        apriori_bound=bound,
        c2_within_bound=norms.max() <= bound,
        du_min=du_min,
        du_lower_bound=du_lower,
        du_bound_ok=du_min >= du_lower - 1e-6,
        wall_time_s=wall,
        backend=cfg.backend,
        jacobian_mode=cfg.jacobian_mode,
    )
    return u, report
