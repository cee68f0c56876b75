"""Optimization engines for the precoding design.

Layers, bottom up:

* `solve_qp` — primal active-set method for strictly convex QPs with linear
  inequality constraints, warm-startable in both the point and the working
  set (the constraint polytope is fixed across a whole design, only the
  objective moves).
* `bps` — binary penalty search: bisection on a penalty weight that folds
  the single quadratic energy constraint into the QP objective; the
  doubling phase makes the initial bracket self-calibrating.
* `solve_ipm` — log-barrier interior-point reference; also the only engine
  for per-antenna energy budgets.
* `minorization_solve` / `sca_solve` — the outer loops: iterate a touching
  quadratic surrogate (fast early progress) or a linearization plus exact
  line search (better final objective), both over the same feasible set.

Solver diagnostics stream as plain-text log lines on the module logger, one
per outer iteration: `iter=<k> f=<...> mmse=<...> energy=<...>
min_margin=<...>`, and per BPS probe: `rho=<...> f_o=<...> f_p=<...>`.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.optimize import linprog

from .channel import Dimensions, EffectiveChannel
from .ci import (
    CISystem,
    EnergyForm,
    SymbolBlock,
    ci_margins,
    realify_linear,
    realify_quadratic,
    stack_complex,
    unstack_real,
)
from .pulse import PulseTables
from .sensing import SensingLift, lift, minorizer, mmse_objective, sca_gradient

log = logging.getLogger("ftnslp.solver")

__all__ = [
    "QpProblem",
    "QcqpProblem",
    "SolveReport",
    "DesignProblem",
    "Solution",
    "solve_qp",
    "bps",
    "solve_ipm",
    "line_search",
    "minorization_solve",
    "sca_solve",
]

RHO_CAP = 2.0**60


@dataclass(frozen=True)
class QpProblem:
    """min x^T hessian x + 2 x^T linear  s.t.  ineq_mat x <= ineq_rhs."""

    hessian: np.ndarray
    linear: np.ndarray
    ineq_mat: np.ndarray
    ineq_rhs: np.ndarray


@dataclass(frozen=True)
class QcqpProblem:
    """QP base plus one quadratic budget x^T quad_mat x <= quad_budget.

    `per_antenna` optionally replaces the single budget with a list of
    (PSD matrix, budget) pairs; only the interior-point engine accepts it.
    """

    base: QpProblem
    quad_mat: np.ndarray
    quad_budget: float
    per_antenna: list | None = None


@dataclass
class SolveReport:
    solution: np.ndarray | None
    objective: float
    active_set: list
    iterations: int
    wall_time: float
    status: str  # optimal | infeasible | iteration-limit
    penalty: float | None = None
    kkt_residual: float | None = None
    probes: list | None = None  # (rho, f_objective, f_penalty) per BPS probe
    diagnostics: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Active-set QP
# ---------------------------------------------------------------------------


def _phase1(psi: np.ndarray, gamma: np.ndarray):
    """LP feasibility: min t s.t. psi x - t <= gamma. Returns x or None."""
    m, n = psi.shape
    c = np.zeros(n + 1)
    c[-1] = 1.0
    a_ub = np.hstack([psi, -np.ones((m, 1))])
    bounds = [(None, None)] * n + [(-1.0, None)]
    res = linprog(c, A_ub=a_ub, b_ub=gamma, bounds=bounds, method="highs")
    if not res.success or res.x is None:
        return None
    if res.x[-1] > 1e-9 * max(1.0, np.abs(gamma).max()):
        return None
    return res.x[:n]


def solve_qp(
    problem: QpProblem,
    ridge: float = 0.0,
    x0: np.ndarray | None = None,
    active0: list | None = None,
    max_iter: int | None = None,
) -> SolveReport:
    """Global optimum of a strictly convex inequality-constrained QP.

    The Hessian plus ridge must be positive definite; an ill-conditioned
    factorization is rejected with a diagnostic. Infeasible constraint sets
    are reported through the status field, not raised.
    """
    t_start = time.perf_counter()
    h = 0.5 * (problem.hessian + problem.hessian.T)
    n = h.shape[0]
    if ridge:
        h = h + ridge * np.eye(n)
    a = np.asarray(problem.linear, dtype=float)
    psi = np.asarray(problem.ineq_mat, dtype=float)
    gamma = np.asarray(problem.ineq_rhs, dtype=float)
    m = psi.shape[0]
    if max_iter is None:
        max_iter = 50 * (m + n) + 100

    try:
        cho = cho_factor(h, lower=True)
    except LinAlgError as exc:
        raise ValueError("QP Hessian is not positive definite; add a ridge") from exc
    diag = np.diag(cho[0])
    cond_proxy = (diag.max() / diag.min()) ** 2
    if not np.isfinite(cond_proxy) or cond_proxy > 1e16:
        raise ValueError(f"QP Hessian too ill-conditioned (cond proxy {cond_proxy:.2e})")

    def finish(x, work, mu, iters):
        lam = np.zeros(m)
        if work:
            lam[np.asarray(work, dtype=int)] = np.maximum(2.0 * np.asarray(mu), 0.0)
        grad = 2.0 * (h @ x + a)
        resid = np.abs(grad + psi.T @ lam).max() if m else np.abs(grad).max()
        slack = gamma - psi @ x if m else np.zeros(0)
        viol = max(0.0, float(-slack.min())) if m else 0.0
        comp = float(np.abs(lam * slack).max()) if m else 0.0
        return SolveReport(
            solution=x,
            objective=float(x @ (problem.hessian @ x) + 2.0 * a @ x),
            active_set=list(work),
            iterations=iters,
            wall_time=time.perf_counter() - t_start,
            status="optimal",
            kkt_residual=max(resid, viol, comp),
        )

    # Unconstrained optimum first: cheap, and exact when no constraint binds.
    x_free = cho_solve(cho, -a)
    if m == 0 or (psi @ x_free - gamma).max() <= 1e-12 * max(1.0, np.abs(gamma).max()):
        return finish(x_free, [], [], 0)

    gamma_scale = max(1.0, np.abs(gamma).max())
    x = None
    work: list = []
    if x0 is not None and (psi @ x0 - gamma).max() <= 1e-9 * gamma_scale:
        x = np.asarray(x0, dtype=float).copy()
        if active0:
            resid0 = np.abs(psi[list(active0)] @ x - gamma[list(active0)])
            work = [i for i, r in zip(active0, resid0) if r <= 1e-6 * gamma_scale]
    if x is None:
        x = _phase1(psi, gamma)
        if x is None:
            return SolveReport(
                solution=None,
                objective=np.inf,
                active_set=[],
                iterations=0,
                wall_time=time.perf_counter() - t_start,
                status="infeasible",
            )

    # v holds H^-1 psi_W^T columns for the current working set.
    v = cho_solve(cho, psi[work].T) if work else np.zeros((n, 0))
    mu = np.zeros(len(work))
    f_best = np.inf
    x_best = x
    stalled = 0
    restarted = False

    for it in range(1, max_iter + 1):
        f_now = float(x @ (h @ x) + 2.0 * a @ x)
        if f_now < f_best - 1e-12 * (1.0 + abs(f_best)):
            f_best, x_best, stalled = f_now, x, 0
        else:
            stalled += 1
        if not restarted and (stalled > 60 or f_now > f_best + 1e-6 * (1.0 + abs(f_best))):
            # numerical breakdown (near-dependent working set from a badly
            # scaled start): restart cold from a feasibility-LP vertex
            restarted = True
            x_new = _phase1(psi, gamma)
            if x_new is not None:
                x = x_new
                work = []
                v = np.zeros((n, 0))
                f_best, x_best, stalled = np.inf, x, 0
                continue
        g = h @ x + a
        u = cho_solve(cho, -g)
        if work:
            s_mat = psi[work] @ v
            try:
                s_cho = cho_factor(0.5 * (s_mat + s_mat.T), lower=True)
                mu = cho_solve(s_cho, psi[work] @ u)
            except LinAlgError:
                mu = np.linalg.lstsq(s_mat, psi[work] @ u, rcond=None)[0]
            p = u - v @ mu
        else:
            mu = np.zeros(0)
            p = u

        if np.linalg.norm(p) <= 1e-10 * (1.0 + np.linalg.norm(x)):
            tol_mu = 1e-9 * (1.0 + np.abs(g).max())
            if not work or mu.min() >= -tol_mu:
                return finish(x, work, mu, it)
            j = int(np.argmin(mu))  # most negative multiplier, lowest index on ties
            work.pop(j)
            v = np.delete(v, j, axis=1)
            continue

        d_dir = psi @ p
        slack = gamma - psi @ x
        alpha = 1.0
        blocking = -1
        candidates = np.flatnonzero(d_dir > 1e-12 * (1.0 + np.abs(d_dir).max()))
        for i in candidates:
            if i in work:
                continue
            ratio = max(slack[i], 0.0) / d_dir[i]
            if ratio < alpha - 1e-15:
                alpha = ratio
                blocking = int(i)
        x = x + alpha * p
        if blocking >= 0:
            work.append(blocking)
            v = np.hstack([v, cho_solve(cho, psi[blocking].T.reshape(n, 1))])

    return SolveReport(
        solution=x_best,
        objective=float(x_best @ (problem.hessian @ x_best) + 2.0 * a @ x_best),
        active_set=list(work),
        iterations=max_iter,
        wall_time=time.perf_counter() - t_start,
        status="iteration-limit",
    )


# ---------------------------------------------------------------------------
# Binary penalty search
# ---------------------------------------------------------------------------


def _quad_value(mat: np.ndarray, x: np.ndarray) -> float:
    return float(x @ (mat @ x))


def bps(
    q: QcqpProblem,
    eps_rel: float = 1e-6,
    x0: np.ndarray | None = None,
    active0: list | None = None,
    rho_hint: float | None = None,
) -> SolveReport:
    """Bisection on the penalty weight of the quadratic energy constraint.

    Solves min x^T (A + rho Y) x + 2 a^T x over the linear polytope at each
    probed rho; rho_r is grown by doubling until its solution meets the
    budget, then the bracket is halved until it collapses. The returned
    point is the last budget-satisfying solution (the rho_r side).
    """
    if q.per_antenna:
        raise ValueError("bps handles one quadratic constraint; use solve_ipm for per-antenna budgets")
    t_start = time.perf_counter()
    base, y_mat, budget = q.base, q.quad_mat, q.quad_budget
    n = base.hessian.shape[0]
    probes = []
    n_qp = 0

    warm = {"x": x0, "w": active0}

    def solve_at(rho: float) -> SolveReport:
        nonlocal n_qp
        h = base.hessian + rho * y_mat
        prob = QpProblem(h, base.linear, base.ineq_mat, base.ineq_rhs)
        try:
            rep = solve_qp(prob, ridge=0.0, x0=warm["x"], active0=warm["w"])
        except ValueError:
            rep = solve_qp(prob, ridge=1e-10 * np.trace(h) / n, x0=warm["x"], active0=warm["w"])
        n_qp += 1
        if rep.status == "optimal":
            warm["x"], warm["w"] = rep.solution, rep.active_set
            f_o = _quad_value(base.hessian, rep.solution) + 2.0 * base.linear @ rep.solution
            f_p = _quad_value(y_mat, rep.solution)
            probes.append((rho, f_o, f_p))
            log.debug("bps probe rho=%.6e f_o=%.9e f_p=%.9e", rho, f_o, f_p)
        return rep

    def finish(rep: SolveReport, rho: float) -> SolveReport:
        return SolveReport(
            solution=rep.solution,
            objective=_quad_value(base.hessian, rep.solution) + 2.0 * base.linear @ rep.solution,
            active_set=rep.active_set,
            iterations=n_qp,
            wall_time=time.perf_counter() - t_start,
            status="optimal",
            penalty=rho,
            kkt_residual=rep.kkt_residual,
            probes=probes,
        )

    def bail(rep: SolveReport) -> SolveReport:
        return SolveReport(
            solution=None,
            objective=np.inf,
            active_set=[],
            iterations=n_qp,
            wall_time=time.perf_counter() - t_start,
            status=rep.status,
            probes=probes,
            diagnostics=dict(rep.diagnostics),
        )

    # Unpenalized probe: when the base Hessian is safely PD and its optimum
    # already meets the budget, the energy constraint is inactive and the QP
    # optimum is the QCQP optimum.
    base_sym = 0.5 * (base.hessian + base.hessian.T)
    base_diag = np.diag(base_sym)
    if base_diag.min() > 0:
        try:
            rep0 = solve_qp(base, ridge=0.0, x0=x0, active0=active0)
        except ValueError:
            rep0 = None
        if rep0 is not None and rep0.status == "infeasible":
            return bail(rep0)
        if rep0 is not None and rep0.status == "optimal":
            n_qp += 1
            f_p0 = _quad_value(y_mat, rep0.solution)
            probes.append((0.0, rep0.objective, f_p0))
            if f_p0 <= budget * (1.0 + 1e-12):
                return finish(rep0, 0.0)
            warm["x"], warm["w"] = rep0.solution, rep0.active_set

    # The previous outer iteration's penalty seeds the bracket; doubling from
    # there keeps the bracket invariants (rho_l solutions violate or rho_l=0).
    rho_l, rho_r = 0.0, 1.0
    if rho_hint is not None and np.isfinite(rho_hint) and rho_hint > 0:
        rho_r = 2.0 * rho_hint
    rep = solve_at(rho_r)
    if rep.status != "optimal":
        return bail(rep)
    while _quad_value(y_mat, rep.solution) > budget and rho_r < RHO_CAP:
        rho_l = rho_r
        rho_r *= 2.0
        rep = solve_at(rho_r)
        if rep.status != "optimal":
            return bail(rep)

    if _quad_value(y_mat, rep.solution) > budget:
        min_rep = solve_qp(QpProblem(y_mat, np.zeros(n), base.ineq_mat, base.ineq_rhs))
        if min_rep.status != "optimal" or min_rep.objective > budget:
            out = bail(rep)
            out.status = "infeasible"
            out.diagnostics["min_energy"] = min_rep.objective if min_rep.status == "optimal" else np.inf
            return out
        out = bail(rep)
        out.status = "iteration-limit"
        return out

    best = rep
    rho_init = rho_r
    # Bracket width relative to the current rho_r, not the initial one: the
    # critical penalty can sit orders of magnitude below the first bracket
    # top and the optimum is sensitive to the relative penalty error. The
    # absolute floor stops the halving when the budget never binds.
    while rho_r - rho_l > eps_rel * rho_r and rho_r > 1e-12 * rho_init:
        mid = 0.5 * (rho_l + rho_r)
        rep = solve_at(mid)
        if rep.status != "optimal":
            return bail(rep)
        if _quad_value(y_mat, rep.solution) <= budget:
            rho_r, best = mid, rep
        else:
            rho_l = mid
        log.debug("bps interval rho_l=%.6e rho_r=%.6e", rho_l, rho_r)
    return finish(best, rho_r)


# ---------------------------------------------------------------------------
# Log-barrier interior point
# ---------------------------------------------------------------------------


def _quad_constraints(q: QcqpProblem) -> list:
    """Constraint triples (Q, q, r) meaning x^T Q x + q^T x - r <= 0."""
    n = q.base.hessian.shape[0]
    if q.per_antenna:
        return [(mat, np.zeros(n), float(b)) for mat, b in q.per_antenna]
    return [(q.quad_mat, np.zeros(n), q.quad_budget)]


def _quad_eval(x, quads):
    return np.array([x @ (qm @ x) + ql @ x - r for qm, ql, r in quads])


def _barrier_value(x, t, hess, lin2, psi, gamma, quads):
    val = t * (x @ (0.5 * hess @ x) + lin2 @ x)
    if psi.size:
        slack = gamma - psi @ x
        if slack.min() <= 0:
            return np.inf
        val -= np.log(slack).sum()
    qv = _quad_eval(x, quads)
    if qv.size:
        if qv.max() >= 0:
            return np.inf
        val -= np.log(-qv).sum()
    return float(val)


def _barrier_newton(x, t, hess2, lin2, psi, gamma, quads, max_newton=120):
    """Centering step for t * f0 + barrier; returns the centered point."""
    for _ in range(max_newton):
        grad = t * (hess2 @ x + lin2)
        hess = t * hess2
        if psi.size:
            d = 1.0 / (gamma - psi @ x)
            grad = grad + psi.T @ d
            hess = hess + (psi.T * d**2) @ psi
        for (qm, ql, _), qv in zip(quads, _quad_eval(x, quads)):
            s = -qv
            gq = 2.0 * (qm @ x) + ql
            grad = grad + gq / s
            hess = hess + 2.0 * qm / s + np.outer(gq, gq) / s**2
        try:
            step = -np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            step = -np.linalg.lstsq(hess, grad, rcond=None)[0]
        psi_val = _barrier_value(x, t, hess2, lin2, psi, gamma, quads)
        dec = float(-grad @ step)
        if dec <= 1e-10 * (1.0 + abs(psi_val)):
            break
        # fraction-to-boundary cap, then Armijo backtracking on the potential
        alpha = 1.0
        if psi.size:
            d_dir = psi @ step
            slack = gamma - psi @ x
            hit = d_dir > 0
            if hit.any():
                alpha = min(alpha, 0.99 * float((slack[hit] / d_dir[hit]).min()))
        accepted = False
        while alpha > 1e-14:
            xn = x + alpha * step
            val = _barrier_value(xn, t, hess2, lin2, psi, gamma, quads)
            if val <= psi_val - 0.25 * alpha * dec:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            break
        x = x + alpha * step
    return x


def solve_ipm(q: QcqpProblem, tol: float = 1e-7, x0: np.ndarray | None = None) -> SolveReport:
    """Log-barrier solution of the QCQP; the reference engine for cross-checks.

    Requires a strictly feasible start; when none is given one is built from
    the minimum-energy QP blended toward the interior. Per-antenna budgets
    are supported through `q.per_antenna`.
    """
    t_start = time.perf_counter()
    base = q.base
    n = base.hessian.shape[0]
    psi, gamma = base.ineq_mat, base.ineq_rhs
    quads = _quad_constraints(q)
    hess2 = base.hessian + base.hessian.T
    lin2 = 2.0 * base.linear

    x = x0
    if x is not None and not _strictly_feasible(x, psi, gamma, quads):
        x = None
    if x is None:
        x = _ipm_phase1(q, psi, gamma, quads)
        if x is None:
            return SolveReport(
                solution=None,
                objective=np.inf,
                active_set=[],
                iterations=0,
                wall_time=time.perf_counter() - t_start,
                status="infeasible",
            )

    m_total = (psi.shape[0] if psi.size else 0) + len(quads)
    t = 1.0
    mu = 20.0
    iters = 0
    while True:
        x = _barrier_newton(x, t, hess2, lin2, psi, gamma, quads)
        iters += 1
        f0 = float(x @ (base.hessian @ x) + 2.0 * base.linear @ x)
        if m_total / t <= tol * max(1.0, abs(f0)):
            break
        t *= mu
        if iters > 60:
            return SolveReport(
                solution=x,
                objective=f0,
                active_set=[],
                iterations=iters,
                wall_time=time.perf_counter() - t_start,
                status="iteration-limit",
            )
    return SolveReport(
        solution=x,
        objective=f0,
        active_set=[],
        iterations=iters,
        wall_time=time.perf_counter() - t_start,
        status="optimal",
    )


def _strictly_feasible(x, psi, gamma, quads, slack=0.0) -> bool:
    if psi.size and (psi @ x - gamma).max() >= -slack:
        return False
    return bool(_quad_eval(x, quads).max() < -slack) if quads else True


def _ipm_phase1(q: QcqpProblem, psi, gamma, quads):
    """Strictly feasible point: min-energy QP blended toward the CI interior.

    If blending cannot balance several quadratic budgets at once, fall back
    to a barrier on the budget-inflation factor (min t with each budget
    scaled by t), stopping as soon as the factor drops strictly below one.
    """
    n = q.base.hessian.shape[0]
    rep_e = solve_qp(QpProblem(q.quad_mat, np.zeros(n), psi, gamma))
    if rep_e.status != "optimal":
        return None
    x_e = rep_e.solution
    if _strictly_feasible(x_e, psi, gamma, quads):
        return x_e
    x_c = _phase1_interior(psi, gamma)
    if x_c is None:
        return None
    for theta in (0.5, 0.2, 0.1, 0.05, 0.02, 0.01, 1e-3, 1e-4):
        x_try = (1.0 - theta) * x_e + theta * x_c
        if _strictly_feasible(x_try, psi, gamma, quads):
            return x_try
    return _inflation_phase1(x_e, x_c, psi, gamma, quads)


def _inflation_phase1(x_e, x_c, psi, gamma, quads):
    """min t s.t. constraints with every quadratic budget inflated by t."""
    n = x_e.size
    x_s = 0.5 * (x_e + x_c)  # strict CI margins by convexity
    budgets = np.array([r for _, _, r in quads])
    ratios = _quad_eval(x_s, [(qm, ql, 0.0) for qm, ql, _ in quads]) / budgets
    t_s = 2.0 * float(ratios.max()) + 1.0
    z = np.concatenate([x_s, [t_s]])
    psi_aug = np.hstack([psi, np.zeros((psi.shape[0], 1))]) if psi.size else np.zeros((0, n + 1))
    quads_aug = []
    for qm, ql, r in quads:
        qm_aug = np.zeros((n + 1, n + 1))
        qm_aug[:n, :n] = qm
        ql_aug = np.concatenate([ql, [-r]])
        quads_aug.append((qm_aug, ql_aug, 0.0))
    hess2 = np.zeros((n + 1, n + 1))
    lin2 = np.zeros(n + 1)
    lin2[-1] = 1.0
    t_barrier = 1.0
    t_prev = np.inf
    for _ in range(40):
        z = _barrier_newton(z, t_barrier, hess2, lin2, psi_aug, gamma, quads_aug)
        x = z[:n]
        if _strictly_feasible(x, psi, gamma, quads, slack=0.0):
            return x
        if z[-1] > 1.0 and abs(t_prev - z[-1]) < 1e-9 * z[-1]:
            break  # inflation factor has converged above 1: infeasible
        t_prev = z[-1]
        t_barrier *= 10.0
    return None


def _phase1_interior(psi, gamma):
    if not psi.size:
        return np.zeros(psi.shape[1])
    m, n = psi.shape
    c = np.zeros(n + 1)
    c[-1] = 1.0
    a_ub = np.hstack([psi, -np.ones((m, 1))])
    bounds = [(None, None)] * n + [(-10.0 * max(1.0, np.abs(gamma).max()), None)]
    res = linprog(c, A_ub=a_ub, b_ub=gamma, bounds=bounds, method="highs")
    if not res.success or res.x is None or res.x[-1] >= 0:
        return None
    return res.x[:n]


# ---------------------------------------------------------------------------
# Exact line search
# ---------------------------------------------------------------------------


def line_search(f_along, tol: float = 1e-4) -> float:
    """Minimize a scalar function on [0, 1]: golden section plus a grid sweep.

    Endpoints are always candidates; if the 64-point grid beats the golden
    section answer (the function need not be unimodal) the grid point wins.
    """
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = 0.0, 1.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f_along(c), f_along(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f_along(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f_along(d)
    candidates = [0.5 * (a + b)] + list(np.linspace(0.0, 1.0, 64))
    values = [f_along(t) for t in candidates]
    return float(candidates[int(np.argmin(values))])


# ---------------------------------------------------------------------------
# Outer drivers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DesignProblem:
    """Everything one design instance needs: geometry, data and constraint systems."""

    dims: Dimensions
    pulse: PulseTables
    eff: EffectiveChannel
    block: SymbolBlock
    ci_sys: CISystem
    energy: EnergyForm
    lift_tables: SensingLift
    sigma_r2: float
    sigma_h2: float
    n_rx: int


@dataclass
class Solution:
    """Precoded block plus iteration history."""

    s_block: np.ndarray
    objective_trace: list
    mmse_trace: list
    iter_times: list
    energy: float
    min_margin: float
    iterations: int
    wall_time: float
    status: str
    qp_count: int = 0
    diagnostics: dict = field(default_factory=dict)


def _vec(s_block: np.ndarray) -> np.ndarray:
    # vec(S^T) stacks antennas: row-major flatten of the N_t x L block.
    return s_block.reshape(-1)


def _unvec(s_vec: np.ndarray, dims: Dimensions) -> np.ndarray:
    return s_vec.reshape(dims.n_tx, dims.block_len)


def _strict_ci_point(problem: DesignProblem) -> np.ndarray | None:
    """Deep-cone start: aim every symbol at twice its QoS margin.

    Solved as Tikhonov-damped least squares with the largest damping that
    still leaves strict margins, so ill-conditioned channel draws cannot
    blow the start point up to astronomical energies.
    """
    cis = problem.ci_sys
    if cis.psi.shape[0] == 0:
        return np.zeros(cis.psi.shape[1])
    d_vec = problem.block.data.reshape(-1)
    L = problem.dims.block_len
    depth = 2.0 * np.sqrt(np.repeat(cis.qos, L)) * cis.sigma_vec
    depth = depth + 0.1 * cis.sigma_vec.max() + 1e-9
    target = d_vec * depth
    u_mat, sig, vh = np.linalg.svd(problem.eff.effective, full_matrices=False)
    coef = u_mat.conj().T @ target
    best = None
    for lam in (1e-2, 1e-4, 1e-6, 1e-9, 0.0):
        gain = sig / (sig**2 + lam * sig[0] ** 2)
        s_hat = stack_complex(vh.conj().T @ (gain * coef))
        if ci_margins(s_hat, cis).min() > 0:
            best = s_hat
            break
    return best


def _to_qcqp(problem: DesignProblem, a_hat: np.ndarray, a_vec: np.ndarray) -> QcqpProblem:
    energy = problem.energy
    per = None
    if energy.mode == "per-antenna":
        per = []
        L = problem.dims.block_len
        n = problem.dims.n_tx
        for ant in range(n):
            mat = np.zeros_like(energy.total)
            sl = slice(ant * L, (ant + 1) * L)
            mat[sl, sl] = energy.gram
            sl2 = slice(n * L + ant * L, n * L + (ant + 1) * L)
            mat[sl2, sl2] = energy.gram
            per.append((mat, float(energy.per_antenna_budgets[ant])))
    return QcqpProblem(
        base=QpProblem(a_hat, a_vec, problem.ci_sys.psi, problem.ci_sys.gamma),
        quad_mat=energy.total,
        quad_budget=energy.budget,
        per_antenna=per,
    )


def _solve_subproblem(
    qcqp: QcqpProblem, subsolver: str, warm_x, warm_w, ipm_tol: float, eps_rho: float,
    rho_hint: float | None = None,
) -> SolveReport:
    if subsolver == "bps":
        return bps(qcqp, eps_rel=eps_rho, x0=warm_x, active0=warm_w, rho_hint=rho_hint)
    if subsolver == "ipm":
        return solve_ipm(qcqp, tol=ipm_tol, x0=warm_x if warm_x is not None else None)
    raise ValueError(f"unknown subsolver: {subsolver!r}")


def _objective(problem: DesignProblem, s_block: np.ndarray):
    x_bar = lift(s_block, problem.pulse, problem.lift_tables.dims)
    return mmse_objective(x_bar, problem.sigma_r2, problem.sigma_h2, problem.n_rx), x_bar


def _initial_point(
    problem: DesignProblem, rng: np.random.Generator, subsolver: str, ipm_tol: float, eps_rho: float
):
    """Random block scaled onto the energy budget, then one projection solve.

    Both outer algorithms share this initialization so convergence traces
    from the same seeds start at the same point.
    """
    dims = problem.dims
    s_rand = rng.standard_normal((dims.n_tx, dims.block_len)) + 1j * rng.standard_normal(
        (dims.n_tx, dims.block_len)
    )
    e0 = problem.energy.energy(stack_complex(_vec(s_rand)))
    s_rand = s_rand * np.sqrt(problem.energy.budget / e0)
    x_bar = lift(s_rand, problem.pulse, dims)
    params = minorizer(x_bar, problem.lift_tables, problem.sigma_r2, problem.sigma_h2)
    a_hat, a_vec = realify_quadratic(params.B, params.b)
    qcqp = _to_qcqp(problem, a_hat, a_vec)
    warm = _strict_ci_point(problem)
    rep = _solve_subproblem(qcqp, subsolver, warm, None, ipm_tol, eps_rho)
    return rep, qcqp


def _driver(problem: DesignProblem, rng, eps, i_max, subsolver, ipm_tol, mmse_stop, mode, eps_rho=1e-6):
    t_start = time.perf_counter()
    rep0, _ = _initial_point(problem, rng, subsolver, ipm_tol, eps_rho)
    if rep0.status != "optimal":
        return Solution(
            s_block=np.zeros((problem.dims.n_tx, problem.dims.block_len), dtype=complex),
            objective_trace=[],
            mmse_trace=[],
            iter_times=[],
            energy=np.nan,
            min_margin=np.nan,
            iterations=0,
            wall_time=time.perf_counter() - t_start,
            status=rep0.status,
            diagnostics=dict(rep0.diagnostics),
        )
    s_hat = rep0.solution
    warm_w = rep0.active_set
    qp_count = rep0.iterations
    rho_hint = rep0.penalty
    s_block = _unvec(unstack_real(s_hat), problem.dims)
    if eps is None:
        eps = 1e-6 * float(np.linalg.norm(s_block) ** 2)

    (f_cur, mmse_cur), x_bar = _objective(problem, s_block)
    traces_f, traces_m, times = [f_cur], [mmse_cur], [time.perf_counter() - t_start]
    status = "iteration-limit"
    k = 0
    while k < i_max:
        log.info(
            "iter=%d f=%.9e mmse=%.9e energy=%.9e min_margin=%.3e",
            k,
            f_cur,
            mmse_cur,
            problem.energy.energy(s_hat),
            float(ci_margins(s_hat, problem.ci_sys).min()) if problem.ci_sys.gamma.size else np.nan,
        )
        if mmse_stop is not None and mmse_cur <= mmse_stop:
            status = "optimal"
            break

        if mode == "minorization":
            params = minorizer(x_bar, problem.lift_tables, problem.sigma_r2, problem.sigma_h2)
            a_hat, a_vec = realify_quadratic(params.B, params.b)
            qcqp = _to_qcqp(problem, a_hat, a_vec)
            rep = _solve_subproblem(qcqp, subsolver, s_hat, warm_w, ipm_tol, eps_rho, rho_hint)
            if rep.status != "optimal":
                status = rep.status
                break
            qp_count += rep.iterations
            warm_w = rep.active_set
            rho_hint = rep.penalty
            s_next_hat = rep.solution
            s_next = _unvec(unstack_real(s_next_hat), problem.dims)
        else:  # sca
            grad = sca_gradient(x_bar, problem.lift_tables, problem.sigma_r2, problem.sigma_h2)
            a_vec = realify_linear(grad.t_r)
            qcqp = _to_qcqp(problem, np.zeros((s_hat.size, s_hat.size)), a_vec)
            rep = _solve_subproblem(qcqp, subsolver, s_hat, warm_w, ipm_tol, eps_rho, rho_hint)
            if rep.status != "optimal":
                status = rep.status
                break
            qp_count += rep.iterations
            warm_w = rep.active_set
            rho_hint = rep.penalty
            s_star = _unvec(unstack_real(rep.solution), problem.dims)
            x_star = lift(s_star, problem.pulse, problem.dims)

            def f_along(t):
                mix = (1.0 - t) * x_bar + t * x_star
                return mmse_objective(mix, problem.sigma_r2, problem.sigma_h2, problem.n_rx)[0]

            t_step = line_search(f_along)
            s_next = (1.0 - t_step) * s_block + t_step * s_star
            s_next_hat = stack_complex(_vec(s_next))

        (f_next, mmse_next), x_next = _objective(problem, s_next)
        slack = 1e-9 * max(1.0, abs(f_cur))
        if f_next > f_cur + slack:
            if f_next > f_cur + 1e-6 * max(1.0, abs(f_cur)):
                raise RuntimeError(
                    f"non-monotone outer step: f {f_cur:.12e} -> {f_next:.12e} (solver bug)"
                )
            status = "optimal"  # within subsolver tolerance of a fixed point
            break

        step2 = float(np.linalg.norm(s_next - s_block) ** 2)
        s_block, s_hat, x_bar = s_next, s_next_hat, x_next
        f_cur, mmse_cur = f_next, mmse_next
        k += 1
        traces_f.append(f_cur)
        traces_m.append(mmse_cur)
        times.append(time.perf_counter() - t_start)
        if step2 <= eps:
            status = "optimal"
            break
    else:
        status = "iteration-limit"

    margins = ci_margins(s_hat, problem.ci_sys) if problem.ci_sys.gamma.size else np.array([np.inf])
    return Solution(
        s_block=s_block,
        objective_trace=traces_f,
        mmse_trace=traces_m,
        iter_times=times,
        energy=problem.energy.energy(s_hat),
        min_margin=float(margins.min()),
        iterations=k,
        wall_time=time.perf_counter() - t_start,
        status=status,
        qp_count=qp_count,
    )


def minorization_solve(
    problem: DesignProblem,
    rng: np.random.Generator,
    eps: float | None = None,
    i_max: int = 100,
    subsolver: str = "bps",
    ipm_tol: float = 1e-7,
    mmse_stop: float | None = None,
    eps_rho: float = 1e-6,
) -> Solution:
    """Outer loop of the touching-surrogate method; objective trace is nonincreasing."""
    return _driver(problem, rng, eps, i_max, subsolver, ipm_tol, mmse_stop, "minorization", eps_rho)


def sca_solve(
    problem: DesignProblem,
    rng: np.random.Generator,
    eps: float | None = None,
    i_max: int = 100,
    subsolver: str = "bps",
    ipm_tol: float = 1e-7,
    mmse_stop: float | None = None,
    eps_rho: float = 1e-6,
) -> Solution:
    """Outer loop of the linearize-and-step method with exact line search."""
    return _driver(problem, rng, eps, i_max, subsolver, ipm_tol, mmse_stop, "sca", eps_rho)
