"""Constrained and unconstrained minimization of the variable-exponent energy.

The thin obstacle problem is solved with a primal-dual active set method
wrapped in epsilon-continuation: each stage regularizes the energy with a
fixed eps, warm-starting from the previous stage, and the last stage's
minimizer is reported with its energy re-evaluated at eps = 0.
"""

import hashlib
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .energy import EnergySetup, energy, hessian, residual
from .errors import ConvergenceError, FormatError, PreconditionError
from .mesh import ARC, THIN, mesh_text
from .vxspace import FeFunction

DEFAULT_EPS_SCHEDULE = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8)
ARMIJO_SLOPE = 1e-4
MAX_HALVINGS = 40
STAGNATION_WINDOW = 200


class ObstacleProblem:
    """Energy setup plus boundary data and the unilateral constraint.

    g supplies Dirichlet values at Arc vertices (and at Thin vertices when
    thin_dirichlet is set on an unconstrained problem). The obstacle is
    the constant 0 on Thin vertices.
    """

    def __init__(self, setup, g, constrained=True, thin_dirichlet=False):
        if isinstance(g, FeFunction):
            g = g.values
        self.setup = setup
        self.g = np.ascontiguousarray(g, dtype=float)
        if self.g.shape != (setup.mesh.num_vertices,):
            raise PreconditionError("boundary data needs one value per vertex")
        if constrained and thin_dirichlet:
            raise PreconditionError("thin Dirichlet data contradicts the obstacle")
        self.constrained = bool(constrained)
        self.thin_dirichlet = bool(thin_dirichlet)
        tags = setup.mesh.vertex_tags
        self.arc = tags == ARC
        self.thin = tags == THIN
        self.dirichlet = self.arc | self.thin if thin_dirichlet else self.arc.copy()

    def feasible_start(self):
        v = self.g.copy()
        if self.constrained:
            v[self.thin] = np.maximum(v[self.thin], 0.0)
        return v


@dataclass
class SolveReport:
    iterations: list = field(default_factory=list)
    energy: float = np.nan            # at eps = 0
    free_residual: float = np.nan
    complementarity: float = np.nan
    active_set: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    eps_schedule: tuple = ()
    tol: float = np.nan
    wall_time: float = 0.0


def _kkt(problem, v, r):
    if problem.constrained:
        active = problem.thin & (v - r < 0.0)
    else:
        active = np.zeros_like(problem.dirichlet)
    free = ~problem.dirichlet & ~active
    free_res = float(np.abs(r[free]).max()) if free.any() else 0.0
    if problem.constrained and problem.thin.any():
        comp = float(np.abs(np.minimum(v[problem.thin], r[problem.thin])).max())
    else:
        comp = 0.0
    return active, free, free_res, comp


def _line_search(setup, problem, v, d, r, e0):
    slope = float(r @ d)
    t = 1.0
    for _ in range(MAX_HALVINGS):
        w = v + t * d
        w[problem.dirichlet] = problem.g[problem.dirichlet]
        if problem.constrained:
            w[problem.thin] = np.maximum(w[problem.thin], 0.0)
        ew = energy(setup, w)
        if ew <= e0 + ARMIJO_SLOPE * t * slope + 1e-15 * max(1.0, abs(e0)):
            return w, ew, True
        t *= 0.5
    return v, e0, False


def _solve_stage(problem, v, eps, tol, report):
    setup = problem.setup.with_epsilon(eps)
    n_iter = 0
    best = np.inf
    best_v = v.copy()
    since_improve = 0

    while True:
        r = residual(setup, v)
        active, free, free_res, comp = _kkt(problem, v, r)
        measure = max(free_res, comp if problem.constrained else 0.0)
        if measure < best - 1e-16:
            best = measure
            best_v = v.copy()
            since_improve = 0
        else:
            since_improve += 1
        if free_res <= tol and (not problem.constrained or comp <= tol):
            return v, n_iter, free_res, comp, active
        if since_improve > STAGNATION_WINDOW:
            report.iterations.append(n_iter)
            raise ConvergenceError(
                f"no residual decrease over {STAGNATION_WINDOW} iterations "
                f"(best KKT measure {best})",
                best=FeFunction(setup.mesh, best_v), info=report)
        n_iter += 1

        d = np.zeros_like(v)
        d[active] = -v[active]
        H = hessian(setup, v)
        free_idx = np.flatnonzero(free)
        act_idx = np.flatnonzero(active)
        rhs = -r[free_idx]
        if act_idx.size:
            rhs = rhs - H[free_idx][:, act_idx] @ d[act_idx]
        newton_ok = free_idx.size > 0
        if newton_ok:
            Hff = H[free_idx][:, free_idx].tocsc()
            df = spla.spsolve(Hff, rhs)
            if np.all(np.isfinite(df)):
                d[free_idx] = df
            else:
                newton_ok = False

        e0 = energy(setup, v)
        accepted = False
        if newton_ok and float(r @ d) < 0.0:
            v_new, _, accepted = _line_search(setup, problem, v, d, r, e0)
        if not accepted:
            # projected gradient fallback
            d = -r
            d[problem.dirichlet] = 0.0
            v_new, _, accepted = _line_search(setup, problem, v, d, r, e0)
        if accepted:
            v = v_new
        # if both searches failed, loop continues and stagnation will trip


def solve(problem, tol, eps_schedule=None):
    """Minimize over the admissible set; returns (FeFunction, SolveReport).

    Feasibility is exact at every iterate: Arc values pinned to g, Thin
    values >= 0. The reported energy is evaluated at eps = 0; KKT
    residuals refer to the last continuation stage.
    """
    tol = float(tol)
    if not (1e-14 <= tol <= 1e-4):
        raise PreconditionError(f"tol must lie in [1e-14, 1e-4], got {tol}")
    if eps_schedule is None:
        eps_schedule = DEFAULT_EPS_SCHEDULE
    eps_schedule = tuple(float(e) for e in eps_schedule)
    if any(b >= a for a, b in zip(eps_schedule, eps_schedule[1:])):
        raise PreconditionError("eps schedule must be strictly decreasing")
    if eps_schedule[-1] > 1e-8:
        raise PreconditionError("eps schedule must end at or below 1e-8")

    t0 = time.perf_counter()
    report = SolveReport(eps_schedule=eps_schedule, tol=tol)
    v = problem.feasible_start()
    free_res = comp = np.nan
    active = np.zeros(problem.setup.mesh.num_vertices, dtype=bool)
    for eps in eps_schedule:
        v, n_iter, free_res, comp, active = _solve_stage(problem, v, eps, tol, report)
        report.iterations.append(n_iter)

    report.energy = energy(problem.setup.with_epsilon(0.0), v)
    report.free_residual = free_res
    report.complementarity = comp
    exact_zero = problem.thin & (v == 0.0)
    report.active_set = np.flatnonzero(active | exact_zero)
    report.wall_time = time.perf_counter() - t0
    return FeFunction(problem.setup.mesh, v), report


def solve_unconstrained(problem, tol, eps_schedule=None):
    """Dirichlet problem without the thin constraint; same continuation loop."""
    if problem.constrained:
        raise PreconditionError("problem is constrained; use solve")
    return solve(problem, tol, eps_schedule)


def vi_check(problem, u_h, trials, seed):
    """Worst normalized variational-inequality product over random directions.

    Directions vanish at Dirichlet vertices and are clamped to v >= -u_h
    at Thin vertices; returns min over trials of residual(u_h) . v / |v|,
    with the residual taken at eps = 0.
    """
    trials = int(trials)
    if trials < 1:
        raise PreconditionError("need at least one trial")
    u = u_h.values
    if np.abs(u[problem.arc] - problem.g[problem.arc]).max() > 1e-9:
        raise PreconditionError("u_h does not match the Dirichlet data")
    if problem.constrained and problem.thin.any() and u[problem.thin].min() < -1e-12:
        raise PreconditionError("u_h violates the obstacle")

    r = residual(problem.setup.with_epsilon(0.0), u)
    rng = np.random.default_rng(seed)
    n = len(u)
    worst = np.inf
    for _ in range(trials):
        v = rng.uniform(-1.0, 1.0, n)
        v[problem.dirichlet] = 0.0
        if problem.constrained:
            v[problem.thin] = np.maximum(v[problem.thin], -u[problem.thin])
        nrm = float(np.linalg.norm(v))
        if nrm == 0.0:
            continue
        worst = min(worst, float(r @ v) / nrm)
    return worst


def solution_text(u, mesh):
    lines = [f"s {hashlib.sha256(mesh_text(mesh).encode('ascii')).hexdigest()} {len(u.values)}"]
    for i, val in enumerate(u.values):
        lines.append(f"u {i} {val:.17g}")
    return "\n".join(lines) + "\n"


def save_solution(u, mesh, path):
    with open(path, "w", encoding="ascii") as f:
        f.write(solution_text(u, mesh))


def load_solution(path, mesh):
    with open(path, "r", encoding="ascii") as f:
        lines = [ln.strip() for ln in f if ln.strip()]
    if not lines or not lines[0].startswith("s "):
        raise FormatError(f"{path}: missing solution header")
    parts = lines[0].split()
    if len(parts) != 3:
        raise FormatError(f"{path}: bad solution header")
    want = hashlib.sha256(mesh_text(mesh).encode("ascii")).hexdigest()
    if parts[1] != want:
        raise FormatError(f"{path}: solution was computed on a different mesh")
    n = int(parts[2])
    if n != mesh.num_vertices or len(lines) != 1 + n:
        raise FormatError(f"{path}: wrong number of values")
    vals = np.empty(n)
    for i in range(n):
        p = lines[1 + i].split()
        if len(p) != 3 or p[0] != "u" or int(p[1]) != i:
            raise FormatError(f"{path}: bad value line {lines[1 + i]!r}")
        vals[i] = float(p[2])
    return FeFunction(mesh, vals)
