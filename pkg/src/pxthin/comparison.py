"""Reference solutions, reflection checks, and frozen-exponent comparison runs.

The decay experiment measures how fast a constant-exponent local solve
approaches the variable-exponent minimizer on shrinking half-balls. All
integrals of piecewise-constant gradient quantities are exact sums.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np

from .energy import EnergySetup, residual
from .errors import PreconditionError
from .exponent import ExponentField
from .mesh import ARC, GEOM_TOL, INTERIOR, THIN, TriMesh, extract_halfball_submesh
from .solver import ObstacleProblem, solve, solve_unconstrained
from .vxspace import FeFunction, modular


@dataclass
class ComparisonReport:
    M: float = np.nan
    ordering_margin: float = np.nan       # min over nodes of u - w
    reflect_residual: float = np.nan      # full-disk odd-extension residual sup
    radii: list = dc_field(default_factory=list)
    p2: list = dc_field(default_factory=list)
    error: list = dc_field(default_factory=list)       # E(r) per radius
    energy_2r: list = dc_field(default_factory=list)   # int over 2r ball of |Du|^p2
    ratio: list = dc_field(default_factory=list)       # E / majorant
    energy_sub_u: list = dc_field(default_factory=list)   # int over submesh |Du|^p2
    energy_sub_u0: list = dc_field(default_factory=list)  # int over submesh |Du0|^p2
    fitted_rate: float = np.nan
    sigma1: float = np.nan


def build_reference(u, problem, tol=1e-10, eps_schedule=None, m_override=None):
    """Reference solution: Dirichlet data min_Arc(u) on Arc and 0 on Thin.

    Returns (w, partial ComparisonReport) with the nodal ordering margin
    min(u - w) filled in. m_override substitutes the Arc constant; it
    exists for tests that need a prescribed boundary level.
    """
    mesh = u.mesh
    arc = mesh.vertex_tags == ARC
    if not arc.any():
        raise PreconditionError("mesh has no Arc vertices")
    m = float(u.values[arc].min()) if m_override is None else float(m_override)
    g_ref = np.where(arc, m, 0.0)
    ref_problem = ObstacleProblem(problem.setup, g_ref, constrained=False,
                                  thin_dirichlet=True)
    w, _ = solve_unconstrained(ref_problem, tol, eps_schedule)
    report = ComparisonReport()
    report.ordering_margin = float((u.values - w.values).min())
    return w, report


class _EvenExtensionField:
    """Evaluates an exponent field at (x1, |x2|); even across the axis."""

    def __init__(self, base):
        self.base = base
        self.gamma1 = base.gamma1
        self.gamma2 = base.gamma2

    def eval(self, x):
        x = np.asarray(x, dtype=float)
        folded = x.copy()
        folded[..., 1] = np.abs(folded[..., 1])
        return self.base.eval(folded)


def reflect_full_disk(w):
    """Mirrored full-disk mesh together with the odd extension of w.

    The two corner vertices (on the axis and the circle at once) carry
    the arc data, so the odd extension jumps there. They are duplicated:
    lower elements reference a coincident copy holding the negated value.
    """
    mesh = w.mesh
    verts = mesh.vertices
    nv = mesh.num_vertices
    on_axis = verts[:, 1] <= GEOM_TOL
    on_circle = np.abs(np.hypot(verts[:, 0], verts[:, 1]) - 1.0) <= GEOM_TOL
    upper = ~on_axis
    corner = on_axis & on_circle
    mirror_src = upper | corner
    n_new = int(mirror_src.sum())
    mirrored = verts[mirror_src] * np.array([1.0, -1.0])
    image = np.arange(nv)
    image[mirror_src] = nv + np.arange(n_new)
    full_verts = np.vstack([verts, mirrored])
    # reflection flips orientation; swap two indices to keep triangles CCW
    refl_tris = image[mesh.triangles][:, [0, 2, 1]]
    full_tris = np.vstack([mesh.triangles, refl_tris])
    tags = np.full(len(full_verts), INTERIOR, dtype=np.int8)
    circle_all = np.abs(np.hypot(full_verts[:, 0], full_verts[:, 1]) - 1.0) <= GEOM_TOL
    tags[circle_all] = ARC
    full_mesh = TriMesh(full_verts, full_tris, tags)
    odd_vals = np.concatenate([w.values, -w.values[mirror_src]])
    return full_mesh, FeFunction(full_mesh, odd_vals)


def reflect_and_check(w, field, eps=0.0):
    """Residual sup-norm of the odd extension on the mirrored full disk.

    The exponent is extended evenly. Interior nodes include the former
    Thin nodes; only nodes on the outer circle are excluded.
    """
    mesh = w.mesh
    thin = mesh.vertex_tags == THIN
    if thin.any() and np.abs(w.values[thin]).max() > 1e-10:
        raise PreconditionError("w does not vanish on Thin nodes")
    full_mesh, w_tilde = reflect_full_disk(w)
    setup = EnergySetup(full_mesh, _EvenExtensionField(field), epsilon=eps)
    r = residual(setup, w_tilde)
    interior = np.hypot(full_mesh.vertices[:, 0], full_mesh.vertices[:, 1]) < 1.0 - 1e-12
    if not interior.any():
        return 0.0
    return float(np.abs(r[interior]).max())


def compute_M(u, w, field):
    """Total energy mass of the pair plus domain area plus one."""
    if u.mesh is not w.mesh:
        same = (u.mesh.num_vertices == w.mesh.num_vertices
                and np.array_equal(u.mesh.vertices, w.mesh.vertices)
                and np.array_equal(u.mesh.triangles, w.mesh.triangles))
        if not same:
            raise PreconditionError("u and w live on different meshes")
    area = float(u.mesh.areas.sum())
    return (modular(u.gradient_field(), field)
            + modular(w.gradient_field(), field) + area + 1.0)


def _frozen_on_submesh(u, submesh, vmap, p2, tol, eps_schedule):
    const = ExponentField("constant", [p2])
    setup = EnergySetup(submesh, const)
    g_sub = u.values[vmap]
    problem = ObstacleProblem(setup, g_sub, constrained=True)
    u0, _ = solve(problem, tol, eps_schedule)
    return u0


def frozen_solve(u, center, radius, field, tol=1e-10, eps_schedule=None):
    """Constant-exponent obstacle solve on a half-ball submesh.

    The exponent is frozen at p2 = sup of the field over the ball, the
    Dirichlet data is the nodal trace of u on the submesh Arc vertices,
    and the obstacle 0 acts on the submesh Thin vertices.
    """
    submesh, vmap = extract_halfball_submesh(u.mesh, center, radius)
    p2 = field.sup_inf_on_halfball(center, radius)[1]
    u0 = _frozen_on_submesh(u, submesh, vmap, p2, tol, eps_schedule)
    return u0, p2


def _gradient_mass(mesh, grads, power):
    mags = np.hypot(grads[:, 0], grads[:, 1])
    return float((mesh.areas * np.where(mags > 0.0, mags, 1.0) ** power
                  * (mags > 0.0)).sum())


def _ball_energy(u, center, radius, power):
    # parent elements fully inside the ball; exact piecewise-constant sum
    mesh = u.mesh
    d = np.hypot(mesh.vertices[:, 0] - center[0], mesh.vertices[:, 1] - center[1])
    inside = d <= radius + GEOM_TOL
    mask = inside[mesh.triangles].all(axis=1)
    grads = u.element_gradients()[mask]
    mags = np.hypot(grads[:, 0], grads[:, 1])
    areas = mesh.areas[mask]
    return float((areas * np.where(mags > 0.0, mags, 1.0) ** power
                  * (mags > 0.0)).sum())


def comparison_decay(u, field, center, radii, problem=None, M_value=None,
                     sigma0=0.1, tol=1e-10, eps_schedule=None, m_override=None):
    """Decay of the frozen-exponent comparison error over shrinking balls.

    For each radius r the submesh error E(r) = integral of |Du - Du0|^p2
    is normalized by M^sigma1 * (energy of u on the 2r ball) + r^2 and the
    normalized values are fitted against r in log-log coordinates.
    """
    center = np.asarray(center, dtype=float)
    radii = [float(r) for r in radii]
    if len(radii) < 3:
        raise PreconditionError("need at least 3 radii")
    if any(b >= a for a, b in zip(radii, radii[1:])):
        raise PreconditionError("radii must be strictly decreasing")
    if np.hypot(center[0], center[1]) + 2.0 * radii[0] > 0.75 + GEOM_TOL:
        raise PreconditionError("2r half-balls must stay inside the 3/4 ball")

    if M_value is None:
        if problem is None:
            raise PreconditionError("need either problem or M_value to normalize")
        w, report = build_reference(u, problem, tol=tol, eps_schedule=eps_schedule,
                                    m_override=m_override)
        report.reflect_residual = reflect_and_check(w, field)
        report.M = compute_M(u, w, field)
    else:
        report = ComparisonReport()
        report.M = float(M_value)
    sigma1 = min(field.beta / 8.0, float(sigma0))
    report.sigma1 = sigma1

    pieces = [extract_halfball_submesh(u.mesh, center, r) for r in radii]
    p2s = [field.sup_inf_on_halfball(center, r)[1] for r in radii]

    def run(i):
        submesh, vmap = pieces[i]
        return _frozen_on_submesh(u, submesh, vmap, p2s[i], tol, eps_schedule)

    workers = int(os.environ.get("PXTHIN_THREADS", "1") or "1")
    workers = max(1, min(workers, len(radii)))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            solutions = list(ex.map(run, range(len(radii))))
    else:
        solutions = [run(i) for i in range(len(radii))]

    for i, r in enumerate(radii):
        submesh, vmap = pieces[i]
        p2 = p2s[i]
        u0 = solutions[i]
        du = FeFunction(submesh, u.values[vmap]).element_gradients()
        du0 = u0.element_gradients()
        err = _gradient_mass(submesh, du - du0, p2)
        e2r = _ball_energy(u, center, 2.0 * r, p2)
        majorant = report.M ** sigma1 * e2r + r * r
        report.radii.append(r)
        report.p2.append(p2)
        report.error.append(err)
        report.energy_2r.append(e2r)
        report.ratio.append(err / majorant)
        report.energy_sub_u.append(_gradient_mass(submesh, du, p2))
        report.energy_sub_u0.append(_gradient_mass(submesh, du0, p2))

    pos = [(r, q) for r, q in zip(report.radii, report.ratio) if q > 0.0]
    if len(pos) >= 2:
        lr = np.log([p[0] for p in pos])
        lq = np.log([p[1] for p in pos])
        report.fitted_rate = float(np.polyfit(lr, lq, 1)[0])
    return report
