"""Standalone verifiable estimates: iteration lemma, vector monotonicity,
radius formulas, higher-integrability scans, and gradient Hölder fits.
"""

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import PreconditionError
from .mesh import GEOM_TOL
from .vxspace import campanato_profile, modular

# ---------------------------------------------------------------- iteration

_GRID_HALVINGS = 40


@dataclass
class IterationConstants:
    A: float
    alpha1: float
    alpha2: float
    B: float = 0.0
    alpha3: float = 0.0
    kappa: float = 0.0
    eps0: float = 0.0
    c: float = 0.0

    def validate(self):
        if not (self.alpha1 > self.alpha3 > self.alpha2):
            raise PreconditionError("need alpha1 > alpha3 > alpha2")
        if not (0.0 < self.kappa < 0.5):
            raise PreconditionError("kappa must lie in (0, 1/2)")
        # checks in log form; the raw powers overflow for tiny kappa
        log_k = np.log(self.kappa)
        if self.A > 0.0:
            lhs = (self.alpha1 + 1.0) * np.log(2.0) + self.alpha1 * log_k \
                + np.log(self.A)
            if lhs > self.alpha3 * log_k + 1e-12:
                raise PreconditionError("kappa fails the smallness inequality")
        if self.eps0 <= 0.0:
            raise PreconditionError("eps0 underflowed; constants not representable")
        if np.log(self.eps0) - self.alpha1 * log_k >= 0.0:
            raise PreconditionError("eps0 too large for kappa")


def iteration_constants(A, alpha1, alpha2, B=0.0):
    """Explicit constants for the geometric iteration argument.

    kappa is the halving factor, eps0 the admissible perturbation size,
    and c the constant carried into the decay conclusion.
    """
    A = float(A)
    alpha1 = float(alpha1)
    alpha2 = float(alpha2)
    if A < 0.0 or alpha2 < 0.0 or not alpha1 > alpha2:
        raise PreconditionError("need A >= 0 and alpha1 > alpha2 >= 0")
    alpha3 = 0.5 * (alpha1 + alpha2)
    base = np.float64(2.0) ** (-(alpha1 + 1.0)) / np.float64(max(A, 1e-12))
    with np.errstate(over="ignore", under="ignore"):
        kappa = min(0.49, float(base ** (1.0 / (alpha1 - alpha3))))
    # guard against pow rounding flipping the smallness inequality
    while kappa > 0.0 and 2.0 ** (alpha1 + 1.0) * kappa ** alpha1 * A > kappa ** alpha3:
        kappa = np.nextafter(kappa, 0.0)
    eps0 = kappa ** alpha1 / 2.0
    with np.errstate(over="ignore", divide="ignore"):
        k = np.float64(kappa)
        c = float(k ** (-alpha2) * max(1.0, k ** (-alpha2)
                                       / (1.0 - k ** (alpha3 - alpha2))))
    out = IterationConstants(A=A, alpha1=alpha1, alpha2=alpha2, B=float(B),
                             alpha3=alpha3, kappa=kappa, eps0=eps0, c=c)
    out.validate()
    return out


def iteration_verify(consts, trials, seed):
    """Adversarial check of the iteration conclusion on dyadic grids.

    Each trial builds the largest monotone step function satisfying the
    hypothesis (perturbation eps drawn in [0, eps0)), then measures the
    minimal slack of the conclusion over all grid pairs. Non-negative
    slack in every trial certifies the constant c.
    """
    consts.validate()
    rng = np.random.default_rng(seed)
    A, B, c = consts.A, consts.B, consts.c
    a1, a2 = consts.alpha1, consts.alpha2
    K = _GRID_HALVINGS
    m = np.arange(K + 1)
    pow_a1 = 2.0 ** (-a1 * m)
    pow_a2 = 2.0 ** (-a2 * m)
    worst = np.inf
    for _ in range(int(trials)):
        eps = rng.uniform(0.0, consts.eps0)
        phi = np.empty(K + 1)
        phi[0] = 10.0 ** rng.uniform(-3.0, 3.0)
        phi[1] = phi[0]
        for k in range(2, K + 1):
            j = np.arange(1, k)
            cand = A * (pow_a1[k - j] + eps) * phi[j - 1] + B * pow_a2[j]
            phi[k] = min(phi[k - 1], cand.min())
        for k in range(1, K + 1):
            j = np.arange(0, k)
            rhs = c * (pow_a2[k - j] * phi[j] + B * pow_a2[k])
            worst = min(worst, float((rhs - phi[k]).min()))
    return worst


def iteration_suite(trials, seed):
    """Randomized constants plus one adversarial sequence per trial."""
    rng = np.random.default_rng(seed)
    worst = np.inf
    for t in range(int(trials)):
        alpha2 = rng.uniform(0.0, 3.8)
        alpha1 = rng.uniform(alpha2 + 0.2, 4.0)
        A = 10.0 ** rng.uniform(-1.0, 1.0)
        B = 0.0 if rng.uniform() < 0.25 else 10.0 ** rng.uniform(-2.0, 2.0)
        consts = iteration_constants(A, alpha1, alpha2, B=B)
        worst = min(worst, iteration_verify(consts, 1, seed=int(rng.integers(2 ** 62))))
    return worst


# ------------------------------------------------------------- monotonicity

# Calibrated bound for the vector inequality
#   |xi1 - xi2|^p <= c*eps*(|xi1|^p + |xi2|^p)
#                    + c/eps * (|xi1|^{p-2}xi1 - |xi2|^{p-2}xi2).(xi1 - xi2)
# over p in [1.1, 10] and eps in (0, 1). Calibrated by maximizing the
# required constant over 10^6 random tuples plus the analytic worst family
# (antipodal pairs of equal length at the top exponent), with 5% headroom.
MONO_GAMMA = (1.1, 10.0)
MONO_C = 179.2


def _mono_parts(xi1, xi2, p):
    n1 = np.hypot(xi1[..., 0], xi1[..., 1])
    n2 = np.hypot(xi2[..., 0], xi2[..., 1])
    d = xi1 - xi2
    lhs = np.hypot(d[..., 0], d[..., 1]) ** p
    vol = n1 ** p + n2 ** p
    f1 = np.where(n1 > 0.0, n1, 1.0) ** (p - 2.0) * (n1 > 0.0)
    f2 = np.where(n2 > 0.0, n2, 1.0) ** (p - 2.0) * (n2 > 0.0)
    mono = ((f1[..., None] * xi1 - f2[..., None] * xi2) * d).sum(axis=-1)
    return lhs, vol, np.maximum(mono, 0.0)


def _sample_tuples(rng, gamma1, gamma2, n):
    scale = 10.0 ** rng.uniform(-2.0, 2.0, size=(n, 1))
    xi1 = rng.uniform(-1.0, 1.0, size=(n, 2)) * scale
    xi2 = rng.uniform(-1.0, 1.0, size=(n, 2)) * scale
    p = rng.uniform(gamma1, gamma2, size=n)
    eps = np.maximum(rng.uniform(0.0, 1.0, size=n), 1e-300)
    return xi1, xi2, p, eps


def calibrate_monotonicity(gamma1, gamma2, samples=1_000_000, seed=20123,
                           safety=1.05):
    """Required constant: max over samples of LHS/(eps*vol + mono/eps),
    floored by the antipodal worst family, times the safety factor."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    done = 0
    while done < samples:
        n = min(200_000, samples - done)
        xi1, xi2, p, eps = _sample_tuples(rng, gamma1, gamma2, n)
        lhs, vol, mono = _mono_parts(xi1, xi2, p)
        denom = eps * vol + mono / eps
        ok = denom > 0.0
        if ok.any():
            worst = max(worst, float((lhs[ok] / denom[ok]).max()))
        done += n
    # antipodal equal-length pairs: denominator sup over eps in (0,1) is
    # attained at eps -> 1, yielding 2^p / 6 at the top exponent
    worst = max(worst, 2.0 ** gamma2 / 6.0)
    return safety * worst


def monotonicity_check(gamma1, gamma2, trials, seed):
    """Worst LHS/RHS ratio of the vector inequality over random tuples."""
    gamma1 = float(gamma1)
    gamma2 = float(gamma2)
    if not (1.0 < gamma1 <= gamma2):
        raise PreconditionError("need 1 < gamma1 <= gamma2")
    if MONO_GAMMA[0] <= gamma1 and gamma2 <= MONO_GAMMA[1]:
        c = MONO_C
    else:
        c = calibrate_monotonicity(gamma1, gamma2, samples=100_000, seed=617)
    rng = np.random.default_rng(seed)
    worst = 0.0
    remaining = int(trials)
    while remaining > 0:
        n = min(200_000, remaining)
        xi1, xi2, p, eps = _sample_tuples(rng, gamma1, gamma2, n)
        lhs, vol, mono = _mono_parts(xi1, xi2, p)
        rhs = c * (eps * vol + mono / eps)
        ok = rhs > 0.0
        if ok.any():
            worst = max(worst, float((lhs[ok] / rhs[ok]).max()))
        remaining -= n
    return worst


# ------------------------------------------------------------ radius, alpha

def admissible_radius(field, M, sigma0=None):
    """Largest half-ball radius the local estimates tolerate.

    With sigma0 given, additionally intersects the constraints tying the
    oscillation of the exponent to the integrability margin.
    """
    M = float(M)
    if M < 1.0:
        raise PreconditionError("M must be at least 1")
    L = field.holder_seminorm
    beta = field.beta
    cap = 1.0 / (8.0 * M)
    if L <= 0.0:
        return cap
    g1 = field.gamma1
    t1 = (beta / (8.0 * L)) ** (2.0 / beta)
    t2 = 0.25 * (g1 * g1 / ((4.0 + g1) * L)) ** (1.0 / beta)
    r = min(t1, t2, cap)
    if sigma0 is not None:
        sigma0 = float(sigma0)
        if sigma0 < 0.0:
            raise PreconditionError("sigma0 must be non-negative")
        sigma1 = min(beta / 8.0, sigma0)
        if sigma0 > 0.0:
            r = min(r, 0.5 * (sigma0 / (2.0 * L)) ** (1.0 / beta))
        if sigma1 > 0.0:
            r = min(r, (sigma1 / 4.0) ** (1.0 / beta) / L)
        else:
            r = 0.0
    return r


def theoretical_alpha(alpha0, beta, gamma2):
    """Hölder exponent of the gradient predicted by the decay argument."""
    alpha0 = float(alpha0)
    beta = float(beta)
    gamma2 = float(gamma2)
    if not 0.0 < alpha0 < 1.0:
        raise PreconditionError("alpha0 must lie in (0, 1)")
    if not 0.0 < beta <= 1.0:
        raise PreconditionError("beta must lie in (0, 1]")
    if not gamma2 > 1.0:
        raise PreconditionError("gamma2 must exceed 1")
    b0 = beta / 4.0
    return alpha0 * b0 / (2.0 * (2.0 + alpha0 + b0) * gamma2)


# ------------------------------------------------------------------ reports

DEFAULT_SIGMA_GRID = (0.0, 0.01, 0.02, 0.05, 0.1, 0.2)
DEFAULT_C_CAP = 1e3


@dataclass
class RegularityReport:
    centers: list = dc_field(default_factory=list)
    profiles: list = dc_field(default_factory=list)
    alphas: list = dc_field(default_factory=list)
    alpha_min: float = np.nan
    sigma_grid: list = dc_field(default_factory=list)
    c_sigma: list = dc_field(default_factory=list)
    sigma0: float = np.nan
    rh_radii: list = dc_field(default_factory=list)
    rh_ratios: list = dc_field(default_factory=list)
    admissible_r: float = np.nan
    alpha_theory: float = np.nan


def _ball_element_mask(mesh, center, radius):
    d = np.hypot(mesh.vertices[:, 0] - center[0], mesh.vertices[:, 1] - center[1])
    inside = d <= radius + GEOM_TOL
    return inside[mesh.triangles].all(axis=1)


def higher_integrability_scan(u, w, field, center, r, sigma_grid=None,
                              c_cap=DEFAULT_C_CAP):
    """Implied constants of the gradient self-improvement estimate.

    All three quantities are normalized by the area of the outer ball's
    element selection, so the sigma = 0 constant is below 1 by set
    inclusion alone. sigma0 is the largest grid sigma whose constant
    stays under c_cap. Reverse-Hölder ratios over dyadic shrinkages of
    the outer ball use each ball's own average.
    """
    from .comparison import compute_M

    center = np.asarray(center, dtype=float)
    r = float(r)
    if sigma_grid is None:
        sigma_grid = DEFAULT_SIGMA_GRID
    sigma_grid = sorted(float(s) for s in sigma_grid)
    if sigma_grid[0] != 0.0:
        raise PreconditionError("sigma grid must include 0")
    if np.hypot(center[0], center[1]) + 2.0 * r > 0.75 + GEOM_TOL:
        raise PreconditionError("2r half-ball must stay inside the 3/4 ball")
    M = compute_M(u, w, field)
    r_adm = admissible_radius(field, M)
    if r > r_adm + GEOM_TOL:
        raise PreconditionError(
            f"radius {r} exceeds the admissible radius {r_adm}")

    mesh = u.mesh
    mask_r = _ball_element_mask(mesh, center, r)
    mask_2r = _ball_element_mask(mesh, center, 2.0 * r)
    if mask_r.sum() < 3 or mask_2r.sum() < 3:
        raise PreconditionError("ball selections are too coarse")
    area2 = float(mesh.areas[mask_2r].sum())
    du = u.gradient_field()
    dw = w.gradient_field()

    report = RegularityReport()
    report.admissible_r = r_adm
    base_2r = modular(du, field, element_mask=mask_2r) / area2
    for sigma in sigma_grid:
        lhs = modular(du, field, element_mask=mask_r, sigma=sigma) / area2
        rhs1 = base_2r ** (1.0 + sigma)
        rhs2 = modular(dw, field, element_mask=mask_2r, sigma=sigma) / area2
        report.sigma_grid.append(sigma)
        report.c_sigma.append(lhs / (rhs1 + rhs2 + 1.0))
    passing = [s for s, c in zip(report.sigma_grid, report.c_sigma) if c <= c_cap]
    report.sigma0 = max(passing) if passing else 0.0

    rho = 2.0 * r
    while rho > 2.0 * mesh.h_max and len(report.rh_radii) < 6:
        mask = _ball_element_mask(mesh, center, rho)
        if mask.sum() < 3:
            break
        area = float(mesh.areas[mask].sum())
        base = modular(du, field, element_mask=mask) / area
        row = []
        for sigma in report.sigma_grid:
            high = modular(du, field, element_mask=mask, sigma=sigma) / area
            row.append((high ** (1.0 / (1.0 + sigma)) / base)
                       if base > 0.0 else np.inf)
        report.rh_radii.append(rho)
        report.rh_ratios.append(row)
        rho *= 0.5
    return report


def gradient_holder_fit(u, field, centers, radii):
    """Campanato-type profile fit of the gradient around axis points.

    Each center uses the top exponent value of its largest half-ball as
    the fitting power; the profile growth rate converts to a gradient
    Hölder exponent.
    """
    radii = [float(r) for r in radii]
    if len(radii) < 2:
        raise PreconditionError("need at least 2 radii")
    report = RegularityReport()
    du = u.gradient_field()
    for center in centers:
        center = np.asarray(center, dtype=float)
        if abs(center[1]) > GEOM_TOL or abs(center[0]) > 0.5 + GEOM_TOL:
            raise PreconditionError("centers must lie on the axis with |x1| <= 1/2")
        p2 = field.sup_inf_on_halfball(center, max(radii))[1]
        prof = campanato_profile(du, p2, center, radii)
        report.centers.append(tuple(center))
        report.profiles.append(prof)
        report.alphas.append(prof.alpha)
    report.alpha_min = min(report.alphas) if report.alphas else np.nan
    return report
