"""Reference construction, reflection checks and frozen-exponent decay."""

import numpy as np
import pytest

from pxthin import (EnergySetup, ExponentField, FeFunction, ObstacleProblem,
                    PreconditionError, build, build_reference,
                    comparison_decay, compute_M, extract_halfball_submesh,
                    frozen_solve, reflect_and_check, solve)
from pxthin.comparison import reflect_full_disk


def test_reference_matches_arctan_oracle(solved_p2_sig32_l5):
    # with arc level m and p = 2 the reference is harmonic, vanishes on the
    # axis and equals m on the arc; separation of variables on the half disk
    # sums to w(0, y) = m * (4/pi) * arctan(y)
    problem, u, _, _ = solved_p2_sig32_l5
    w, report = build_reference(u, problem, m_override=1.0)
    mesh = problem.setup.mesh
    idx = np.flatnonzero((mesh.vertices[:, 0] == 0.0)
                         & (np.abs(mesh.vertices[:, 1] - 0.5) < 1e-12))[0]
    oracle = (4.0 / np.pi) * np.arctan(0.5)
    assert abs(w.values[idx] - oracle) <= 2e-3
    assert np.isfinite(report.ordering_margin)


def test_reference_sits_below_the_solution(solved_p2_sig32_l5):
    problem, u, _, _ = solved_p2_sig32_l5
    w, report = build_reference(u, problem)
    assert report.ordering_margin >= -1e-8
    assert report.ordering_margin == pytest.approx(
        float((u.values - w.values).min()))
    # reference boundary level is the arc minimum of u
    arc = problem.setup.mesh.vertex_tags == 1
    assert np.max(np.abs(w.values[arc] - u.values[arc].min())) == 0.0
    thin = problem.setup.mesh.vertex_tags == 2
    assert np.max(np.abs(w.values[thin])) == 0.0


def test_odd_reflection_residual_constant_exponent(solved_p2_sig32_l5):
    problem, u, _, _ = solved_p2_sig32_l5
    w, _ = build_reference(u, problem, m_override=1.0)
    res = reflect_and_check(w, problem.setup.field)
    assert res <= 1e-8


def test_odd_reflection_residual_variable_exponent(solved_sin_sig32_l6):
    problem, u, _, _ = solved_sin_sig32_l6
    w, _ = build_reference(u, problem)
    res = reflect_and_check(w, problem.setup.field)
    assert res <= 1e-8


def test_reflection_rejects_nonvanishing_trace(mesh4, p2):
    w = FeFunction(mesh4, np.ones(mesh4.num_vertices))
    with pytest.raises(PreconditionError):
        reflect_and_check(w, p2)


def test_full_disk_reflection_geometry(solved_p2_sig32_l5):
    problem, u, _, _ = solved_p2_sig32_l5
    w, _ = build_reference(u, problem)
    mesh = problem.setup.mesh
    full, w_odd = reflect_full_disk(w)
    assert full.num_triangles == 2 * mesh.num_triangles
    # axis vertices are shared except the two corners, which are duplicated
    # because the odd extension jumps across them
    n_axis = int(np.sum(np.abs(mesh.vertices[:, 1]) < 1e-12))
    assert full.num_vertices == 2 * mesh.num_vertices - n_axis + 2
    assert float(np.sum(full.areas)) == pytest.approx(np.pi, abs=2e-2)
    # oddness: value at the mirror of each upper vertex is the negation
    upper = mesh.vertices[:, 1] > 1e-12
    probe = mesh.vertices[upper][:7]
    vals = w.values[upper][:7]
    for pt, v in zip(probe, vals):
        mirrored = np.array([pt[0], -pt[1]])
        j = np.argmin(np.hypot(*(full.vertices - mirrored).T))
        assert w_odd.values[j] == pytest.approx(-v, abs=1e-14)


def test_compute_m_at_least_one(solved_p2_sig32_l5):
    problem, u, _, _ = solved_p2_sig32_l5
    w, _ = build_reference(u, problem)
    M = compute_M(u, w, problem.setup.field)
    assert M >= 1.0
    assert np.isfinite(M)


def test_compute_m_requires_matching_meshes(solved_p2_sig32_l5, mesh4, p2):
    problem, u, _, _ = solved_p2_sig32_l5
    other = FeFunction(mesh4, np.zeros(mesh4.num_vertices))
    with pytest.raises(PreconditionError):
        compute_M(u, other, p2)


def test_frozen_solve_is_identity_for_p2(solved_p2_sig32_l6):
    # freezing a constant exponent at its own value changes nothing, so the
    # local resolve reproduces the restricted solution bitwise
    problem, u, _, _ = solved_p2_sig32_l6
    u0, p2_val = frozen_solve(u, (-0.35, 0.0), 0.1, problem.setup.field)
    assert p2_val == 2.0
    submesh, vmap = extract_halfball_submesh(u.mesh, (-0.35, 0.0), 0.1)
    assert np.array_equal(u0.values, u.values[vmap])


def test_decay_radii_validation(solved_p2_sig32_l5, p2):
    _, u, _, _ = solved_p2_sig32_l5
    with pytest.raises(PreconditionError):
        comparison_decay(u, p2, (0.0, 0.0), [0.2, 0.1], M_value=2.0)
    with pytest.raises(PreconditionError):
        comparison_decay(u, p2, (0.0, 0.0), [0.1, 0.2, 0.3], M_value=2.0)
    with pytest.raises(PreconditionError):
        # 2r ball pokes out of the 3/4 ball
        comparison_decay(u, p2, (0.5, 0.0), [0.2, 0.1, 0.05], M_value=2.0)
    with pytest.raises(PreconditionError):
        comparison_decay(u, p2, (0.0, 0.0), [0.2, 0.1, 0.05])


def test_decay_normalization_and_fit(solved_p2_sig32_l5):
    problem, u, _, _ = solved_p2_sig32_l5
    field = problem.setup.field
    rep = comparison_decay(u, field, (-0.05, 0.0), [0.3, 0.2, 0.1],
                           problem=problem)
    assert rep.radii == [0.3, 0.2, 0.1]
    assert rep.p2 == [2.0, 2.0, 2.0]
    assert rep.sigma1 == pytest.approx(0.1)
    assert all(e >= 0.0 for e in rep.error)
    assert all(e2 > 0.0 for e2 in rep.energy_2r)
    for err, e2r, q, r in zip(rep.error, rep.energy_2r, rep.ratio, rep.radii):
        assert q == pytest.approx(err / (rep.M ** rep.sigma1 * e2r + r * r))
    # these balls straddle the contact transition, so the locally resolved
    # competitor differs from the restriction by a mesh-scale amount
    assert all(e > 0.0 for e in rep.error)
    assert np.isfinite(rep.fitted_rate)
    assert rep.M >= 1.0
    assert rep.reflect_residual <= 1e-8


def test_decay_is_exact_on_a_contact_ball_for_p2(solved_p2_sig32_l6):
    # inside the coincidence region the restricted solution already satisfies
    # the frozen optimality system, so every error vanishes identically
    problem, u, _, _ = solved_p2_sig32_l6
    rep = comparison_decay(u, problem.setup.field, (-0.35, 0.0),
                           [0.2, 0.1, 0.05], problem=problem)
    assert rep.error == [0.0, 0.0, 0.0]
    assert rep.ratio == [0.0, 0.0, 0.0]
    assert np.isnan(rep.fitted_rate)


def test_decay_sigma1_caps_at_beta_over_8(solved_p2_sig32_l5):
    _, u, _, _ = solved_p2_sig32_l5
    field = ExponentField("constant", [2.0], beta=0.4)
    rep = comparison_decay(u, field, (-0.05, 0.0), [0.3, 0.2, 0.1],
                           M_value=2.0, sigma0=0.3)
    assert rep.sigma1 == pytest.approx(0.05)


def test_decay_variable_exponent_decreases(solved_sin_sig32_l6):
    problem, u, _, _ = solved_sin_sig32_l6
    field = problem.setup.field
    rep = comparison_decay(u, field, (-0.35, 0.0), [0.2, 0.1, 0.05],
                           problem=problem)
    assert rep.ratio[0] > rep.ratio[1] > rep.ratio[2] > 0.0
    assert rep.fitted_rate > 0.0
    # submesh energies recorded for both competitors, frozen one never larger
    for a, b in zip(rep.energy_sub_u, rep.energy_sub_u0):
        assert a > 0.0 and b > 0.0
        assert a - b >= -1e-10
