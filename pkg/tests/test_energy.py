"""Energy, residual and Hessian assembly.  The three must be consistent as
derivatives of each other; that is what the finite-difference probes pin."""

import numpy as np
import pytest

from pxthin import (EnergySetup, ExponentField, PreconditionError, build,
                    energy, hessian, residual)


def _random_state(mesh, seed):
    rng = np.random.default_rng(seed)
    return rng.standard_normal(mesh.num_vertices)


def test_quadratic_energy_is_exact(mesh3, p2):
    # |D x2| = 1 on every element, so the p = 2 energy is exactly area/2
    setup = EnergySetup(mesh3, p2)
    v = mesh3.vertices[:, 1].copy()
    assert energy(setup, v) == mesh3.areas.sum() / 2.0


def test_quartic_energy_of_linear_function(mesh3):
    setup = EnergySetup(mesh3, ExponentField("constant", [4.0]))
    v = mesh3.vertices[:, 0].copy()
    assert energy(setup, v) == pytest.approx(mesh3.areas.sum() / 4.0, rel=1e-14)


def test_energy_of_zero_state_is_zero(mesh3, sin_field):
    setup = EnergySetup(mesh3, sin_field)
    assert energy(setup, np.zeros(mesh3.num_vertices)) == 0.0


def test_smoothing_never_lowers_the_energy(mesh3, sin_field):
    # (|g|^2 + eps^2)^{p/2} >= |g|^p pointwise
    base = EnergySetup(mesh3, sin_field)
    smoothed = base.with_epsilon(1e-2)
    for seed in range(5):
        v = _random_state(mesh3, seed)
        assert energy(smoothed, v) >= energy(base, v)


def test_with_epsilon_shares_the_mesh_caches(mesh3, sin_field):
    base = EnergySetup(mesh3, sin_field)
    smoothed = base.with_epsilon(1e-3)
    assert smoothed.mesh is base.mesh
    assert smoothed.epsilon == 1e-3
    assert base.epsilon == 0.0


def test_residual_matches_energy_differences(mesh3, sin_field):
    # centered differences of the energy along random directions
    setup = EnergySetup(mesh3, sin_field).with_epsilon(1e-2)
    rng = np.random.default_rng(99)
    v = _random_state(mesh3, 1)
    r = residual(setup, v)
    t = 1e-6
    worst = 0.0
    for _ in range(20):
        d = rng.standard_normal(v.size)
        fd = (energy(setup, v + t * d) - energy(setup, v - t * d)) / (2.0 * t)
        exact = float(r @ d)
        worst = max(worst, abs(fd - exact) / max(1.0, abs(exact)))
    assert worst <= 1e-6


def test_hessian_matches_residual_differences(mesh3, sin_field):
    setup = EnergySetup(mesh3, sin_field).with_epsilon(1e-2)
    rng = np.random.default_rng(7)
    v = _random_state(mesh3, 2)
    H = hessian(setup, v)
    t = 1e-6
    for _ in range(10):
        d = rng.standard_normal(v.size)
        fd = (residual(setup, v + t * d) - residual(setup, v - t * d)) / (2.0 * t)
        exact = H @ d
        denom = max(1.0, float(np.linalg.norm(exact)))
        assert np.linalg.norm(fd - exact) / denom <= 1e-4


def test_hessian_is_exactly_symmetric(mesh3, sin_field):
    setup = EnergySetup(mesh3, sin_field).with_epsilon(1e-2)
    H = hessian(setup, _random_state(mesh3, 3))
    assert abs(H - H.T).max() == 0.0


def test_hessian_is_positive_semidefinite(mesh3, sin_field):
    # the energy is convex for exponents above 1, so d H d >= 0
    setup = EnergySetup(mesh3, sin_field).with_epsilon(1e-2)
    v = _random_state(mesh3, 4)
    H = hessian(setup, v)
    rng = np.random.default_rng(12)
    for _ in range(20):
        d = rng.standard_normal(v.size)
        assert float(d @ (H @ d)) >= -1e-10 * float(d @ d)


def test_hessian_requires_positive_epsilon(mesh3, sin_field):
    setup = EnergySetup(mesh3, sin_field)
    with pytest.raises(PreconditionError):
        hessian(setup, np.zeros(mesh3.num_vertices))


def test_residual_of_harmonic_interior(mesh4, p2):
    # p = 2, v = x2: the interior residual vanishes by exact Galerkin
    # orthogonality of the linear function
    setup = EnergySetup(mesh4, p2)
    v = mesh4.vertices[:, 1].copy()
    r = residual(setup, v)
    interior = mesh4.vertex_tags == 0
    assert np.max(np.abs(r[interior])) <= 1e-14


def test_state_shape_is_validated(mesh3, p2):
    setup = EnergySetup(mesh3, p2)
    with pytest.raises(PreconditionError):
        energy(setup, np.zeros(mesh3.num_vertices + 2))
