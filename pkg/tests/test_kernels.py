"""Kernel formulas, identities, and the semicircle-average quadrature oracle."""

import numpy as np
import pytest

from gmclab import kernels
from gmclab.errors import DiagonalSingularity, QuadratureUnstable


def test_neumann_values():
    # -ln(1 * 3) for a vertical pair at heights 1 and 2
    assert kernels.eval_neumann((0, 1), (0, 2)) == pytest.approx(-np.log(3.0))
    # boundary pair: |z - w| = |z - conj(w)| = 2
    assert kernels.eval_neumann((1, 0), (-1, 0)) == pytest.approx(
        -2.0 * np.log(2.0))


def test_neumann_diagonal_rejected():
    with pytest.raises(DiagonalSingularity):
        kernels.eval_neumann((0, 1), (0, 1))
    # conjugate-reflection coincidence on the boundary
    with pytest.raises(DiagonalSingularity):
        kernels.eval_boundary(0.3, 0.3)


def test_boundary_values():
    assert kernels.eval_boundary(0.0, 1.0) == pytest.approx(0.0)
    assert kernels.eval_boundary(0.0, 0.5) == pytest.approx(2.0 * np.log(2.0))
    assert kernels.eval_boundary(0.0, np.e) == pytest.approx(-2.0)
    # equals the Neumann kernel restricted to the boundary (exactly)
    for x, y in [(-0.4, 0.2), (0.1, 0.9), (-1.0, 1.5)]:
        assert kernels.eval_boundary(x, y) == kernels.eval_neumann(
            (x, 0.0), (y, 0.0))


def test_lateral_hand_value():
    # z = i, w = 1: ln[1 / (sqrt(2) * sqrt(2))] = -ln 2, recomputed by hand
    assert kernels.eval_lateral(0.0, np.pi / 2, 0.0, 0.0) == pytest.approx(
        -np.log(2.0))


def test_lateral_stationarity_and_symmetry():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        t1, t2 = rng.uniform(0, 3, size=2)
        th1, th2 = rng.uniform(0, np.pi, size=2)
        t2 += 0.01  # keep off the singular set
        a = kernels.eval_lateral(t1, th1, t2, th2)
        b = kernels.eval_lateral(t1 + 1.7, th1, t2 + 1.7, th2)
        assert a == pytest.approx(b, abs=1e-12)
        c = kernels.eval_lateral(t2, th2, t1, th1)
        assert a == pytest.approx(c, rel=1e-12)


def test_kernel_symmetry_randomized():
    rng = np.random.default_rng(11)
    spec = kernels.KernelSpec()
    for _ in range(1000):
        z = (rng.uniform(-1, 1), rng.uniform(0.01, 2))
        w = (rng.uniform(-1, 1), rng.uniform(0.01, 2))
        assert kernels.eval_neumann(z, w) == pytest.approx(
            kernels.eval_neumann(w, z), rel=1e-12)
        assert kernels.evaluate(spec, z, w) == kernels.eval_neumann(z, w)


def test_perturbed_reductions():
    z, w = (1.0, 1.0), (2.0, 1.0)
    base = kernels.eval_neumann(z, w)
    assert kernels.eval_perturbed(z, w, lambda a, b: 0.0) == pytest.approx(base)
    assert kernels.eval_perturbed(z, w, lambda a, b: 3.25) == pytest.approx(
        base + 3.25)
    g = lambda a, b: 0.1 * a[..., 0] * b[..., 0]
    assert kernels.eval_perturbed(z, w, g) == pytest.approx(base + 0.2)


def test_dirichlet_vanishes_on_boundary():
    assert kernels.eval_dirichlet((0.3, 0.0), (-0.2, 0.0)) == pytest.approx(0.0)
    # positive in the bulk (direct distance below image distance)
    assert kernels.eval_dirichlet((0.0, 0.5), (0.1, 0.6)) > 0


def test_semicircle_avg_cov():
    assert kernels.semicircle_avg_cov(1.0, 2.0) == 2.0  # 2 min(s, t)
    assert kernels.semicircle_avg_cov(0.0, 5.0) == 0.0
    assert kernels.semicircle_avg_cov(3.0, 3.0) == 6.0


@pytest.mark.parametrize("s,t", [(0.25, 0.5), (0.25, 1.0), (0.5, 2.0),
                                 (1.0, 2.0), (0.25, 2.0), (0.5, 1.0)])
def test_quadrature_matches_analytic(s, t):
    q = kernels.quadrature_cov(s, t, 2048, tol=1e-6)
    assert abs(q - 2.0 * min(s, t)) <= 1e-6


def test_quadrature_diagonal_offset_rule():
    q = kernels.quadrature_cov(0.5, 0.5, 2048)
    assert abs(q - 1.0) <= 1e-4


def test_quadrature_unstable_when_coarse():
    with pytest.raises(QuadratureUnstable):
        kernels.quadrature_cov(1.0, 2.0, 8, tol=1e-9)


def test_lateral_zero_angular_average():
    for (t1, t2) in [(0.3, 1.1), (0.05, 2.4), (1.0, 1.5)]:
        assert abs(kernels.lateral_avg_quadrature(t1, t2, 512)) <= 1e-5


def test_pairwise_matches_scalar():
    pts = np.array([[0.0, 0.5], [0.3, 1.0], [-0.2, 0.0]])
    mat = kernels.pairwise(kernels.KernelSpec(), pts, pts)
    for i in range(3):
        for j in range(3):
            if i != j:
                assert mat[i, j] == pytest.approx(
                    kernels.eval_neumann(pts[i], pts[j]))


def test_kernelspec_validation():
    with pytest.raises(ValueError):
        kernels.KernelSpec(kind="nope")
    with pytest.raises(ValueError):
        kernels.KernelSpec(kind=kernels.PERTURBED)  # missing g
    with pytest.raises(ValueError):
        kernels.KernelSpec(g=lambda a, b: 0.0)  # g without perturbed
