"""Grid geometry, covariance factorization, sampling, and Girsanov shifts."""

import numpy as np
import pytest

from gmclab import fieldsim as fs
from gmclab import kernels
from gmclab.errors import InvalidResolution, NotPositiveDefinite, SingularShift


def test_grid_geometry_small():
    g = fs.build_grid(1.0, 2, 2)
    assert g.n_bulk_cells == 4
    assert g.cell_area == pytest.approx(1.0)
    assert g.seg_len == pytest.approx(1.0)
    assert np.all(g.bulk_centers[:, 1] > 0)
    g2 = fs.build_grid(0.5, 4, 4)
    assert g2.n_bulk_cells == 16
    assert g2.cell_area == pytest.approx(0.0625)


def test_grid_tiles_exactly():
    g = fs.build_grid(0.5, 8, 16)
    assert g.n_nodes == 64 + 16
    assert g.n_bulk_cells * g.cell_area == pytest.approx(1.0)  # area of Q_r
    assert g.n_bdy * g.seg_len == pytest.approx(1.0)
    assert np.all(np.abs(g.bdy_centers) < 0.5)


def test_grid_invalid():
    with pytest.raises(InvalidResolution):
        fs.build_grid(-1.0, 4, 4)
    with pytest.raises(InvalidResolution):
        fs.build_grid(0.5, 0, 4)
    with pytest.raises(InvalidResolution):
        fs.build_grid(0.5, 80, 80)  # beyond the dense ceiling


def test_cov_factor_reconstruction():
    g = fs.build_grid(0.5, 6, 12)
    f = fs.build_cov(g)
    cov = f.covariance()
    rel = np.abs(f.lower_factor @ f.lower_factor.T - cov).max() \
        / np.abs(cov).max()
    assert rel <= 1e-10
    assert np.all(f.diag_var > 0)
    # off-diagonal entries are kernel values at centers
    pts = g.node_points()
    k = kernels.pairwise(kernels.KernelSpec(), pts, pts)
    off = ~np.eye(g.n_nodes, dtype=bool)
    assert np.abs((cov - k)[off]).max() <= f.jitter_used + 1e-12


def test_not_positive_definite_on_large_cube():
    g = fs.build_grid(1.5, 8, 8)
    with pytest.raises(NotPositiveDefinite):
        fs.build_cov(g)


def test_perturbed_additivity():
    g = fs.build_grid(0.5, 4, 8)
    base = fs.build_cov(g).covariance()
    c = 0.7
    pert = fs.build_cov(g, kernels.KernelSpec(
        kind=kernels.PERTURBED, g=lambda a, b: c + 0.0 * (
            np.asarray(a)[..., 0] * np.asarray(b)[..., 0])))
    assert np.allclose(pert.covariance(), base + c, atol=1e-9)


def test_boundary_restriction_two_node_example():
    # off-diagonal -2 ln 1 = 0 for boundary nodes at x = -0.5, +0.5
    g = fs.build_grid(1.0, 2, 2)  # midpoints at -0.5, +0.5
    pts = g.node_points()[g.n_bulk_cells:]
    k = kernels.pairwise(kernels.KernelSpec(kind=kernels.BOUNDARY_RESTRICTION),
                         pts, pts)
    assert k[0, 1] == pytest.approx(0.0, abs=1e-12)
    # on a PD-sized cube the factored matrix carries the same entries
    g2 = fs.build_grid(0.25, 2, 4)
    f2 = fs.build_cov(g2, kernels.KernelSpec(kind=kernels.BOUNDARY_RESTRICTION))
    cov = f2.covariance()
    nb = g2.n_bulk_cells
    d = abs(g2.bdy_centers[0] - g2.bdy_centers[1])
    assert cov[nb, nb + 1] == pytest.approx(-2.0 * np.log(d), abs=1e-9)


def test_coupling_bdy_flag():
    g = fs.build_grid(0.5, 4, 8)
    f = fs.build_cov(g, coupling_bdy=False)
    cov = f.covariance()
    nb = g.n_bulk_cells
    assert np.abs(cov[:nb, nb:]).max() <= f.jitter_used + 1e-12
    full = fs.build_cov(g).covariance()
    assert np.abs(full[:nb, nb:]).max() > 0.1  # cross block alive by default


def test_sampling_determinism():
    g = fs.build_grid(0.5, 6, 12)
    f = fs.build_cov(g)
    a = fs.sample_field(f, 42)
    b = fs.sample_field(f, 42)
    assert np.array_equal(a.values, b.values)
    c = fs.sample_field(f, 43)
    assert not np.array_equal(a.values, c.values)
    x1 = fs.sample_field_batch(f, 7, 3000)
    x2 = fs.sample_field_batch(f, 7, 3000)
    assert np.array_equal(x1, x2)


def test_batch_threads_invariance(monkeypatch):
    g = fs.build_grid(0.5, 4, 8)
    f = fs.build_cov(g)
    x1 = fs.sample_field_batch(f, 9, 5000)
    monkeypatch.setenv("GMCLAB_THREADS", "4")
    x2 = fs.sample_field_batch(f, 9, 5000)
    assert np.array_equal(x1, x2)


def test_empirical_covariance_matches_factor():
    g = fs.build_grid(0.5, 6, 12)
    f = fs.build_cov(g)
    cov = f.covariance()
    n = 100_000
    x = fs.sample_field_batch(f, 123, n)
    emp = (x @ x.T) / n
    se = np.sqrt((np.outer(np.diag(cov), np.diag(cov)) + cov ** 2) / n)
    z = np.abs(emp - cov) / se
    assert z.max() <= 5.0  # 48^2 entries, 4 sigma envelope plus slack


def test_girsanov_shift_identities():
    g = fs.build_grid(0.5, 6, 12)
    f = fs.build_cov(g)
    x = fs.sample_field(f, 11)
    same = fs.girsanov_shift(x, f, g, float(g.bdy_centers[3]), 0.0)
    assert np.array_equal(same.values, x.values)
    sh = fs.girsanov_shift(x, f, g, float(g.bdy_centers[3]), 0.6)
    back = fs.girsanov_shift(sh, f, g, float(g.bdy_centers[3]), -0.6)
    assert np.allclose(back.values, x.values, atol=1e-12)
    # midpoint shift equals the factored covariance column
    delta = fs.shift_vector(f, g, float(g.bdy_centers[3]), 0.6)
    assert np.allclose(delta, 0.6 * f.cov_column(g.n_bulk_cells + 3))


def test_girsanov_two_estimator():
    """Reweighting by exp(c X_v - c^2/2 Var) equals shifting by c Cov(., X_v),
    checked for charges gamma/2 at gamma in {1, 1.5} (3 sigma, N = 1e5)."""
    g = fs.build_grid(0.5, 6, 12)
    f = fs.build_cov(g)
    n = 100_000
    node = g.n_bulk_cells + 5
    v = float(g.bdy_centers[5])
    for gamma in (1.0, 1.5):
        charge = gamma / 2.0
        delta = fs.shift_vector(f, g, v, charge)
        xa = fs.sample_field_batch(f, 21, n)
        xb = fs.sample_field_batch(f, 22, n)
        w = np.exp(charge * xa[node] - 0.5 * charge ** 2 * f.diag_var[node])
        fa = np.exp(-np.abs(xa).mean(axis=0)) * w
        fb = np.exp(-np.abs(xb + delta[:, None]).mean(axis=0))
        za = fa.std(ddof=1) / np.sqrt(n)
        zb = fb.std(ddof=1) / np.sqrt(n)
        z = (fa.mean() - fb.mean()) / np.hypot(za, zb)
        assert abs(z) <= 3.0, f"gamma={gamma}: z={z}"


def test_shift_generic_v_and_endpoint():
    g = fs.build_grid(0.5, 6, 12)
    f = fs.build_cov(g)
    v = float(g.bdy_centers[4]) + 0.3 * g.seg_len  # interior, off-center
    delta = fs.shift_vector(f, g, v, 1.0)
    assert np.all(np.isfinite(delta))
    # segment endpoints are ambiguous
    with pytest.raises(SingularShift):
        fs.shift_vector(f, g, -0.5 + g.seg_len, 1.0)


def test_semicircle_average_variance():
    """Averaging nodes near a semicircle reproduces ~2 ln(1/rho_eff)."""
    g = fs.build_grid(0.5, 16, 32)
    f = fs.build_cov(g)
    rho = 0.25
    c = g.bulk_centers
    rad = np.hypot(c[:, 0], c[:, 1])
    sel = np.flatnonzero(np.abs(rad - rho) <= g.dx / 2)
    assert sel.size >= 8
    wts = np.zeros(g.n_nodes)
    wts[sel] = 1.0 / sel.size
    exact = float(wts @ f.covariance() @ wts)
    rho_eff = float(np.exp(np.log(rad[sel]).mean()))
    target = -2.0 * np.log(rho_eff)
    assert abs(exact - target) / target <= 0.10
    # and the sampler reproduces the exact discrete variance
    x = fs.sample_field_batch(f, 5, 50_000)
    emp = (wts @ x).var(ddof=1)
    se = exact * np.sqrt(2.0 / 50_000)
    assert abs(emp - exact) <= 4 * se
