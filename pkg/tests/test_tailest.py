"""Tail fits on known laws, the localization estimator, quotient moments,
feasibility systems, and the perturbed-kernel factor."""

import numpy as np
import pytest

from gmclab import fieldsim as fs
from gmclab import gmc, tailest
from gmclab.errors import (ConfigInvalid, DegenerateWindow, EmptySample,
                           GeometryViolation)
from gmclab.gmc import GmcParams
from gmclab.radial import DriftSpec, RadialConfig, RadialSampler, sample_max
from gmclab.rng import stream_generator


def test_survival_curve_basics():
    rows = tailest.survival_curve([1.0, 2.0, 3.0], [2.5])
    assert rows[0][1] == pytest.approx(1.0 / 3.0)
    rows = tailest.survival_curve([1.0, 2.0, 3.0], [0.5, 10.0])
    assert rows[0][1] == 1.0
    assert rows[1][1] == 0.0 and rows[1][2] == 0.0  # boundary flagged
    with pytest.raises(EmptySample):
        tailest.survival_curve([], [1.0])
    with pytest.raises(ValueError):
        tailest.survival_curve([1.0], [2.0, 1.0])


def test_fit_tail_pareto_oracle():
    """X = U^{-1/2} has survival t^{-2} exactly above 1 (inverse CDF)."""
    rng = stream_generator(99, 0)
    x = rng.random(100_000) ** -0.5
    ts = np.geomspace(1.2, 30.0, 40)
    fit = tailest.fit_tail(tailest.survival_curve(x, ts), (1.5, 20.0))
    assert fit.exponent == pytest.approx(2.0, abs=0.05)
    assert fit.constant == pytest.approx(1.0, rel=0.05)
    hill = tailest.fit_tail(x, (2.0, 50.0), method=tailest.HILL)
    assert hill.exponent == pytest.approx(2.0, abs=0.05)
    assert hill.constant == pytest.approx(1.0, rel=0.05)


def test_fit_tail_exp_max_oracle():
    """e^{gamma M} with M ~ Exp(2/g - g/2) has index 2/g^2 - 1/2 = 1.5."""
    m = sample_max(DriftSpec(1.0), 7, n=100_000)
    y = np.exp(m)
    fit = tailest.fit_tail(y, (float(np.quantile(y, 0.95)),
                               float(np.quantile(y, 0.99995))),
                           method=tailest.HILL)
    assert fit.exponent == pytest.approx(1.5, abs=0.05)


def test_fit_tail_errors():
    with pytest.raises(DegenerateWindow):
        tailest.fit_tail([(1.0, 0.5, 0.01)] * 3, (0.5, 2.0))
    with pytest.raises(ConfigInvalid):
        tailest.fit_tail([(1.0, 0.5, 0.01)] * 10, (0.5, 2.0), method="nope")
    with pytest.raises(DegenerateWindow):
        tailest.fit_tail(np.ones(10), (1.0, 2.0), method=tailest.HILL)


@pytest.fixture(scope="module")
def grid_setup():
    grid = fs.build_grid(0.5, 6, 12)
    factor = fs.build_cov(grid)
    params = GmcParams(1.0, 0.5)
    return grid, factor, params


def test_localized_estimator_consistency(grid_setup):
    """IS and plain MC agree wherever plain MC has >= 100 exceedances."""
    grid, factor, params = grid_setup
    _, mb = tailest.plain_survival(params, grid, factor, [1.0], 100_000, 3)
    t = float(np.quantile(mb, 0.90))
    p_pl = float(np.mean(mb > t))
    se_pl = np.sqrt(p_pl * (1 - p_pl) / mb.size)
    p_is, se_is = tailest.localized_tail_estimator(params, grid, factor, t,
                                                   20_000, 5)
    assert abs(p_pl - p_is) <= 3 * np.hypot(se_pl, se_is)


def test_localized_estimator_t_zero(grid_setup):
    """At t = 0 the indicator is always one and the identity integrates to 1."""
    grid, factor, params = grid_setup
    p, se = tailest.localized_tail_estimator(params, grid, factor, 0.0,
                                             20_000, 7)
    assert abs(p - 1.0) <= 4 * se


def test_localized_estimator_variance_win(grid_setup):
    """At deep t the IS relative error beats plain MC at equal field draws."""
    grid, factor, params = grid_setup
    n = 50_000
    _, mb = tailest.plain_survival(params, grid, factor, [1.0], n, 11)
    t = float(np.quantile(mb, 0.999))
    p_pl = float(np.mean(mb > t))
    se_pl = np.sqrt(p_pl * (1 - p_pl) / n)
    p_is, se_is = tailest.localized_tail_estimator(params, grid, factor, t,
                                                   n // grid.n_bdy, 13)
    assert se_is / p_is < se_pl / p_pl


def test_loglogwls_recovers_is_curve(grid_setup):
    grid, factor, params = grid_setup
    ts = np.geomspace(2.0, 2000.0, 50)
    curve = tailest.localized_survival_curve(params, grid, factor, ts,
                                             10_000, 17)
    assert curve.phat[0] > curve.phat[-1] > 0
    assert np.all(np.diff(curve.phat) <= 1e-15)  # survival is nonincreasing


def test_constant_prefactor():
    assert tailest.tail_constant_prefactor(np.sqrt(2.0), 1.0) == \
        pytest.approx(1.0)  # 2 * 1 * (1 - 1/2), unit-integrand hook
    assert tailest.tail_constant_prefactor(1.0, 0.5) == pytest.approx(0.75)


def test_estimate_constant_radial_stability():
    params = GmcParams(1.0, 0.5)
    cfg = RadialConfig(T=10.0, ds=0.1, n_theta=16)
    sampler = RadialSampler(1.0, cfg)
    est = tailest.estimate_constant_radial(params, 4000, 3, sampler=sampler)
    assert est.ci_low < est.estimate < est.ci_high
    assert 0 < est.trimmed_estimate <= est.estimate * 1.2
    assert est.mean_trunc_rel < 1e-3
    # determinism
    again = tailest.estimate_constant_radial(params, 4000, 3, sampler=sampler)
    assert again.estimate == est.estimate


def test_zeta_tilde_identities():
    rng = np.random.default_rng(0)
    for _ in range(200):
        q = rng.uniform(0, 3)
        u = rng.uniform(0, 2)
        g = rng.uniform(0.2, 1.9)
        # vanishes on the axis p = q/2 and satisfies the reflection identity
        assert tailest.zeta_tilde(q / 2.0, q, g) == pytest.approx(0.0)
        lhs = tailest.zeta_tilde(q / 2 + u, q, g) \
            - tailest.zeta_tilde(q / 2 - u, q, g)
        assert lhs == pytest.approx(2.0 * (2.0 - g * g / 2.0) * u, rel=1e-12)
    assert tailest.zeta_tilde(1.0, 1.0, 1.0) == pytest.approx(0.5)
    # Remark-A corner: p = 2/g^2, q = 2 stays above -1
    assert tailest.zeta_tilde(2.0, 2.0, 1.0) == pytest.approx(0.5)
    assert tailest.zeta_tilde(2.0, 2.0, 1.0) > -1.0


def test_quotient_window_predictions():
    assert tailest.quotient_finite_predicted(2.0, 1.0, 1.0)
    assert not tailest.quotient_finite_predicted(2.6, 1.0, 1.0)
    assert not tailest.quotient_finite_predicted(4.1, 10.0, 1.0)  # 4/g^2 cap


def test_quotient_moment_radial_modes():
    sampler = RadialSampler(1.0, RadialConfig(T=8.0, ds=0.1, n_theta=8))
    est = tailest.estimate_quotient_moment(1.0, 1.0, 1.0, "radial", 2000, 5,
                                           sampler=sampler, keep_running=True)
    assert est.finite_predicted and est.estimate > 0
    assert est.running_mean.size == 2000
    est_x = tailest.estimate_quotient_moment(1.0, 1.0, 1.0, "radial", 1000, 5,
                                             sampler=sampler, x=2.0)
    assert est_x.estimate > 0
    rows = tailest.quotient_x_sweep(sampler, [0.5, 1.0, 2.0], 1.0, 1.0,
                                    1000, 7)
    assert all(v > 0 for _, v, _ in rows)


def test_quotient_moment_grid_mode(grid_setup):
    grid, factor, params = grid_setup
    est = tailest.estimate_quotient_moment(
        1.0, 1.0, 1.0, "grid", 2000, 9, grid=grid, factor=factor,
        params=params, rho=0.2, region="ball")
    assert est.estimate > 0
    comp = tailest.estimate_quotient_moment(
        1.0, 1.0, 1.0, "grid", 2000, 9, grid=grid, factor=factor,
        params=params, rho=0.2, region="complement")
    assert comp.estimate > 0
    with pytest.raises(ConfigInvalid):
        tailest.estimate_quotient_moment(1.0, 1.0, 1.0, "grid", 100, 1,
                                         grid=grid, factor=factor,
                                         params=params, rho=0.001)


def test_locality_gap_contract(grid_setup):
    grid, factor, params = grid_setup
    v = float(grid.bdy_centers[grid.n_bdy // 2])
    with pytest.raises(GeometryViolation):
        tailest.locality_gap(params, grid, factor, v, 0.3, 1.0, 100, 1)
    # t = 0: both indicators are one, so the gap is the reciprocal-mass
    # difference, nonpositive by region monotonicity
    gap, se, local = tailest.locality_gap(params, grid, factor, v,
                                          grid.r / 4, 0.0, 20_000, 3)
    assert gap <= 0
    # t beyond every sample: both terms vanish
    gap_hi, _, local_hi = tailest.locality_gap(params, grid, factor, v,
                                               grid.r / 4, 1e12, 5000, 5)
    assert gap_hi == 0.0 and local_hi == 0.0


def test_feasible_params_systems():
    for g in (0.5, 1.0, np.sqrt(2.0), 1.8):
        for system in (tailest.EQ16, tailest.EQ20):
            fp = tailest.feasible_params(g, system)
            assert tailest.verify_feasible(g, fp)
            assert fp.slack >= 1e-9
    with pytest.raises(ConfigInvalid):
        tailest.feasible_params(1.0, "eq99")


def test_perturbed_constant_factor():
    assert tailest.perturbed_constant_factor(lambda v: 0.0, 0.5, 1.0) == \
        pytest.approx(1.0)
    assert tailest.perturbed_constant_factor(lambda v: 0.5, 0.5, 1.0) == \
        pytest.approx(np.exp(0.5))
    # exponent 2/gamma^2 - 1 vanishes at gamma = sqrt(2)
    assert tailest.perturbed_constant_factor(lambda v: v * v, 0.5,
                                             np.sqrt(2.0)) == pytest.approx(1.0)


def test_rho_scan_slope():
    slope, se, rows = tailest.quotient_rho_scan(1.0, 1.0, 1.0,
                                                [0.1, 0.2, 0.4], 4000, 3,
                                                n_bulk=16, n_bdy=16)
    assert slope == pytest.approx(tailest.zeta_tilde(1.0, 1.0, 1.0), abs=0.1)
    assert len(rows) == 3
