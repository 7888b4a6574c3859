"""Radial decomposition samplers: maximum law, conditioned paths, lateral
densities, and the integrals behind the second route to the tail constant.

Around a boundary point the log-correlated field splits into an independent
Brownian motion in log-radius s plus a stationary lateral noise Y on the
semicircle cylinder.  The drifted motion sqrt(2) B_s - (2/gamma - gamma/2) s
has maximum M ~ Exponential(2/gamma - gamma/2), and conditionally on M the
path decomposes at its argmax into two independent halves conditioned to stay
negative (Williams).  The radial route assembles

    I_H(x)   = int_{-L_{-x}}^{inf} e^{gamma B_s} Z_H(s) ds,
    I_bdy(x) = int_{-L_{-x}}^{inf} e^{gamma/2 B_s} Z_bdy(s) ds,

with L_{-x} the last time the left half hits -x, Z_H the (sin theta)^{-gamma^2/2}
weighted lateral GMC density and Z_bdy the two boundary-ray densities.

Samplers:

- M by exact inverse-CDF (so the maximum law is machine-exact);
- conditioned-negative paths by an epsilon-start h-transform whose ds-steps
  are drawn by exact rejection against the killed Gaussian kernel (accept
  probability (1 - e^{-2 x y / sigma^2 ds})(1 - e^{lambda y})), giving
  independent, unweighted paths;
- the lateral field by block-circulant embedding over the s-axis (the
  covariance is stationary in s and decays exponentially), exact when the
  embedding spectrum is nonnegative, which is checked;
- cell-averaged diagonal variances so every renormalized exponential has
  mean one by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .cellavg import _gauss_nodes, neg_log_avg_segment
from .errors import (DegenerateStart, IndexMismatch, InvalidRho,
                     NotPositiveDefinite, TruncationTooShort)
from .gmc import sin_power_integral
from .kernels import lateral_cov
from .rng import chunk_sizes, stream_generator

LATERAL_CHUNK = 128  # samples per circulant-embedding FFT block


@dataclass(frozen=True)
class DriftSpec:
    """Coupling gamma and the drift rate of the comparison process.

    The radial process is sqrt(2) B_s - alpha s with alpha = 2/gamma - gamma/2
    (positive throughout gamma in (0, 2)); its maximum is Exponential(alpha).
    """

    gamma: float

    def __post_init__(self):
        if not (0.0 < self.gamma < 2.0):
            raise ValueError(f"gamma must lie in (0, 2), got {self.gamma}")

    @property
    def alpha(self) -> float:
        return 2.0 / self.gamma - self.gamma / 2.0


# --- maximum law -------------------------------------------------------------

def sample_max(spec: DriftSpec, seed: int, n: Optional[int] = None):
    """Maximum of the radial drifted motion: Exponential(2/gamma - gamma/2).

    Inverse-CDF on Philox uniforms, so the law is exact and the draw is a pure
    function of the seed.  P[e^{gamma M} > t] = t^{-(2/gamma^2 - 1/2)}.
    """
    rng = stream_generator(seed, 0)
    u = rng.random(n if n is not None else 1)
    m = -np.log1p(-u) / spec.alpha
    return m if n is not None else float(m[0])


def sample_max_standard(alpha: float, seed: int, n: Optional[int] = None):
    """Maximum of the unit-variance drifted motion B_s - alpha s: Exp(2 alpha).

    The helper for the textbook identity P[e^M > t] = t^{-2 alpha}.
    """
    if alpha <= 0:
        raise ValueError("drift alpha must be positive")
    rng = stream_generator(seed, 0)
    u = rng.random(n if n is not None else 1)
    m = -np.log1p(-u) / (2.0 * alpha)
    return m if n is not None else float(m[0])


# --- conditioned-negative paths ----------------------------------------------

def _conditioned_steps(x: np.ndarray, lam: float, ds: float,
                       rng: np.random.Generator) -> np.ndarray:
    """One exact h-transform step from states x < 0 (vectorized rejection).

    Proposal: free Gaussian step with drift -lam and variance 2 ds.  Accept
    with probability (1 - exp(-2 x y / (2 ds))) * (1 - exp(lam y)) for y < 0:
    the first factor is the killed-kernel ratio, the second the h-function.
    """
    var = 2.0 * ds
    out = np.empty_like(x)
    todo = np.arange(x.size)
    while todo.size:
        xa = x[todo]
        y = xa - lam * ds + np.sqrt(var) * rng.standard_normal(todo.size)
        ok = y < 0.0
        acc = np.zeros(todo.size)
        yn = y[ok]
        acc[ok] = -np.expm1(-2.0 * xa[ok] * yn / var) * (-np.expm1(lam * yn))
        hit = rng.random(todo.size) < acc
        out[todo[hit]] = y[hit]
        todo = todo[~hit]
    return out


def sample_conditioned_path(spec: DriftSpec, T: float, ds: float, eps: float,
                            seed: int, n_paths: int = 1, stream: int = 0):
    """Paths of the drifted motion conditioned to stay below zero.

    Returns ``(times, paths)`` with times k*ds for k = 0..T/ds and paths of
    shape (n_paths, len(times)); every path starts at -eps and stays <= 0.
    The entrance at zero is degenerate (h(0) = 0), hence the epsilon start;
    eps-halving insensitivity is the contract check.
    """
    if eps <= 0.0:
        raise DegenerateStart("conditioned path needs eps > 0 (h(0) = 0)")
    if T <= 0 or ds <= 0 or ds > T:
        raise ValueError("need 0 < ds <= T")
    lam = spec.alpha
    n_steps = int(round(T / ds))
    rng = stream_generator(seed, stream)
    paths = np.empty((n_paths, n_steps + 1))
    paths[:, 0] = -eps
    x = np.full(n_paths, -eps)
    for k in range(1, n_steps + 1):
        x = _conditioned_steps(x, lam, ds, rng)
        paths[:, k] = x
    times = ds * np.arange(n_steps + 1)
    return times, paths


# --- two-sided path ----------------------------------------------------------

@dataclass(frozen=True)
class TwoSidedPath:
    """Conditioned-negative profile around the maximum.

    ``b`` holds B_s <= 0 on the symmetric grid ``s`` (descent for s >= 0,
    time-reversed ascent for s < 0); ``values`` adds the maximum M back, so it
    is the drifted-motion picture attaining max M at s = 0.  ``b`` may be a
    matrix (grid length, batch).
    """

    s: np.ndarray
    b: np.ndarray
    M: Union[float, np.ndarray]

    @property
    def values(self):
        if np.ndim(self.b) == 1:
            return self.M + self.b
        return np.asarray(self.M) + self.b

    @property
    def ds(self) -> float:
        return float(self.s[1] - self.s[0])


def williams_concatenate(M, descent, reversed_ascent) -> TwoSidedPath:
    """Glue a descent path (s >= 0) and a reversed ascent (s < 0).

    Both inputs are ``(times, path)`` pairs from ``sample_conditioned_path``
    (single path or matching batches); the concatenation attains its maximum
    M exactly at s = 0.  The integration cutoff -L_{-M} is recovered later
    from the left half as its last visit above -M.
    """
    t_d, p_d = descent
    t_a, p_a = reversed_ascent
    ds_d = float(t_d[1] - t_d[0])
    ds_a = float(t_a[1] - t_a[0])
    if not np.isclose(ds_d, ds_a, rtol=1e-12, atol=0.0):
        raise IndexMismatch(f"descent ds={ds_d} vs ascent ds={ds_a}")
    p_d = np.atleast_2d(p_d)
    p_a = np.atleast_2d(p_a)
    if p_d.shape != p_a.shape:
        raise IndexMismatch("descent and ascent batches differ in shape")
    s = np.concatenate([-t_a[::-1], t_d[1:]])
    b = np.concatenate([p_a[:, ::-1], p_d[:, 1:]], axis=1).T
    if b.shape[1] == 1:
        b = b[:, 0]
    return TwoSidedPath(s=s, b=b, M=M)


# --- lateral field -----------------------------------------------------------

class LateralModel:
    """Circulant-embedded sampler of the lateral noise on the cylinder.

    The grid covers s in [-T, T] with step ds (slices at -T + j ds) and theta
    in [0, pi] with two boundary rays plus ``n_theta`` interior cell midpoints.
    Each node carries the s-cell average of the field at its theta point: the
    s-averaging alone regularizes the log singularity (in Fourier modes the
    covariance is sum_k (2/k) e^{-k|tau|} cos k theta cos k theta', and
    averaging e^{-k|tau|} over a cell decays like 1/(k ds)), so every matrix
    entry is the covariance of genuine cell-average variables and the block
    Toeplitz matrix is positive semidefinite up to quadrature error.

    The field is stationary in s; embedding the Toeplitz blocks in a block
    circulant of period 2 n_s and taking an FFT gives one small spectral
    matrix per Fourier mode, sampled exactly when all modes are PSD (tiny
    negative eigenvalues are clipped within a relative budget).
    """

    def __init__(self, gamma: float, T: float, ds: float, n_theta: int = 64):
        if not (0.0 < gamma < 2.0):
            raise ValueError("gamma must lie in (0, 2)")
        # E[Z_H] = int (sin theta)^{-gamma^2/2} diverges from sqrt(2) on; this
        # raises SupercriticalWeight there
        sin_power_integral(gamma ** 2 / 2.0)
        if T <= 0 or ds <= 0 or n_theta < 2:
            raise ValueError("need T > 0, ds > 0, n_theta >= 2")
        self.gamma = float(gamma)
        self.T = float(T)
        self.ds = float(ds)
        self.n_theta = int(n_theta)
        self.n_s = 2 * int(round(T / ds)) + 1
        self.s_grid = -self.T + self.ds * np.arange(self.n_s)
        h = np.pi / n_theta
        self.theta = np.concatenate([[0.0], h * (np.arange(n_theta) + 0.5),
                                     [np.pi]])
        self.m = n_theta + 2

        p = gamma ** 2 / 2.0
        self.zh_weights = self._theta_cell_weights(p)  # interior cells only
        self._build_spectrum()
        self.diag_var = np.diag(self._lag_block(0.0)).copy()
        self.ez_h = float(self.zh_weights.sum())      # exact E[Z_H(s)]
        self.ez_bdy = 2.0                             # two unit-mean rays

    # -- construction helpers

    def _theta_cell_weights(self, p: float) -> np.ndarray:
        """Integrals of (sin theta)^{-p} over each interior theta cell.

        End cells absorb the theta^{-p} singularity with the substitution
        eta = theta^{1-p}; interior cells use a plain Gauss rule.
        """
        h = np.pi / self.n_theta
        gx, gw = _gauss_nodes(16)
        w = np.empty(self.n_theta)
        for i in range(self.n_theta):
            a, b = i * h, (i + 1) * h
            near_zero = i == 0
            near_pi = i == self.n_theta - 1
            if near_zero or near_pi:
                # map to distance from the nearest ray
                lo, hi = (a, b) if near_zero else (np.pi - b, np.pi - a)
                e0, e1 = lo ** (1.0 - p), hi ** (1.0 - p)
                es = 0.5 * (e0 + e1) + 0.5 * (e1 - e0) * gx
                th = es ** (1.0 / (1.0 - p))
                vals = (np.sin(th) / th) ** (-p)
                w[i] = 0.5 * (e1 - e0) / (1.0 - p) * (gw @ vals)
            else:
                th = 0.5 * (a + b) + 0.5 * (b - a) * gx
                w[i] = 0.5 * (b - a) * (gw @ np.sin(th) ** (-p))
        return w

    def _lag_nodes(self, d: int, n: int = 24):
        """Gauss nodes/weights for E_delta[f(|d ds + delta|)], delta triangular
        on [-ds, ds] (the covariance of two s-cell averages at lag d)."""
        ds = self.ds
        gx, gw = _gauss_nodes(n)
        if d == 0:
            u = 0.5 * ds * (gx + 1.0)  # |delta| on [0, ds], folded density
            wts = 0.5 * ds * gw * 2.0 * (ds - u) / ds ** 2
            return u, wts
        lo = (d - 1) * ds
        mid = d * ds
        taus, wts = [], []
        for a, b in ((lo, mid), (mid, mid + ds)):
            t = 0.5 * (a + b) + 0.5 * (b - a) * gx
            dens = (ds - np.abs(t - mid)) / ds ** 2
            taus.append(t)
            wts.append(0.5 * (b - a) * gw * dens)
        return np.concatenate(taus), np.concatenate(wts)

    # adjacent s-cells: E[-ln d] for d triangular on [0, 2 ds] peaked at ds
    _ADJ_LOG_CONST = 1.5 - 2.0 * np.log(2.0)

    def _lag_block(self, tau_or_d: float) -> np.ndarray:
        """Covariance block of s-cell-averaged nodes at lag d = tau/ds.

        Off-diagonal entries average the kernel over the triangular lag
        density directly; same-theta entries at lags 0 and 1 subtract the
        -w ln|tau| model (w = 1 interior, 2 on the rays) and restore its
        closed-form triangular average.
        """
        d = int(round(tau_or_d / self.ds))
        u, wts = self._lag_nodes(d)
        th_i = self.theta[:, None, None]
        th_j = self.theta[None, :, None]
        vals = lateral_cov(0.0, th_i, u[None, None, :], th_j)
        block = vals @ wts

        if d <= 1:
            # same-theta entries: kernel ~ -w ln tau near tau = 0
            w_sing = np.ones(self.m)
            w_sing[0] = w_sing[-1] = 2.0
            const = (neg_log_avg_segment(self.ds) if d == 0
                     else -np.log(self.ds) + self._ADJ_LOG_CONST)
            # Gauss nodes are interior, so u > 0 and both terms stay finite
            diag_vals = lateral_cov(0.0, self.theta[:, None], u[None, :],
                                    self.theta[:, None]) \
                + w_sing[:, None] * np.log(u[None, :])
            block[np.diag_indices(self.m)] = diag_vals @ wts + w_sing * const
        return block

    def _build_spectrum(self):
        from scipy.fft import next_fast_len
        n_p = next_fast_len(2 * self.n_s, real=True)
        lags = np.minimum(np.arange(n_p), n_p - np.arange(n_p)) * self.ds
        blocks = np.empty((n_p, self.m, self.m))
        for d, tau in enumerate(lags):
            blocks[d] = self._lag_block(float(tau))
        spec = np.fft.fft(blocks, axis=0)
        max_imag = np.abs(spec.imag).max()
        scale = np.abs(spec.real).max()
        if max_imag > 1e-8 * scale:
            raise NotPositiveDefinite(
                f"embedding spectrum not real (imag {max_imag:.2e})")
        spec = spec.real
        lam, vec = np.linalg.eigh(spec)
        neg = lam.min()
        if neg < -1e-8 * lam.max():
            raise NotPositiveDefinite(
                f"circulant embedding has negative modes ({neg:.3e}); "
                "increase T or lower ds")
        self.clip_report = {"min_eigenvalue": float(neg),
                            "max_eigenvalue": float(lam.max())}
        lam = np.clip(lam, 0.0, None)
        # sampling runs in float32: per-entry rounding is ~1e-7 of the
        # covariance scale, far below Monte Carlo resolution
        self._factor = (vec * np.sqrt(lam)[:, None, :]).astype(np.float32)
        self.n_p = n_p

    # -- sampling

    def sample(self, seed: int, n: int, stream_offset: int = 0,
               return_field: bool = False):
        """Draw n lateral fields; returns (Z_H, Z_bdy) of shape (n_s, n).

        With ``return_field`` also returns Y of shape (n_s, m, n).  Chunked
        over fixed-size blocks with one Philox stream per block.
        """
        g = self.gamma
        n_half = self.n_p // 2
        zh = np.empty((self.n_s, n))
        zbdy = np.empty((self.n_s, n))
        field = np.empty((self.n_s, self.m, n)) if return_field else None
        w32 = self.zh_weights.astype(np.float32)
        dv32 = self.diag_var.astype(np.float32)
        pos = 0
        for c, size in enumerate(chunk_sizes(n, LATERAL_CHUNK)):
            rng = stream_generator(seed, stream_offset + c)
            re = rng.standard_normal((n_half + 1, self.m, size),
                                     dtype=np.float32)
            im = rng.standard_normal((n_half + 1, self.m, size),
                                     dtype=np.float32)
            scale = np.float32(1.0 / np.sqrt(2.0))
            re[0] /= scale  # k = 0 and k = n/2 carry real full-variance draws
            im[0] = 0.0
            re[n_half] /= scale
            im[n_half] = 0.0
            # the spectral factor is real: two real matmuls beat one complex
            fac = self._factor[:n_half + 1]
            f_half = (scale * np.matmul(fac, re)).astype(np.complex64)
            f_half += 1j * (scale * np.matmul(fac, im))
            y = np.fft.irfft(f_half, n=self.n_p, axis=0) * np.sqrt(self.n_p)
            y = y[:self.n_s]
            zh[:, pos:pos + size] = np.exp(
                g * y[:, 1:-1] - 0.5 * g * g * dv32[None, 1:-1, None]) \
                .transpose(0, 2, 1) @ w32
            zbdy[:, pos:pos + size] = (
                np.exp(0.5 * g * y[:, 0] - 0.125 * g * g * dv32[0])
                + np.exp(0.5 * g * y[:, -1] - 0.125 * g * g * dv32[-1]))
            if return_field:
                field[:, :, pos:pos + size] = y
            pos += size
        if return_field:
            return zh, zbdy, field
        return zh, zbdy

    def covariance_check(self) -> float:
        """Max abs error of the embedded covariance against the target blocks
        at all kept lags (zero when no clipping occurred)."""
        n_p = self.n_p
        spec = np.matmul(self._factor, np.swapaxes(self._factor, 1, 2))
        rec = np.fft.ifft(spec, axis=0).real
        err = 0.0
        for d in range(self.n_s):
            err = max(err, float(np.abs(rec[d] - self._lag_block(d * self.ds)).max()))
        return err


def sample_lateral(T: float, ds: float, n_theta: int, gamma: float, seed: int,
                   n: int = 1, return_field: bool = False):
    """One-shot lateral sampler (builds a throwaway LateralModel)."""
    model = LateralModel(gamma=gamma, T=T, ds=ds, n_theta=n_theta)
    return model.sample(seed, n, return_field=return_field)


# --- integrals ---------------------------------------------------------------

@dataclass(frozen=True)
class IntegralPair:
    """I_H(x), I_bdy(x) plus truncation-tail bounds for the neglected ranges."""

    IH: Union[float, np.ndarray]
    Ibdy: Union[float, np.ndarray]
    bound_H: Union[float, np.ndarray]
    bound_bdy: Union[float, np.ndarray]


def compute_I(path: TwoSidedPath, ZH, Zbdy, x, gamma: float,
              ez_h: Optional[float] = None, ez_bdy: float = 2.0,
              tol: Optional[float] = None) -> IntegralPair:
    """Riemann sums of e^{gamma B} Z_H and e^{gamma/2 B} Z_bdy over s >= -L_{-x}.

    ``x`` may be finite (cutoff at the left half's last visit above -x), or
    infinite (full truncated range).  The neglected-tail bound uses B <= 0 and
    the conservative drift estimate lambda/2:

        bound = E[Z] * e^{coupling * B(edge)} / (coupling * lambda/2).

    Raises ``TruncationTooShort`` when ``tol`` is given and a bound exceeds
    tol * integral (also when a finite x is never reached on the grid).
    """
    b = path.b if np.ndim(path.b) == 2 else path.b[:, None]
    zh = ZH if np.ndim(ZH) == 2 else np.asarray(ZH)[:, None]
    zb = Zbdy if np.ndim(Zbdy) == 2 else np.asarray(Zbdy)[:, None]
    if b.shape[0] != zh.shape[0] or b.shape[0] != zb.shape[0]:
        raise IndexMismatch("path and lateral slices use different s-grids")
    n_s, n = b.shape
    ds = path.ds
    jc = int(np.argmin(np.abs(path.s)))  # index of s = 0
    lam_low = 0.5 * (2.0 / gamma - gamma / 2.0)

    x_arr = np.broadcast_to(np.asarray(x, dtype=float), (n,))
    fh = ds * np.exp(gamma * b) * zh
    fb = ds * np.exp(0.5 * gamma * b) * zb
    # suffix sums: integral over s >= s_j
    ch = np.cumsum(fh[::-1], axis=0)[::-1]
    cb = np.cumsum(fb[::-1], axis=0)[::-1]

    lower = np.zeros(n, dtype=int)
    unreached = np.zeros(n, dtype=bool)
    finite = np.isfinite(x_arr)
    if np.any(finite):
        left = b[:jc]  # s < 0
        above = left >= -x_arr[None, :]
        has = above.any(axis=0)
        # last visit above -x = first grid index (s ascending) still above -x;
        # if the path never rose above -x the cutoff collapses to s = 0
        first = np.where(has, above.argmax(axis=0), jc)
        lower[finite] = first[finite]
        # still above -x at s = -T: the true L_{-x} lies beyond the horizon
        unreached[finite & above[0]] = True

    ih = ch[lower, np.arange(n)]
    ib = cb[lower, np.arange(n)]

    ez_h_val = float(ez_h) if ez_h is not None else float(np.mean(zh))
    right_h = ez_h_val * np.exp(gamma * b[-1]) / (gamma * lam_low)
    right_b = ez_bdy * np.exp(0.5 * gamma * b[-1]) / (0.5 * gamma * lam_low)
    left_h = np.where(np.isfinite(x_arr), 0.0,
                      ez_h_val * np.exp(gamma * b[0]) / (gamma * lam_low))
    left_b = np.where(np.isfinite(x_arr), 0.0,
                      ez_bdy * np.exp(0.5 * gamma * b[0]) / (0.5 * gamma * lam_low))
    bound_h = right_h + left_h
    bound_b = right_b + left_b
    if np.any(unreached):
        bound_h = np.where(unreached, np.inf, bound_h)
        bound_b = np.where(unreached, np.inf, bound_b)

    if tol is not None:
        bad = np.any(bound_h > tol * ih) or np.any(bound_b > tol * ib) \
            or np.any(unreached)
        if bad:
            raise TruncationTooShort(
                f"truncation bound exceeds tol={tol:g}; increase T")

    if np.ndim(path.b) == 1 and np.ndim(ZH) == 1:
        return IntegralPair(float(ih[0]), float(ib[0]),
                            float(bound_h[0]), float(bound_b[0]))
    return IntegralPair(ih, ib, bound_h, bound_b)


# --- joint sampler -----------------------------------------------------------

def default_horizon(gamma: float) -> float:
    """Truncation horizon: generous multiple of the relaxation time 1/lambda.

    The integrands decay like e^{-gamma lambda s}, so T = 24/lambda keeps the
    neglected tail around e^{-24 gamma} relative, far below Monte Carlo error.
    """
    lam = 2.0 / gamma - gamma / 2.0
    return max(16.0, 24.0 / lam)


@dataclass(frozen=True)
class RadialConfig:
    """Discretization of the radial sampler."""

    T: Optional[float] = None
    ds: float = 0.05
    n_theta: int = 64
    eps: float = 1e-3

    def horizon(self, gamma: float) -> float:
        return self.T if self.T is not None else default_horizon(gamma)


class RadialSampler:
    """Joint draws of (M, two-sided conditioned path, lateral densities).

    One instance owns an immutable LateralModel (shareable across threads) and
    produces independent samples of the integral pairs I(M) and I(infinity).
    Streams: chunk c of a draw uses Philox streams (4c..4c+3) for lateral,
    descent, ascent, and (M, N_rho) respectively.
    """

    PATH_CHUNK = 4096
    # disjoint Philox streams per chunk: the lateral sampler consumes one
    # stream per LATERAL_CHUNK block, then descent, ascent, and (M,) draws
    LATERAL_STREAMS = -(-PATH_CHUNK // LATERAL_CHUNK)
    STREAMS_PER_CHUNK = LATERAL_STREAMS + 3

    def __init__(self, gamma: float, config: RadialConfig = RadialConfig()):
        self.gamma = float(gamma)
        self.spec = DriftSpec(gamma)
        self.config = config
        T = config.horizon(gamma)
        self.T = float(int(round(T / config.ds)) * config.ds)
        self.lateral = LateralModel(gamma=gamma, T=self.T, ds=config.ds,
                                    n_theta=config.n_theta)

    def sample_joint(self, seed: int, n: int, want_truncated: bool = True,
                     keep_paths: bool = False):
        """Dict of arrays: M, IH_inf, Ibdy_inf (+ IH_M, Ibdy_M), bounds.

        With ``keep_paths`` the dict also carries the TwoSidedPath over all
        draws plus the Z_H / Z_bdy matrices (memory scales with n * n_s).
        """
        cfg = self.config
        out = {k: [] for k in ("M", "IH_inf", "Ibdy_inf", "IH_M", "Ibdy_M",
                               "bound_H", "bound_bdy")}
        kept_b, kept_zh, kept_zbdy = [], [], []
        s_grid = None
        for c, size in enumerate(chunk_sizes(n, self.PATH_CHUNK)):
            base = c * self.STREAMS_PER_CHUNK
            zh, zbdy = self.lateral.sample(seed, size, stream_offset=base)
            _, desc = sample_conditioned_path(self.spec, self.T, cfg.ds,
                                              cfg.eps, seed, size,
                                              stream=base + self.LATERAL_STREAMS)
            t_a, asc = sample_conditioned_path(self.spec, self.T, cfg.ds,
                                               cfg.eps, seed, size,
                                               stream=base + self.LATERAL_STREAMS + 1)
            rng = stream_generator(seed, base + self.LATERAL_STREAMS + 2)
            m = -np.log1p(-rng.random(size)) / self.spec.alpha
            path = williams_concatenate(m, (t_a, desc), (t_a, asc))
            pair_inf = compute_I(path, zh, zbdy, np.inf, self.gamma,
                                 ez_h=self.lateral.ez_h)
            out["M"].append(m)
            out["IH_inf"].append(pair_inf.IH)
            out["Ibdy_inf"].append(pair_inf.Ibdy)
            out["bound_H"].append(pair_inf.bound_H)
            out["bound_bdy"].append(pair_inf.bound_bdy)
            if want_truncated:
                pair_m = compute_I(path, zh, zbdy, m, self.gamma,
                                   ez_h=self.lateral.ez_h)
                out["IH_M"].append(pair_m.IH)
                out["Ibdy_M"].append(pair_m.Ibdy)
            if keep_paths:
                s_grid = path.s
                kept_b.append(path.b if np.ndim(path.b) == 2
                              else np.asarray(path.b)[:, None])
                kept_zh.append(zh)
                kept_zbdy.append(zbdy)
        result = {k: np.concatenate(v) if v else np.empty(0)
                  for k, v in out.items() if v}
        if keep_paths:
            result["path"] = TwoSidedPath(s=s_grid,
                                          b=np.concatenate(kept_b, axis=1),
                                          M=result["M"])
            result["ZH"] = np.concatenate(kept_zh, axis=1)
            result["Zbdy"] = np.concatenate(kept_zbdy, axis=1)
        return result


@dataclass(frozen=True)
class RadialSample:
    """One joint draw of every radial-route object.

    ``IH_of_x`` / ``Ibdy_of_x`` tabulate the cutoff integrals on ``x_grid``
    (nondecreasing in x by construction); the last row uses x = inf.
    """

    M: float
    path: TwoSidedPath
    ZH: np.ndarray
    Zbdy: np.ndarray
    IH_of_x: np.ndarray    # (len(x_grid) + 1,)
    Ibdy_of_x: np.ndarray
    x_grid: np.ndarray
    seed: int


def draw_radial_sample(gamma: float, seed: int,
                       config: RadialConfig = RadialConfig(),
                       x_grid=(0.5, 1.0, 2.0, 4.0),
                       sampler: Optional[RadialSampler] = None) -> RadialSample:
    """Single fully-materialized radial sample (diagnostics, demos, tests)."""
    if sampler is None:
        sampler = RadialSampler(gamma, config)
    d = sampler.sample_joint(seed, 1, want_truncated=False, keep_paths=True)
    xs = np.asarray(x_grid, dtype=float)
    ih = np.empty(xs.size + 1)
    ib = np.empty(xs.size + 1)
    for k, x in enumerate([*xs, np.inf]):
        pair = compute_I(d["path"], d["ZH"], d["Zbdy"], float(x), gamma,
                         ez_h=sampler.lateral.ez_h)
        ih[k] = pair.IH[0]
        ib[k] = pair.Ibdy[0]
    return RadialSample(M=float(d["M"][0]), path=d["path"], ZH=d["ZH"],
                        Zbdy=d["Zbdy"], IH_of_x=ih, Ibdy_of_x=ib,
                        x_grid=xs, seed=seed)


def radial_bulk_mass(params, rho: float, seed: int,
                     config: RadialConfig = RadialConfig(),
                     n: Optional[int] = None,
                     sampler: Optional[RadialSampler] = None):
    """Localized bulk mass at the origin by the radial representation:

        mu_H(Q(0, rho)) = rho^{2 - gamma^2/2} e^{gamma N_rho} e^{gamma M} I_H(M),

    with N_rho ~ Normal(0, -2 ln rho) independent of everything else.
    ``params`` carries gamma and the cube half-width r (needs rho <= r < 1 on
    the rho side).  Returns a scalar for n=None, else an array of n draws.
    """
    gamma = params.gamma
    if not (0.0 < rho < 1.0):
        raise InvalidRho(f"need rho in (0, 1) so Var N_rho = -2 ln rho > 0; "
                         f"got rho={rho}")
    if rho > params.r:
        raise InvalidRho(f"rho={rho} exceeds the cube half-width r={params.r}")
    size = n if n is not None else 1
    if sampler is None:
        sampler = RadialSampler(gamma, config)
    draws = sampler.sample_joint(seed, size, want_truncated=True)
    rng = stream_generator(seed, 2 ** 32)  # N_rho stream, disjoint from chunks
    n_rho = np.sqrt(-2.0 * np.log(rho)) * rng.standard_normal(size)
    mass = rho ** (2.0 - gamma ** 2 / 2.0) * np.exp(gamma * n_rho) \
        * np.exp(gamma * draws["M"]) * draws["IH_M"]
    return mass if n is not None else float(mass[0])
