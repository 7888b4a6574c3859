"""Closed-form covariance kernels on the closed upper half-plane.

The exact-scaling Neumann kernel

    K_C(z, w) = -ln |z - w||z - conj(w)|

and its relatives: the Dirichlet part K_D = -ln(|z - w|/|z - conj(w)|), the
boundary restriction K_R(x, y) = -2 ln|x - y| on the real line, the lateral
(cylinder) covariance left after removing the semicircle-average Brownian
motion, and Neumann-type perturbations K_C + g.  Points are (x, y) pairs with
y >= 0; boundary points have y = 0 exactly.

Kernels carry no GMC coupling parameter; they are pure covariances.  All
functions are pure and thread-safe.

Convention for semicircle averages: the *unnormalized* average
A_t = (1/pi) int_0^pi X(e^{-t} e^{i theta}) d theta has covariance
2 min(s, t); the standard Brownian motion used downstream is B_t = A_t/sqrt(2)
and the field decomposes as X = sqrt(2) B_t + Y with Y the lateral noise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from numpy.polynomial.legendre import leggauss

from .cellavg import SEGMENT_LOG_CONST
from .errors import DiagonalSingularity, QuadratureUnstable

EXACT_SCALING_NEUMANN = "exact_scaling_neumann"
DIRICHLET_PART = "dirichlet_part"
BOUNDARY_RESTRICTION = "boundary_restriction"
LATERAL = "lateral"
PERTURBED = "perturbed"

KERNEL_KINDS = (
    EXACT_SCALING_NEUMANN,
    DIRICHLET_PART,
    BOUNDARY_RESTRICTION,
    LATERAL,
    PERTURBED,
)


@dataclass(frozen=True)
class KernelSpec:
    """Which covariance kernel to use and, for ``perturbed``, its g term.

    ``g`` must be symmetric, g(z, w) = g(w, z), and is called with point
    arrays of shape (..., 2); a scalar implementation is wrapped on the fly.
    """

    kind: str = EXACT_SCALING_NEUMANN
    g: Optional[Callable] = None

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}; "
                             f"expected one of {KERNEL_KINDS}")
        if self.kind == PERTURBED and self.g is None:
            raise ValueError("perturbed kernel requires a g function")
        if self.kind != PERTURBED and self.g is not None:
            raise ValueError("g is only meaningful for the perturbed kernel")


def _check_point(p) -> tuple[float, float]:
    x, y = float(p[0]), float(p[1])
    if y < 0:
        raise ValueError(f"half-plane point needs y >= 0, got y={y}")
    return x, y


def _dists(z, w) -> tuple[float, float]:
    """(|z - w|, |z - conj(w)|) for half-plane points given as (x, y)."""
    zx, zy = _check_point(z)
    wx, wy = _check_point(w)
    d_direct = np.hypot(zx - wx, zy - wy)
    d_image = np.hypot(zx - wx, zy + wy)
    return d_direct, d_image


def eval_neumann(z, w) -> float:
    """Exact-scaling Neumann kernel -ln(|z - w| |z - conj(w)|)."""
    d_direct, d_image = _dists(z, w)
    if d_direct == 0.0 or d_image == 0.0:
        raise DiagonalSingularity(f"kernel singular at z={tuple(z)}, w={tuple(w)}")
    return float(-np.log(d_direct) - np.log(d_image))


def eval_dirichlet(z, w) -> float:
    """Dirichlet part -ln(|z - w| / |z - conj(w)|); vanishes on the boundary."""
    d_direct, d_image = _dists(z, w)
    if d_direct == 0.0 or d_image == 0.0:
        raise DiagonalSingularity(f"kernel singular at z={tuple(z)}, w={tuple(w)}")
    return float(-np.log(d_direct) + np.log(d_image))


def eval_boundary(x: float, y: float) -> float:
    """Boundary restriction -2 ln|x - y| for two points of the real line."""
    d = abs(float(x) - float(y))
    if d == 0.0:
        raise DiagonalSingularity(f"boundary kernel singular at x = y = {x}")
    return float(-2.0 * np.log(d))


def eval_perturbed(z, w, g: Callable) -> float:
    """Neumann-type kernel -ln|z - w||z - conj(w)| + g(z, w)."""
    base = eval_neumann(z, w)
    return float(base + g(np.asarray(z, dtype=float), np.asarray(w, dtype=float)))


def lateral_cov(t, theta, t2, theta2):
    """Vectorized lateral covariance; no coincident-point guard.

    ln[(e^{-t} v e^{-t'})^2 / (|e^{-t}e^{i th} - e^{-t'}e^{i th'}|
                               |e^{-t}e^{i th} - e^{-t'}e^{-i th'}|)].
    Depends on (t, t') only through |t - t'| and is symmetric in the two
    arguments.
    """
    t = np.asarray(t, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    theta = np.asarray(theta, dtype=float)
    theta2 = np.asarray(theta2, dtype=float)
    r1 = np.exp(-t)
    r2 = np.exp(-t2)
    top = np.maximum(r1, r2) ** 2
    d1sq = r1 * r1 + r2 * r2 - 2 * r1 * r2 * np.cos(theta - theta2)
    d2sq = r1 * r1 + r2 * r2 - 2 * r1 * r2 * np.cos(theta + theta2)
    return np.log(top) - 0.5 * np.log(d1sq) - 0.5 * np.log(d2sq)


def eval_lateral(t: float, theta: float, t2: float, theta2: float) -> float:
    """Lateral covariance at two cylinder points (t, theta), (t2, theta2)."""
    for ang in (theta, theta2):
        if not 0.0 <= ang <= np.pi:
            raise ValueError(f"theta must lie in [0, pi], got {ang}")
    if t == t2 and (theta == theta2 or theta + theta2 == 0.0
                    or theta + theta2 == 2 * np.pi):
        raise DiagonalSingularity(
            f"lateral kernel singular at coincident points (t={t}, theta={theta})")
    return float(lateral_cov(t, theta, t2, theta2))


def evaluate(spec: KernelSpec, a, b) -> float:
    """Dispatch on ``spec.kind``; a, b are points of the kernel's domain.

    Planar kernels take (x, y) pairs, the boundary restriction accepts either
    reals or (x, 0) pairs, the lateral kernel takes (t, theta) pairs.
    """
    if spec.kind == EXACT_SCALING_NEUMANN:
        return eval_neumann(a, b)
    if spec.kind == DIRICHLET_PART:
        return eval_dirichlet(a, b)
    if spec.kind == BOUNDARY_RESTRICTION:
        ax = a[0] if np.ndim(a) else a
        bx = b[0] if np.ndim(b) else b
        return eval_boundary(ax, bx)
    if spec.kind == LATERAL:
        return eval_lateral(a[0], a[1], b[0], b[1])
    return eval_perturbed(a, b, spec.g)


def _g_matrix(g: Callable, pts_a: np.ndarray, pts_b: np.ndarray) -> np.ndarray:
    za = pts_a[:, None, :]
    zb = pts_b[None, :, :]
    try:
        out = np.asarray(g(za, zb), dtype=float)
        if out.shape == (len(pts_a), len(pts_b)):
            return out
    except Exception:
        pass
    out = np.empty((len(pts_a), len(pts_b)))
    for i, p in enumerate(pts_a):
        for j, q in enumerate(pts_b):
            out[i, j] = g(p, q)
    return out


def pairwise(spec: KernelSpec, pts_a: np.ndarray, pts_b: np.ndarray) -> np.ndarray:
    """Kernel matrix at point centers (no diagonal regularization).

    ``pts_*`` are (n, 2) arrays of half-plane points.  Coincident pairs produce
    +inf; grid builders overwrite those entries with cell averages.
    """
    pts_a = np.asarray(pts_a, dtype=float)
    pts_b = np.asarray(pts_b, dtype=float)
    dx = pts_a[:, 0][:, None] - pts_b[:, 0][None, :]
    dy = pts_a[:, 1][:, None] - pts_b[:, 1][None, :]
    sy = pts_a[:, 1][:, None] + pts_b[:, 1][None, :]
    d_direct = np.hypot(dx, dy)
    d_image = np.hypot(dx, sy)
    with np.errstate(divide="ignore"):
        if spec.kind == EXACT_SCALING_NEUMANN:
            return -np.log(d_direct) - np.log(d_image)
        if spec.kind == DIRICHLET_PART:
            return -np.log(d_direct) + np.log(d_image)
        if spec.kind == BOUNDARY_RESTRICTION:
            return -2.0 * np.log(d_image)
        if spec.kind == PERTURBED:
            base = -np.log(d_direct) - np.log(d_image)
            return base + _g_matrix(spec.g, pts_a, pts_b)
    raise ValueError(f"pairwise evaluation not defined for kind {spec.kind!r}")


# --- semicircle averages ----------------------------------------------------

def semicircle_avg_cov(s: float, t: float) -> float:
    """Covariance 2 min(s, t) of the unnormalized semicircle average A_t."""
    if s < 0 or t < 0:
        raise ValueError("semicircle log-radii must be non-negative")
    return 2.0 * min(float(s), float(t))


def _gl_composite(n_nodes: int, lo: float, hi: float, panel: int = 16):
    """Composite Gauss-Legendre nodes/weights with about n_nodes points."""
    per = min(panel, max(2, n_nodes))
    n_panels = max(1, int(round(n_nodes / per)))
    x, w = leggauss(per)
    edges = np.linspace(lo, hi, n_panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
    half = 0.5 * (edges[1] - edges[0])
    nodes = (mid + half * x[None, :]).ravel()
    weights = np.tile(half * w, n_panels)
    return nodes, weights


def _neumann_angle_matrix(s: float, t: float, th1: np.ndarray, th2: np.ndarray):
    r1, r2 = np.exp(-s), np.exp(-t)
    c_minus = np.cos(th1[:, None] - th2[None, :])
    c_plus = np.cos(th1[:, None] + th2[None, :])
    d1sq = r1 * r1 + r2 * r2 - 2 * r1 * r2 * c_minus
    d2sq = r1 * r1 + r2 * r2 - 2 * r1 * r2 * c_plus
    return -0.5 * np.log(d1sq) - 0.5 * np.log(d2sq)


def _quadrature_cov_once(s: float, t: float, n_nodes: int) -> float:
    if s != t:
        th1, w1 = _gl_composite(n_nodes, 0.0, np.pi)
        th2, w2 = _gl_composite(n_nodes, 0.0, np.pi)
        vals = _neumann_angle_matrix(s, t, th1, th2)
        return float(w1 @ vals @ w2) / np.pi ** 2

    # Equal radii: the integrand has a log singularity along theta = theta'.
    # Midpoint grids staggered by a half cell keep nodes apart (symmetric
    # offset); the model term -ln|dtheta| is subtracted node-wise and its
    # exact integral pi^2 (3/2 - ln pi) restored.
    n = max(4, n_nodes)
    h = np.pi / n
    th1 = (np.arange(n) + 0.5) * h
    th2 = (np.arange(2 * n) + 0.5) * (h / 2.0)
    vals = _neumann_angle_matrix(s, t, th1, th2)
    model = -np.log(np.abs(th1[:, None] - th2[None, :]))
    rule = np.sum(vals - model) * h * (h / 2.0)
    exact_model = np.pi ** 2 * (SEGMENT_LOG_CONST - np.log(np.pi))
    return float(rule + exact_model) / np.pi ** 2


def quadrature_cov(s: float, t: float, n_nodes: int,
                   tol: Optional[float] = None) -> float:
    """Double quadrature of eval_neumann over two semicircles, divided by pi^2.

    Converges to ``semicircle_avg_cov(s, t) = 2 min(s, t)``.  With ``tol``
    given, raises ``QuadratureUnstable`` when the n and n/2 refinements differ
    by more than ``tol``.
    """
    if s < 0 or t < 0:
        raise ValueError("semicircle log-radii must be non-negative")
    if n_nodes < 4:
        raise ValueError("n_nodes must be at least 4")
    fine = _quadrature_cov_once(s, t, n_nodes)
    if tol is not None:
        coarse = _quadrature_cov_once(s, t, max(4, n_nodes // 2))
        if abs(fine - coarse) > tol:
            raise QuadratureUnstable(
                f"refinements differ by {abs(fine - coarse):.3e} > tol={tol:.1e} "
                f"at n_nodes={n_nodes}")
    return fine


def lateral_avg_quadrature(t: float, t2: float, n_nodes: int = 256) -> float:
    """(1/pi^2) double angular integral of the lateral covariance at (t, t2).

    Vanishes identically (the lateral field has zero semicircle average);
    needs t != t2 so the integrand stays smooth.
    """
    if t == t2:
        raise ValueError("use distinct t, t2; the equal-radius integrand is singular")
    th1, w1 = _gl_composite(n_nodes, 0.0, np.pi)
    th2, w2 = _gl_composite(n_nodes, 0.0, np.pi)
    vals = lateral_cov(t, th1[:, None], t2, th2[None, :])
    return float(w1 @ vals @ w2) / np.pi ** 2
