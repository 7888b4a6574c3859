"""Discretized log-correlated fields on a Carleson cube.

The cube Q_r = [-r, r] x [0, 2r] is tiled by n_bulk x n_bulk cells plus n_bdy
boundary segments on [-r, r].  Each node carries the cell average of the field,
so off-diagonal covariance entries are kernel values at cell centers while
diagonal entries are exact cell-averaged self-covariances (the log singularity
is integrable).  This cell regularization makes the discrete Girsanov identity
exact: reweighting by exp(c X_j - c^2/2 Var X_j) equals shifting every node by
c Cov(X_i, X_j).

Dense Cholesky with escalating diagonal jitter backs the sampler; resolutions
beyond ~4e3 nodes are rejected rather than approximated.  Sampling is a pure
function of (factor, seed) through counter-based streams, and replica batches
are chunked so results do not depend on the worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .cellavg import neg_log_avg_segment, neg_log_avg_tri
from .errors import InvalidResolution, NotPositiveDefinite, SingularShift
from .rng import chunk_sizes, stream_generator, thread_count

MAX_DENSE_NODES = 4096
SAMPLE_CHUNK = 2048  # replicas per RNG stream; fixed so results ignore threading


@dataclass(frozen=True)
class Grid:
    """Uniform tiling of Q_r = [-r, r] x [0, 2r] plus boundary segments."""

    r: float
    n_bulk: int
    n_bdy: int
    bulk_centers: np.ndarray  # (n_bulk^2, 2), y > 0
    bdy_centers: np.ndarray   # (n_bdy,) midpoints on (-r, r)
    dx: float
    dy: float
    cell_area: float
    seg_len: float

    @property
    def n_bulk_cells(self) -> int:
        return self.n_bulk * self.n_bulk

    @property
    def n_nodes(self) -> int:
        return self.n_bulk_cells + self.n_bdy

    def node_points(self) -> np.ndarray:
        """All nodes as (n, 2) points, bulk first then boundary at y = 0."""
        bdy = np.column_stack([self.bdy_centers, np.zeros(self.n_bdy)])
        return np.vstack([self.bulk_centers, bdy])

    def segment_of(self, v: float) -> int:
        """Index of the boundary segment whose interior contains v."""
        if not (-self.r < v < self.r):
            raise ValueError(f"v={v} must lie strictly inside (-r, r)")
        pos = (v + self.r) / self.seg_len
        frac = pos - np.floor(pos)
        if pos > 0.5 and min(frac, 1.0 - frac) < 1e-9:
            raise SingularShift(
                f"v={v} sits on a segment endpoint; move it off the lattice")
        return min(int(pos), self.n_bdy - 1)


def build_grid(r: float, n_bulk: int, n_bdy: int) -> Grid:
    """Tile Q_r exactly; cell centers at midpoints, segments tile [-r, r]."""
    if not np.isfinite(r) or not r > 0:
        raise InvalidResolution(f"cube half-width must be positive, got r={r}")
    if n_bulk < 1 or n_bdy < 1:
        raise InvalidResolution("need at least one bulk cell and one segment")
    if n_bulk * n_bulk + n_bdy > MAX_DENSE_NODES:
        raise InvalidResolution(
            f"{n_bulk}x{n_bulk}+{n_bdy} exceeds the dense ceiling of "
            f"{MAX_DENSE_NODES} nodes")
    dx = 2.0 * r / n_bulk
    dy = 2.0 * r / n_bulk
    xs = -r + dx * (np.arange(n_bulk) + 0.5)
    ys = dy * (np.arange(n_bulk) + 0.5)
    gx, gy = np.meshgrid(xs, ys, indexing="xy")
    bulk = np.column_stack([gx.ravel(), gy.ravel()])
    seg = 2.0 * r / n_bdy
    bdy = -r + seg * (np.arange(n_bdy) + 0.5)
    return Grid(r=float(r), n_bulk=n_bulk, n_bdy=n_bdy, bulk_centers=bulk,
                bdy_centers=bdy, dx=dx, dy=dy, cell_area=dx * dy, seg_len=seg)


@dataclass(frozen=True)
class CovFactor:
    """Dense lower-triangular factor of the (jittered) node covariance."""

    dim: int
    lower_factor: np.ndarray
    diag_var: np.ndarray
    jitter_used: float
    kernel: kernels.KernelSpec

    def cov_column(self, j: int) -> np.ndarray:
        """Column j of the factored covariance, L L^T e_j (jitter included)."""
        return self.lower_factor @ self.lower_factor[j, :]

    def covariance(self) -> np.ndarray:
        """Reconstructed covariance L L^T (for diagnostics and tests)."""
        return self.lower_factor @ self.lower_factor.T


def _diag_cell_averages(grid: Grid, kernel: kernels.KernelSpec) -> np.ndarray:
    """Exact cell-averaged self-covariances E[X_cell^2] per node."""
    nb2 = grid.n_bulk_cells
    diag = np.empty(grid.n_nodes)
    # all bulk cells share the direct term; the image term depends on the row
    direct = neg_log_avg_tri(grid.dx, -grid.dy, grid.dy)
    yo_levels = grid.dy * np.arange(grid.n_bulk)
    image_by_row = np.array([
        neg_log_avg_tri(grid.dx, 2.0 * yo, 2.0 * yo + 2.0 * grid.dy)
        for yo in yo_levels])
    rows = np.arange(nb2) // grid.n_bulk
    if kernel.kind in (kernels.EXACT_SCALING_NEUMANN, kernels.PERTURBED):
        diag[:nb2] = direct + image_by_row[rows]
    elif kernel.kind == kernels.DIRICHLET_PART:
        diag[:nb2] = direct - image_by_row[rows]
    elif kernel.kind == kernels.BOUNDARY_RESTRICTION:
        diag[:nb2] = 2.0 * image_by_row[rows]
    else:
        raise ValueError(f"kernel kind {kernel.kind!r} is not a half-plane kernel")
    # on the boundary every kind above restricts to -2 ln|x - y| except the
    # Dirichlet part, which vanishes there
    if kernel.kind == kernels.DIRICHLET_PART:
        diag[nb2:] = 0.0
    else:
        diag[nb2:] = 2.0 * neg_log_avg_segment(grid.seg_len)
    if kernel.kind == kernels.PERTURBED:
        pts = grid.node_points()
        diag += np.array([float(kernel.g(p, p)) for p in pts])
    return diag


def build_cov(grid: Grid, kernel: Optional[kernels.KernelSpec] = None,
              coupling_bdy: bool = True) -> CovFactor:
    """Assemble and factor the node covariance for the given kernel.

    Off-diagonal entries are kernel values at node centers (bulk/boundary
    cross blocks included unless ``coupling_bdy`` is False, which zeroes them
    for diagnostics); diagonal entries are exact cell averages.  Escalating
    diagonal jitter is added until Cholesky succeeds.
    """
    if kernel is None:
        kernel = kernels.KernelSpec()
    pts = grid.node_points()
    cov = kernels.pairwise(kernel, pts, pts)
    cov[np.arange(grid.n_nodes), np.arange(grid.n_nodes)] = \
        _diag_cell_averages(grid, kernel)
    if not coupling_bdy:
        nb2 = grid.n_bulk_cells
        cov[:nb2, nb2:] = 0.0
        cov[nb2:, :nb2] = 0.0
    cov = 0.5 * (cov + cov.T)

    base = 1e-12 * np.trace(cov) / grid.n_nodes
    cap = 1e-6 * np.max(np.abs(cov))
    jitters = [0.0] + [base * 10.0 ** k for k in range(7)
                       if base * 10.0 ** k < cap] + [cap]
    for jit in jitters:
        try:
            lower = np.linalg.cholesky(
                cov + jit * np.eye(grid.n_nodes) if jit else cov)
        except np.linalg.LinAlgError:
            continue
        diag_var = np.einsum("ij,ij->i", lower, lower)
        return CovFactor(dim=grid.n_nodes, lower_factor=lower,
                         diag_var=diag_var, jitter_used=jit, kernel=kernel)
    raise NotPositiveDefinite(
        f"covariance not factorable even with jitter {cap:.3e} "
        f"(grid r={grid.r}, {grid.n_bulk}x{grid.n_bulk}+{grid.n_bdy}); "
        "log kernels are positive definite only on small cubes")


@dataclass(frozen=True)
class FieldSample:
    """One realization of the discretized field (bulk nodes then boundary)."""

    values: np.ndarray
    seed: int
    shift: Optional[np.ndarray] = None


def sample_field(factor: CovFactor, seed: int) -> FieldSample:
    """Draw one field: L @ (standard normals from the Philox stream of seed)."""
    z = stream_generator(seed, 0).standard_normal(factor.dim)
    return FieldSample(values=factor.lower_factor @ z, seed=seed)


def sample_field_batch(factor: CovFactor, seed: int, n: int,
                       stream_offset: int = 0) -> np.ndarray:
    """(dim, n) matrix of independent fields; column order is reproducible.

    Replicas are cut into fixed chunks; chunk c draws from stream
    ``stream_offset + c`` and blocks are concatenated in chunk order, so the
    output is identical for any worker count.
    """
    sizes = chunk_sizes(n, SAMPLE_CHUNK)
    lower = factor.lower_factor

    def draw(task):
        c, size = task
        z = stream_generator(seed, stream_offset + c).standard_normal(
            (factor.dim, size))
        return lower @ z

    tasks = list(enumerate(sizes))
    workers = thread_count()
    if workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(draw, tasks))
    else:
        blocks = [draw(t) for t in tasks]
    if not blocks:
        return np.empty((factor.dim, 0))
    return np.concatenate(blocks, axis=1)


def shift_vector(factor: CovFactor, grid: Grid, v: float, charge: float) -> np.ndarray:
    """Girsanov drift charge * Cov(., X at boundary point v).

    When v is a segment midpoint this is exactly ``charge`` times the factored
    covariance column of that node (discrete Cameron-Martin, jitter included).
    For generic v the kernel is evaluated at (v, 0) against node centers, with
    the segment containing v taking the segment-averaged kernel value.
    """
    if not (-grid.r < v < grid.r):
        raise ValueError(f"v={v} must lie strictly inside (-{grid.r}, {grid.r})")
    j = grid.segment_of(v)
    if np.isclose(v, grid.bdy_centers[j], rtol=0.0, atol=1e-12 * grid.seg_len):
        return charge * factor.cov_column(grid.n_bulk_cells + j)

    pts = grid.node_points()
    col = kernels.pairwise(factor.kernel, pts, np.array([[v, 0.0]]))[:, 0]
    # segment containing v: average of -2 ln|x - v| over the segment
    a = -grid.r + j * grid.seg_len
    b = a + grid.seg_len
    left, right = v - a, b - v
    avg = 2.0 * (left * (1.0 - np.log(left)) + right * (1.0 - np.log(right))) \
        / grid.seg_len
    if factor.kernel.kind == kernels.PERTURBED:
        avg += float(factor.kernel.g(np.array([grid.bdy_centers[j], 0.0]),
                                     np.array([v, 0.0])))
    elif factor.kernel.kind == kernels.DIRICHLET_PART:
        avg = 0.0
    col[grid.n_bulk_cells + j] = avg
    return charge * col


def girsanov_shift(field: FieldSample, factor: CovFactor, grid: Grid,
                   v: float, charge: float) -> FieldSample:
    """Tilt a realization toward a boundary point: values += charge * K(., v)."""
    delta = shift_vector(factor, grid, v, charge)
    total = delta if field.shift is None else field.shift + delta
    return FieldSample(values=field.values + delta, seed=field.seed, shift=total)
