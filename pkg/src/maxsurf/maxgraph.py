"""Maximal graphs over planar domains.

A GridGraph holds node samples of t = u(x1, x2) on a uniform grid with a
node activity mask (NaN marks inactive nodes in the CSV format).  The
maximal surface operator div(grad u / sqrt(1 - |grad u|^2)) is discretized
with face-centered fluxes: the normal derivative on each cell face is the
adjacent node difference, the tangential one the average of the four
one-sided differences, preserving the divergence structure.

The Plateau solver maximizes the discrete area functional (equivalently
drives the flux residual to zero) in two stages: lagged-coefficient
red-black SOR sweeps (robust from the Lipschitz-envelope start), then a
damped Newton finisher with a sparse direct solve.  Gradients are clamped
at 1 - eps_reg inside the flux; area-maximizing limits may genuinely touch
|grad u| = 1 along lightlike segments, which detect_singular reports
afterwards instead of the solver suppressing them.
"""

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph
import scipy.sparse.linalg as spla
from scipy import ndimage

from . import _kernels
from .errors import (AdmissibilityError, ConvergenceError, DomainError,
                     ExactnessError, OverlapError, SingularError)

EPS_DISC_DEFAULT = 1e-6


@dataclass
class GridGraph:
    """Scalar field u on a masked uniform grid; u[i, j] sits at
    (x0 + i*h, y0 + j*h).  Inactive nodes carry NaN."""

    origin: tuple
    h: float
    u: np.ndarray              # (nx, ny) float, NaN outside mask
    mask: np.ndarray = None    # (nx, ny) bool; default: ~isnan(u)

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        if self.mask is None:
            self.mask = ~np.isnan(self.u)
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.mask.shape != self.u.shape:
            raise DomainError("mask and u shapes differ")

    @property
    def nx(self):
        return self.u.shape[0]

    @property
    def ny(self):
        return self.u.shape[1]

    def xs(self):
        return self.origin[0] + self.h * np.arange(self.nx)

    def ys(self):
        return self.origin[1] + self.h * np.arange(self.ny)

    def meshgrid(self):
        return np.meshgrid(self.xs(), self.ys(), indexing="ij")

    def interior_mask(self):
        """Active nodes all of whose 8 neighbors are active."""
        pad = np.pad(self.mask, 1, constant_values=False)
        out = self.mask.copy()
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                if di == 0 and dj == 0:
                    continue
                out &= pad[1 + di:pad.shape[0] - 1 + di, 1 + dj:pad.shape[1] - 1 + dj]
        return out

    def boundary_mask(self):
        return self.mask & ~self.interior_mask()

    def gradient(self):
        """Discrete gradient (central where possible, one-sided at rims).

        Returns (ux, uy) with NaN outside the mask.
        """
        u, m, h = self.u, self.mask, self.h
        ux = np.full_like(u, np.nan)
        uy = np.full_like(u, np.nan)
        uP = np.pad(np.where(m, u, np.nan), 1, constant_values=np.nan)
        c = uP[1:-1, 1:-1]
        e, w = uP[2:, 1:-1], uP[:-2, 1:-1]
        n, s = uP[1:-1, 2:], uP[1:-1, :-2]
        ux = np.where(~np.isnan(e) & ~np.isnan(w), (e - w) / (2 * h),
                      np.where(~np.isnan(e), (e - c) / h,
                               np.where(~np.isnan(w), (c - w) / h, 0.0)))
        uy = np.where(~np.isnan(n) & ~np.isnan(s), (n - s) / (2 * h),
                      np.where(~np.isnan(n), (n - c) / h,
                               np.where(~np.isnan(s), (c - s) / h, 0.0)))
        ux = np.where(m, ux, np.nan)
        uy = np.where(m, uy, np.nan)
        return ux, uy

    def ps_violation(self):
        """max(|grad u| - 1) over active nodes (<= eps_disc for PS data)."""
        ux, uy = self.gradient()
        g = np.sqrt(ux ** 2 + uy ** 2)
        return float(np.nanmax(g) - 1.0)

    def lift(self):
        """Graph points (nx, ny, 3) with NaN rows outside the mask."""
        X, Y = self.meshgrid()
        return np.stack([X, Y, self.u], axis=-1)

    @classmethod
    def from_function(cls, origin, h, nx, ny, fn, mask_fn=None):
        xs = origin[0] + h * np.arange(nx)
        ys = origin[1] + h * np.arange(ny)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        m = np.ones((nx, ny), dtype=bool) if mask_fn is None else mask_fn(X, Y)
        u = np.where(m, fn(X, Y), np.nan)
        return cls(origin=tuple(origin), h=h, u=u, mask=m)


def disc_mask(radius, center=(0.0, 0.0)):
    cx, cy = center
    return lambda X, Y: (X - cx) ** 2 + (Y - cy) ** 2 <= radius ** 2 + 1e-12


def annulus_mask(r_in, r_out, center=(0.0, 0.0)):
    cx, cy = center

    def fn(X, Y):
        r2 = (X - cx) ** 2 + (Y - cy) ** 2
        return (r2 >= r_in ** 2 - 1e-12) & (r2 <= r_out ** 2 + 1e-12)

    return fn


# ---------------------------------------------------------------------------
# GridGraph CSV format: header "nx,ny,x0,y0,h", then ny rows of nx values
# (row j lists u[0..nx-1, j]); NaN marks masked-out nodes.  Floats use the
# shortest round-trip representation, so save -> load is bit-exact.
# ---------------------------------------------------------------------------

def _fmt(x):
    return repr(float(x))


def save_gridgraph(g: GridGraph, path):
    with open(path, "w") as fh:
        fh.write(f"{g.nx},{g.ny},{_fmt(g.origin[0])},{_fmt(g.origin[1])},{_fmt(g.h)}\n")
        vals = np.where(g.mask, g.u, np.nan)
        for j in range(g.ny):
            fh.write(",".join(_fmt(vals[i, j]) for i in range(g.nx)) + "\n")


def load_gridgraph(path) -> GridGraph:
    with open(path) as fh:
        head = fh.readline().strip().split(",")
        if len(head) != 5:
            raise DomainError("bad GridGraph header")
        nx, ny = int(head[0]), int(head[1])
        x0, y0, h = float(head[2]), float(head[3]), float(head[4])
        u = np.full((nx, ny), np.nan)
        for j in range(ny):
            row = fh.readline().strip().split(",")
            if len(row) != nx:
                raise DomainError(f"row {j} has {len(row)} values, expected {nx}")
            u[:, j] = [float(tok) for tok in row]
    return GridGraph(origin=(x0, y0), h=h, u=u)


# ---------------------------------------------------------------------------
# face fluxes and the discrete maximal-surface operator
# ---------------------------------------------------------------------------

def _face_quantities(u, h, qmax):
    """Normal/tangential differences, clamped q and W on E and N faces.

    E face (i+1/2, j) lives at array slot [i, j]; N face (i, j+1/2) too.
    Array edges contain garbage from wraparound; callers only read faces
    adjacent to interior nodes, whose stencils are fully active.
    """
    ux_E = (np.roll(u, -1, 0) - u) / h
    uy_E = (np.roll(u, -1, 1) - np.roll(u, 1, 1)
            + np.roll(np.roll(u, -1, 0), -1, 1) - np.roll(np.roll(u, -1, 0), 1, 1)) / (4 * h)
    qE_raw = ux_E ** 2 + uy_E ** 2
    clE = qE_raw > qmax
    WE = np.sqrt(1.0 - np.minimum(qE_raw, qmax))
    uy_N = (np.roll(u, -1, 1) - u) / h
    ux_N = (np.roll(u, -1, 0) - np.roll(u, 1, 0)
            + np.roll(np.roll(u, -1, 1), -1, 0) - np.roll(np.roll(u, -1, 1), 1, 0)) / (4 * h)
    qN_raw = ux_N ** 2 + uy_N ** 2
    clN = qN_raw > qmax
    WN = np.sqrt(1.0 - np.minimum(qN_raw, qmax))
    return ux_E, uy_E, WE, clE, ux_N, uy_N, WN, clN


def _flux_divergence(u, h, qmax, sign=-1.0):
    """div(grad u / sqrt(1 + sign*|grad u|^2)) on the full array.

    sign=-1 is the maximal operator, sign=+1 the minimal one (no clamp
    needed there).
    """
    if sign < 0:
        ux_E, uy_E, WE, clE, ux_N, uy_N, WN, clN = _face_quantities(u, h, qmax)
        FE = ux_E / WE
        FN = uy_N / WN
        clamped = clE | np.roll(clE, 1, 0) | clN | np.roll(clN, 1, 1)
    else:
        ux_E = (np.roll(u, -1, 0) - u) / h
        uy_E = (np.roll(u, -1, 1) - np.roll(u, 1, 1)
                + np.roll(np.roll(u, -1, 0), -1, 1) - np.roll(np.roll(u, -1, 0), 1, 1)) / (4 * h)
        uy_N = (np.roll(u, -1, 1) - u) / h
        ux_N = (np.roll(u, -1, 0) - np.roll(u, 1, 0)
                + np.roll(np.roll(u, -1, 1), -1, 0) - np.roll(np.roll(u, -1, 1), 1, 0)) / (4 * h)
        FE = ux_E / np.sqrt(1.0 + ux_E ** 2 + uy_E ** 2)
        FN = uy_N / np.sqrt(1.0 + ux_N ** 2 + uy_N ** 2)
        clamped = np.zeros(u.shape, dtype=bool)
    R = (FE - np.roll(FE, 1, 0)) / h + (FN - np.roll(FN, 1, 1)) / h
    return R, clamped


def residual_maximal(g: GridGraph, eps_reg=EPS_DISC_DEFAULT):
    """Residual of the discrete maximal-surface operator at interior nodes.

    Returns (residual grid with NaN off the interior, clamped-node mask).
    Nodes whose stencil hit the gradient clamp are flagged, not fatal.
    """
    qmax = (1.0 - eps_reg) ** 2
    interior = g.interior_mask()
    work = np.where(g.mask, g.u, 0.0)
    R, clamped = _flux_divergence(work, g.h, qmax, sign=-1.0)
    out = np.where(interior, R, np.nan)
    return out, clamped & interior


def residual_minimal(g: GridGraph):
    """Residual of the discrete minimal-surface operator (Euclidean)."""
    interior = g.interior_mask()
    work = np.where(g.mask, g.u, 0.0)
    R, _ = _flux_divergence(work, g.h, 1.0, sign=+1.0)
    return np.where(interior, R, np.nan)


def area(g: GridGraph, R, center=(0.0, 0.0), eps_reg=0.0):
    """Midpoint-rule Lorentzian area of the graph over mask & disc D(R).

    Integrand sqrt(1 - |grad u|^2) at cell centers from corner differences;
    cells count when their four corners are active and the center is in
    D(R).  Bounded by pi R^2 + O(h).
    """
    if R <= 0:
        raise DomainError("radius must be positive")
    u, m, h = g.u, g.mask, g.h
    cell_ok = m[:-1, :-1] & m[1:, :-1] & m[:-1, 1:] & m[1:, 1:]
    ux = (u[1:, :-1] + u[1:, 1:] - u[:-1, :-1] - u[:-1, 1:]) / (2 * h)
    uy = (u[:-1, 1:] + u[1:, 1:] - u[:-1, :-1] - u[1:, :-1]) / (2 * h)
    q = ux ** 2 + uy ** 2
    xs, ys = g.xs(), g.ys()
    cx = 0.5 * (xs[:-1] + xs[1:]) - center[0]
    cy = 0.5 * (ys[:-1] + ys[1:]) - center[1]
    in_disc = (cx[:, None] ** 2 + cy[None, :] ** 2) <= R * R
    sel = cell_ok & in_disc
    integrand = np.sqrt(np.clip(1.0 - q, 0.0, None))
    return float(np.sum(integrand[sel]) * h * h)


# ---------------------------------------------------------------------------
# boundary tracing and inner distances
# ---------------------------------------------------------------------------

def trace_boundary(g: GridGraph):
    """Boundary nodes ordered by angle around the active centroid.

    Deterministic ordering contract for the boundary-CSV format; intended
    for star-shaped masks (discs, annuli sectors).
    """
    bmask = g.boundary_mask()
    ii, jj = np.nonzero(bmask)
    if len(ii) == 0:
        raise DomainError("mask has no boundary nodes")
    X, Y = g.meshgrid()
    ai, aj = np.nonzero(g.mask)
    cx, cy = X[ai, aj].mean(), Y[ai, aj].mean()
    ang = np.arctan2(Y[ii, jj] - cy, X[ii, jj] - cx)
    rad = np.hypot(Y[ii, jj] - cy, X[ii, jj] - cx)
    order = np.lexsort((rad, ang))
    return np.stack([ii[order], jj[order]], axis=1)


def _grid_csgraph(g: GridGraph):
    """Sparse 8-neighbor adjacency over active nodes, Euclidean weights."""
    m = g.mask
    nx, ny = m.shape
    idx = -np.ones((nx, ny), dtype=np.int64)
    ai, aj = np.nonzero(m)
    idx[ai, aj] = np.arange(len(ai))
    rows, cols, vals = [], [], []
    for di, dj, w in ((1, 0, 1.0), (0, 1, 1.0), (1, 1, np.sqrt(2.0)), (1, -1, np.sqrt(2.0))):
        ni, nj = ai + di, aj + dj
        ok = (ni >= 0) & (ni < nx) & (nj >= 0) & (nj < ny)
        ok[ok] &= m[ni[ok], nj[ok]]
        rows.append(idx[ai[ok], aj[ok]])
        cols.append(idx[ni[ok], nj[ok]])
        vals.append(np.full(ok.sum(), w * g.h))
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    n = len(ai)
    adj = sp.csr_matrix((np.concatenate([vals, vals]),
                         (np.concatenate([rows, cols]), np.concatenate([cols, rows]))),
                        shape=(n, n))
    return adj, idx, (ai, aj)


def inner_distances(g: GridGraph, sources):
    """Grid-Dijkstra distances from source nodes over the masked domain.

    sources: (k, 2) array of node indices.  Returns (k, n_active) distances
    plus the node index map.  The 8-neighbor metric overestimates the true
    inner distance by at most ~8.2%, absorbed by the admissibility slack.
    """
    adj, idx, (ai, aj) = _grid_csgraph(g)
    src = idx[sources[:, 0], sources[:, 1]]
    if np.any(src < 0):
        raise DomainError("source node outside the active mask")
    dist = csgraph.dijkstra(adj, directed=False, indices=src)
    return dist, idx, (ai, aj)


# ---------------------------------------------------------------------------
# Plateau solver
# ---------------------------------------------------------------------------

@dataclass
class SolverConfig:
    eps_reg: float = 1e-6       # gradient clamp at 1 - eps_reg
    tol: float = 1e-10          # stop on max nonlinear residual
    max_iters: int = 0          # total sweep budget; 0 = 200 * max(nx, ny)
    relaxation: float = 0.0     # SOR omega; 0 = auto 2/(1 + sin(pi/n))
    picard_sweeps_per_refresh: int = 30
    newton_switch: float = 1e-3  # hand off to Newton below this residual
    max_newton: int = 40
    admissibility_slack: float = 2.0   # in units of h

    def __post_init__(self):
        if not (0.0 < self.eps_reg < 1.0):
            raise DomainError("eps_reg must be in (0, 1)")
        if self.tol <= 0:
            raise DomainError("tol must be positive")


@dataclass
class SolveStats:
    sweeps: int = 0
    newton_steps: int = 0
    residual: float = np.inf
    runtime: float = 0.0
    degenerate: bool = False
    clamped_nodes: int = 0
    residual_history: list = field(default_factory=list)


def _resolve_boundary_values(g: GridGraph, boundary):
    """Boundary input -> value array over boundary nodes (traced order)."""
    nodes = trace_boundary(g)
    X, Y = g.meshgrid()
    if callable(boundary):
        vals = np.asarray(boundary(X[nodes[:, 0], nodes[:, 1]],
                                   Y[nodes[:, 0], nodes[:, 1]]), dtype=float)
    elif isinstance(boundary, dict):
        vals = np.array([boundary[(int(i), int(j))] for i, j in nodes], dtype=float)
    else:
        arr = np.asarray(boundary, dtype=float)
        if arr.ndim == 2 and arr.shape[1] == 2:
            vals = np.full(len(nodes), np.nan)
            for k, v in arr:
                vals[int(k)] = v
            if np.isnan(vals).any():
                raise DomainError("boundary (index, value) pairs do not cover the boundary")
        elif arr.shape == (len(nodes),):
            vals = arr
        else:
            raise DomainError("boundary must be callable, dict, (index,value) pairs, or a value per traced node")
    return nodes, vals


def solve_plateau(mask_graph: GridGraph, boundary, cfg: SolverConfig = None):
    """Dirichlet problem for the maximal-surface equation on the mask.

    boundary: callable u(x, y), dict {(i, j): value}, (index, value) pairs
    in traced order, or one value per traced boundary node.

    Checks the Lipschitz admissibility |b(p) - b(q)| <= d(p, q) + slack
    against grid-Dijkstra inner distances, then maximizes the discrete area
    functional starting from the Lipschitz-envelope midpoint.  Fully
    lightlike data (envelopes collapse) returns the forced PS interpolant
    without iterating.  Returns (GridGraph, SolveStats).
    """
    cfg = cfg or SolverConfig()
    t0 = time.time()
    g = mask_graph
    interior = g.interior_mask()
    nodes, bvals = _resolve_boundary_values(g, boundary)
    if not interior.any():
        raise DomainError("mask has no interior nodes")

    dist, idx, (ai, aj) = inner_distances(g, nodes)
    bidx = idx[nodes[:, 0], nodes[:, 1]]
    slack = cfg.admissibility_slack * g.h
    dbb = dist[:, bidx]
    excess = np.abs(bvals[:, None] - bvals[None, :]) - dbb
    worst = np.unravel_index(np.nanargmax(excess), excess.shape)
    if excess[worst] > slack:
        p, q = nodes[worst[0]], nodes[worst[1]]
        raise AdmissibilityError(
            f"boundary pair {tuple(p)}<->{tuple(q)} violates |dt| <= d by {excess[worst]:.3e}",
            pair=(tuple(p), tuple(q)), excess=float(excess[worst]))

    # Lipschitz envelopes over the active set
    upper = np.min(bvals[:, None] + dist, axis=0)
    lower = np.max(bvals[:, None] - dist, axis=0)
    bmask = g.boundary_mask()
    stats = SolveStats()

    if np.max(upper - lower) <= 2.0 * slack:
        # forced PS interpolant: the envelopes collapse (lightlike data)
        u = np.full(g.u.shape, np.nan)
        u[ai, aj] = 0.5 * (upper + lower)
        u[nodes[:, 0], nodes[:, 1]] = bvals
        out = GridGraph(origin=g.origin, h=g.h, u=np.where(g.mask, u, np.nan), mask=g.mask.copy())
        res, clamped = residual_maximal(out, cfg.eps_reg)
        stats.degenerate = True
        stats.residual = float(np.nanmax(np.abs(res))) if np.isfinite(res).any() else 0.0
        stats.clamped_nodes = int(clamped.sum())
        stats.runtime = time.time() - t0
        return out, stats

    # start from the lower Lipschitz envelope: its gradient field saturates
    # the clamp uniformly, which keeps the first frozen-coefficient systems
    # near-isotropic (a patchy mix of clamped/free faces destabilizes SOR)
    u = np.full(g.u.shape, np.nan)
    u[ai, aj] = lower
    u[nodes[:, 0], nodes[:, 1]] = bvals

    # fix boundary ring values; iterate on interior
    work = np.where(g.mask, u, 0.0)
    work[bmask] = u[bmask]
    qmax = (1.0 - cfg.eps_reg) ** 2
    h = g.h
    ii, jj = np.nonzero(interior)
    red = (ii + jj) % 2 == 0
    ri, rj = ii[red], jj[red]
    bi, bj = ii[~red], jj[~red]
    n = max(g.nx, g.ny)
    omega = cfg.relaxation if cfg.relaxation > 0 else 2.0 / (1.0 + np.sin(np.pi / n))
    sweep_budget = cfg.max_iters if cfg.max_iters > 0 else 200 * n

    def nl_residual(w):
        R, clamped = _flux_divergence(w, h, qmax, sign=-1.0)
        return R, clamped

    R, _ = nl_residual(work)
    rn = float(np.abs(R[interior]).max())
    stats.residual_history.append(rn)
    node_index = -np.ones(work.shape, dtype=np.int64)
    node_index[ii, jj] = np.arange(len(ii))

    def picard_outer(om, nsw):
        _, _, WE, _, _, _, WN, _ = _face_quantities(work, h, qmax)
        cE = 1.0 / WE
        cN = 1.0 / WN
        cW = np.roll(cE, 1, 0)
        cS = np.roll(cN, 1, 1)
        D = (cE + cW + cN + cS) / (h * h)
        _kernels.picard_sweeps(work, cE, cW, cN, cS, D, ri, rj, bi, bj,
                               1.0 / (h * h), om, nsw)
        Rn, _ = nl_residual(work)
        return Rn, float(np.abs(Rn[interior]).max())

    def newton_phase(R, rn):
        # damped Newton with sparse direct solves; returns final (work-ok, R, rn)
        nonlocal work
        while rn > cfg.tol and stats.newton_steps < cfg.max_newton:
            A = _assemble_jacobian(work, h, qmax, ii, jj, node_index)
            delta = spla.spsolve(A.tocsc(), -R[ii, jj])
            alpha, improved = 1.0, False
            for _ in range(20):
                trial = work.copy()
                trial[ii, jj] += alpha * delta
                Rt, _ = nl_residual(trial)
                rt = float(np.abs(Rt[interior]).max())
                if rt < rn:
                    improved = True
                    break
                alpha *= 0.5
            if not improved:
                return False, R, rn
            work, R, rn = trial, Rt, rt
            stats.newton_steps += 1
            stats.residual_history.append(rn)
        return rn <= cfg.tol, R, rn

    # lagged-coefficient red-black SOR with an adaptive-omega safeguard,
    # handing off to Newton near the solution or on stall
    om = omega
    stall = 0
    while rn > cfg.tol:
        if rn < cfg.newton_switch or stall >= 3 or stats.sweeps >= sweep_budget:
            done, R, rn = newton_phase(R, rn)
            if done:
                break
            if stats.sweeps >= sweep_budget or stats.newton_steps >= cfg.max_newton:
                raise ConvergenceError(
                    f"plateau solver stalled at residual {rn:.3e} "
                    f"(tol {cfg.tol:.1e}, {stats.sweeps} sweeps, "
                    f"{stats.newton_steps} Newton steps)")
            om = 1.0 + 0.5 * (om - 1.0)   # resume relaxation, damped
            stall = 0
        nsw = min(cfg.picard_sweeps_per_refresh, sweep_budget - stats.sweeps)
        if nsw <= 0:
            stall = 3
            continue
        R, rn_new = picard_outer(om, nsw)
        stats.sweeps += nsw
        stats.residual_history.append(rn_new)
        if rn_new > 0.9 * rn:
            stall += 1
            om = 1.0 + 0.7 * (om - 1.0)
        rn = rn_new

    ufin = np.where(g.mask, work, np.nan)
    out = GridGraph(origin=g.origin, h=g.h, u=ufin, mask=g.mask.copy())
    _, clamped = nl_residual(work)
    stats.clamped_nodes = int((clamped & interior).sum())
    stats.residual = rn
    stats.runtime = time.time() - t0
    return out, stats


def _assemble_jacobian(u, h, qmax, ii, jj, node_index):
    """Sparse Jacobian of the face-flux residual at interior nodes."""
    n0, n1 = u.shape
    ux_E, uy_E, WE, clE, ux_N, uy_N, WN, clN = _face_quantities(u, h, qmax)
    cnE = np.where(clE, 1.0 / WE, (1.0 - uy_E ** 2) / WE ** 3)
    ctE = np.where(clE, 0.0, ux_E * uy_E / WE ** 3)
    cnN = np.where(clN, 1.0 / WN, (1.0 - ux_N ** 2) / WN ** 3)
    ctN = np.where(clN, 0.0, ux_N * uy_N / WN ** 3)
    N = len(ii)
    rows, cols, vals = [], [], []
    contribs = []
    for fsign, fdi, fdj in ((1.0, 0, 0), (-1.0, -1, 0)):  # E faces of node / west neighbor
        for (tdi, tdj), w in (((1, 0), 1.0), ((0, 0), -1.0)):
            contribs.append((fdi, fdj, fdi + tdi, fdj + tdj, cnE, fsign * w / (h * h)))
        for (tdi, tdj), w in (((0, 1), 0.25), ((1, 1), 0.25), ((0, -1), -0.25), ((1, -1), -0.25)):
            contribs.append((fdi, fdj, fdi + tdi, fdj + tdj, ctE, fsign * w / (h * h)))
    for fsign, fdi, fdj in ((1.0, 0, 0), (-1.0, 0, -1)):  # N faces
        for (tdi, tdj), w in (((0, 1), 1.0), ((0, 0), -1.0)):
            contribs.append((fdi, fdj, fdi + tdi, fdj + tdj, cnN, fsign * w / (h * h)))
        for (tdi, tdj), w in (((1, 0), 0.25), ((1, 1), 0.25), ((-1, 0), -0.25), ((-1, 1), -0.25)):
            contribs.append((fdi, fdj, fdi + tdi, fdj + tdj, ctN, fsign * w / (h * h)))
    eqn = np.arange(N)
    for fdi, fdj, tdi, tdj, arr, scale in contribs:
        ni, nj = ii + tdi, jj + tdj
        ok = (ni >= 0) & (ni < n0) & (nj >= 0) & (nj < n1)
        col = np.full(N, -1, dtype=np.int64)
        col[ok] = node_index[ni[ok], nj[ok]]
        fi, fj = ii + fdi, jj + fdj
        sel = (col >= 0) & (fi >= 0) & (fi < n0) & (fj >= 0) & (fj < n1)
        rows.append(eqn[sel])
        cols.append(col[sel])
        vals.append(arr[fi[sel], fj[sel]] * scale)
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(N, N))


# ---------------------------------------------------------------------------
# conjugate (minimal) graph
# ---------------------------------------------------------------------------

def _node_derivative(u, h, axis):
    """Per-node derivative along axis: central where possible, one-sided
    second order at rims (3-point), one-sided first order as last resort.
    NaN marks missing nodes."""
    up1 = np.full_like(u, np.nan)
    um1 = np.full_like(u, np.nan)
    up2 = np.full_like(u, np.nan)
    um2 = np.full_like(u, np.nan)
    if axis == 0:
        up1[:-1, :] = u[1:, :]
        um1[1:, :] = u[:-1, :]
        up2[:-2, :] = u[2:, :]
        um2[2:, :] = u[:-2, :]
    else:
        up1[:, :-1] = u[:, 1:]
        um1[:, 1:] = u[:, :-1]
        up2[:, :-2] = u[:, 2:]
        um2[:, 2:] = u[:, :-2]
    central = (up1 - um1) / (2 * h)
    fwd2 = (-3 * u + 4 * up1 - up2) / (2 * h)
    bwd2 = (3 * u - 4 * um1 + um2) / (2 * h)
    fwd1 = (up1 - u) / h
    bwd1 = (u - um1) / h
    out = np.where(~np.isnan(central), central,
                   np.where(~np.isnan(fwd2), fwd2,
                            np.where(~np.isnan(bwd2), bwd2,
                                     np.where(~np.isnan(fwd1), fwd1,
                                              np.where(~np.isnan(bwd1), bwd1, 0.0)))))
    return out


def _edge_increments(g: GridGraph, direction):
    """du* on E/N edges via the face-midpoint 1-form.

    direction=+1: maximal -> minimal, sqrt(1-q) du* = u_y dx - u_x dy.
    direction=-1: minimal -> maximal, sqrt(1+q) du = -u*_y dx + u*_x dy.
    Tangential face derivatives average the two endpoint node derivatives
    (equals the interior 4-point average; second-order one-sided at rims,
    keeping the per-edge error O(h^3) uniformly).
    """
    h = g.h
    un = np.where(g.mask, g.u, np.nan)
    C = un
    E = np.full_like(un, np.nan)
    E[:-1, :] = un[1:, :]
    Nn = np.full_like(un, np.nan)
    Nn[:, :-1] = un[:, 1:]
    edge_E = ~np.isnan(C) & ~np.isnan(E)
    edge_N = ~np.isnan(C) & ~np.isnan(Nn)
    duy = _node_derivative(un, h, axis=1)
    dux = _node_derivative(un, h, axis=0)
    duy_E = np.full_like(un, np.nan)
    duy_E[:-1, :] = duy[1:, :]
    dux_N = np.full_like(un, np.nan)
    dux_N[:, :-1] = dux[:, 1:]
    ux_E = np.where(edge_E, (E - C) / h, 0.0)
    uy_E = np.where(edge_E, 0.5 * (duy + duy_E), 0.0)
    uy_N = np.where(edge_N, (Nn - C) / h, 0.0)
    ux_N = np.where(edge_N, 0.5 * (dux + dux_N), 0.0)
    qE = ux_E ** 2 + uy_E ** 2
    qN = ux_N ** 2 + uy_N ** 2
    if direction > 0:
        WE = 1.0 - qE
        WN = 1.0 - qN
        if np.any((WE <= 0) & edge_E) or np.any((WN <= 0) & edge_N):
            raise SingularError("graph reaches |grad u| >= 1; conjugate 1-form undefined")
        dE = np.where(edge_E, uy_E / np.sqrt(np.where(edge_E, WE, 1.0)) * h, np.nan)
        dN = np.where(edge_N, -ux_N / np.sqrt(np.where(edge_N, WN, 1.0)) * h, np.nan)
    else:
        dE = np.where(edge_E, -uy_E / np.sqrt(1.0 + qE) * h, np.nan)
        dN = np.where(edge_N, ux_N / np.sqrt(1.0 + qN) * h, np.nan)
    return dE, dN


def conjugate_graph(g: GridGraph, anchor=None, direction=+1, loop_tol=None):
    """Conjugate function from the discrete 1-form on grid edges.

    direction=+1 maps a maximal graph to its Euclidean minimal conjugate
    (u* solves the minimal surface equation); direction=-1 inverts.  The
    potential is the least-squares solution of du* = d over all grid edges
    (path integration averaged over every path; a single spanning tree
    would accumulate the O(h^3) per-cell loop defects into O(1) noise in
    second differences), normalized to 0 at the anchor node.  Returns
    (GridGraph, loop_residual); raises ExactnessError when the maximum
    cell-loop defect exceeds loop_tol (default 50 h^2), which catches
    genuinely non-integrable inputs.
    """
    if anchor is None:
        ii, jj = np.nonzero(g.mask)
        anchor = (int(ii[len(ii) // 2]), int(jj[len(jj) // 2]))
    if not g.mask[anchor]:
        raise DomainError("anchor outside mask")
    dE, dN = _edge_increments(g, direction)
    # closed-loop defect per cell: E(j) + N(i+1) - E(j+1) - N(i)
    cell_ok = (g.mask[:-1, :-1] & g.mask[1:, :-1] & g.mask[:-1, 1:] & g.mask[1:, 1:])
    loop = dE[:-1, :-1] + dN[1:, :-1] - dE[:-1, 1:] - dN[:-1, :-1]
    loop_res = float(np.abs(loop[cell_ok]).max()) if cell_ok.any() else 0.0
    tol = loop_tol if loop_tol is not None else 50.0 * g.h ** 2
    if loop_res > tol:
        raise ExactnessError(f"conjugate 1-form loop residual {loop_res:.3e} exceeds {tol:.3e}")

    m = g.mask
    idx = -np.ones(m.shape, dtype=np.int64)
    ai, aj = np.nonzero(m)
    idx[ai, aj] = np.arange(len(ai))
    n = len(ai)
    rows, cols, vals, rhs = [], [], [], []
    eid = 0
    for (inc, di, dj) in ((dE, 1, 0), (dN, 0, 1)):
        ei, ej = np.nonzero(~np.isnan(inc) & m)
        keep = (ei + di < m.shape[0]) & (ej + dj < m.shape[1])
        ei, ej = ei[keep], ej[keep]
        keep = m[ei + di, ej + dj]
        ei, ej = ei[keep], ej[keep]
        ne = len(ei)
        rows.append(np.repeat(np.arange(eid, eid + ne), 2))
        cols.append(np.stack([idx[ei + di, ej + dj], idx[ei, ej]], axis=1).ravel())
        vals.append(np.tile([1.0, -1.0], ne))
        rhs.append(inc[ei, ej])
        eid += ne
    B = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(eid, n))
    d = np.concatenate(rhs)
    L = (B.T @ B).tolil()
    b = B.T @ d
    a0 = idx[anchor]
    L[a0, :] = 0.0
    L[a0, a0] = 1.0
    b[a0] = 0.0
    vect = spla.spsolve(L.tocsc(), b)
    ustar = np.full(g.u.shape, np.nan)
    ustar[ai, aj] = vect - vect[a0]
    out = GridGraph(origin=g.origin, h=g.h, u=ustar, mask=m.copy())
    return out, loop_res


# ---------------------------------------------------------------------------
# singular set detection
# ---------------------------------------------------------------------------

@dataclass
class SingularSegment:
    indices: np.ndarray          # (k, 2) node indices
    centroid: np.ndarray         # (3,) lift centroid
    direction: Optional[np.ndarray]   # (3,) unit (Euclidean) direction or None for points
    lightlike_defect: Optional[float]
    fit_residual: Optional[float]
    is_point: bool


@dataclass
class SingularReport:
    nodes: np.ndarray            # (k, 2) all flagged nodes
    segments: list


def detect_singular(g: GridGraph, tol=1e-6) -> SingularReport:
    """Flag nodes with discrete |grad u| >= 1 - tol and fit segments.

    Connected components (8-neighborhood) with at least 4 nodes get a
    total-least-squares 3D line fit of their lifts; the fitted direction's
    |<d,d>| is the lightlike defect (0 for genuine singular segments).
    Smaller components are reported as points.
    """
    ux, uy = g.gradient()
    grad = np.sqrt(ux ** 2 + uy ** 2)
    flag = np.where(g.mask, grad >= 1.0 - tol, False)
    labels, ncomp = ndimage.label(flag, structure=np.ones((3, 3), dtype=int))
    X, Y = g.meshgrid()
    segments = []
    for k in range(1, ncomp + 1):
        ii, jj = np.nonzero(labels == k)
        pts = np.stack([X[ii, jj], Y[ii, jj], g.u[ii, jj]], axis=1)
        centroid = pts.mean(axis=0)
        idx = np.stack([ii, jj], axis=1)
        if len(ii) < 4:
            segments.append(SingularSegment(idx, centroid, None, None, None, True))
            continue
        Q = pts - centroid
        _, svals, vt = np.linalg.svd(Q, full_matrices=False)
        d = vt[0]
        defect = abs(d[0] ** 2 + d[1] ** 2 - d[2] ** 2)
        perp = Q - np.outer(Q @ d, d)
        segments.append(SingularSegment(idx, centroid, d, float(defect),
                                        float(np.linalg.norm(perp, axis=1).max()), False))
    fi, fj = np.nonzero(flag)
    return SingularReport(nodes=np.stack([fi, fj], axis=1), segments=segments)


def acausality_check(g: GridGraph, center):
    """min over active nodes p != center of <lift(p)-lift(c), same>.

    Nonnegative exactly when the graph stays outside the light cone of the
    center's lift (PS graphs over starshaped domains).
    """
    if not g.mask[center]:
        raise DomainError("center outside mask")
    L = g.lift()
    c = L[center]
    d = L - c
    n2 = d[..., 0] ** 2 + d[..., 1] ** 2 - d[..., 2] ** 2
    n2 = np.where(g.mask, n2, np.nan)
    n2[center] = np.nan
    return float(np.nanmin(n2))


# ---------------------------------------------------------------------------
# Li-Wang finiteness arithmetic
# ---------------------------------------------------------------------------

LI_WANG_DIVERGENCE_EPS = 1e-6


def li_wang_bound(eps, with_flag=False):
    """Finiteness bound 8 / (eps * (2 - eps)) for disjointly supported
    maximal graphs with gradient bound 1 - eps; monotone decreasing on
    (0, 1].  Flag marks the divergent regime eps < 1e-6."""
    if not (0.0 < eps <= 1.0):
        raise DomainError("eps must lie in (0, 1]")
    val = 8.0 / (eps * (2.0 - eps))
    if with_flag:
        return val, eps < LI_WANG_DIVERGENCE_EPS
    return val


def disjoint_support_count(graphs, eps):
    """(k, k <= li_wang_bound(eps)); raises OverlapError on mask overlap.

    Empirical consistency witness for the counting bound, never a
    proof.
    """
    k = len(graphs)
    if k == 0:
        return 0, True
    for a in range(k):
        for b in range(a + 1, k):
            if _masks_overlap(graphs[a], graphs[b]):
                raise OverlapError(f"supports of graphs {a} and {b} overlap")
    return k, k <= li_wang_bound(eps)


def _masks_overlap(ga: GridGraph, gb: GridGraph):
    ax, ay = ga.xs(), ga.ys()
    bx, by = gb.xs(), gb.ys()
    if ax[-1] < bx[0] - gb.h or bx[-1] < ax[0] - ga.h:
        return False
    if ay[-1] < by[0] - gb.h or by[-1] < ay[0] - ga.h:
        return False
    # map a's active node coordinates into b's index space
    ai, aj = np.nonzero(ga.mask)
    px = ax[ai]
    py = ay[aj]
    ib = np.rint((px - gb.origin[0]) / gb.h).astype(int)
    jb = np.rint((py - gb.origin[1]) / gb.h).astype(int)
    ok = (ib >= 0) & (ib < gb.nx) & (jb >= 0) & (jb < gb.ny)
    near = (np.abs(gb.origin[0] + ib * gb.h - px) <= 0.5 * min(ga.h, gb.h) + 1e-12) & \
           (np.abs(gb.origin[1] + jb * gb.h - py) <= 0.5 * min(ga.h, gb.h) + 1e-12)
    sel = ok & near
    return bool(np.any(gb.mask[ib[sel], jb[sel]]))
