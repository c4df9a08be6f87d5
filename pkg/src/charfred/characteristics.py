"""Transport operators along characteristic lines.

Row i of the system reads, along its characteristic line
xi -> (xi, y + beta_i (xi - x), t + alpha_i (xi - x)),

    d/dxi [ (A u)_i ] + gamma_i (A u)_i = f_i,

so with w = A u each row is an independent scalar first-order equation.
Rows 1..k integrate from the inflow face x = 0, rows k+1..n from x = 1;
the sign of the second family follows from the equation and its end
condition (w vanishes at x = 1, so w(x) = -int_x^1 ...).

Quadrature: composite Simpson on the half-cell subdivision xi_q = q/(2 nx).
Grid-sampled integrands are read through trilinear interpolation (the
half-cell refinement then integrates the stored field exactly); when the
right-hand side is known in closed form its expressions can be sampled
exactly instead, which makes the rule exact on cubics. The inner
exponential weight accumulates int gamma by trapezoid on the same
subdivision, once per target.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .expressions import Expression, Num, Neg, Pi, evaluate_on, is_literal_zero
from .gridfield import Grid, GridFunction, interpolate_many, sup_norm
from .gridfield import _SNAP  # shared node-snap width
from .system import SystemSpec

_DEFAULT_STEP_EPS = 1e-12


class SingularBlockError(ValueError):
    """A coefficient block is numerically singular."""


@dataclass(frozen=True)
class BlockAdjugates:
    """Determinants and adjugates of the three blocks, plus the joint
    form for rows 1..k (kept for cross-checking the two inversion routes)."""

    det1: float
    det2: float
    det3: float
    adj1: np.ndarray
    adj2: np.ndarray
    adj3: np.ndarray
    det0: float
    adj0: np.ndarray

    @classmethod
    def from_spec(cls, spec: SystemSpec) -> "BlockAdjugates":
        dets, adjs = [], []
        for name, a in (("a1", spec.a1), ("a2", spec.a2), ("a3", spec.a3)):
            det = float(np.linalg.det(a))
            if abs(det) <= 1e-12:
                raise SingularBlockError(f"|det {name}| = {abs(det):.3e}")
            adj = det * np.linalg.inv(a)
            scale = max(1.0, abs(det)) * max(1.0, float(np.abs(a).max()))
            if np.abs(a @ adj - det * np.eye(a.shape[0])).max() > 1e-12 * scale:
                raise SingularBlockError(f"adjugate identity failed for {name}")
            dets.append(det)
            adjs.append(adj)
        k = spec.k
        a0 = np.zeros((k, k))
        a0[:spec.l, :spec.l] = spec.a1
        a0[spec.l:, spec.l:] = spec.a2
        det0 = float(np.linalg.det(a0))
        adj0 = det0 * np.linalg.inv(a0)
        return cls(dets[0], dets[1], dets[2], adjs[0], adjs[1], adjs[2],
                   det0, adj0)

    def block_items(self, spec: SystemSpec):
        return ((slice(0, spec.l), self.adj1, self.det1),
                (slice(spec.l, spec.k), self.adj2, self.det2),
                (slice(spec.k, spec.n), self.adj3, self.det3))


def default_step(spec: SystemSpec, grid: Grid) -> float:
    """Directional-difference step small against every grid spacing."""
    mb = float(np.abs(spec.beta).max(initial=0.0))
    ma = float(np.abs(spec.alpha).max(initial=0.0))
    return min(1.0 / (4 * grid.nx),
               grid.period_y / (4 * grid.ny * mb + _DEFAULT_STEP_EPS),
               grid.period_t / (4 * grid.nt * ma + _DEFAULT_STEP_EPS))


def _split_index(u: np.ndarray):
    nearest = np.rint(u)
    u = np.where(np.abs(u - nearest) < _SNAP, nearest, u)
    base = np.floor(u)
    return base.astype(np.int64), u - base


def _shift_slices(stack: np.ndarray, dy_idx: np.ndarray,
                  dt_idx: np.ndarray) -> np.ndarray:
    """Sample stack[b, q] at (y_j + dy, t_k + dt), uniform shift per layer q.

    stack is (B, L, ny, nt); dy_idx, dt_idx are per-layer shifts in index
    units. Equivalent to trilinear interpolation restricted to the layer.
    """
    B, L, ny, nt = stack.shape
    jy, fy = _split_index(dy_idx)
    jt, ft = _split_index(dt_idx)
    iy0 = (np.arange(ny)[None, :] + jy[:, None]) % ny
    iy1 = (iy0 + 1) % ny
    a0 = np.take_along_axis(stack, iy0[None, :, :, None], axis=2)
    a1 = np.take_along_axis(stack, iy1[None, :, :, None], axis=2)
    wy = fy[None, :, None, None]
    sy = a0 * (1.0 - wy) + a1 * wy
    it0 = (np.arange(nt)[None, :] + jt[:, None]) % nt
    it1 = (it0 + 1) % nt
    b0 = np.take_along_axis(sy, it0[None, :, None, :], axis=3)
    b1 = np.take_along_axis(sy, it1[None, :, None, :], axis=3)
    wt = ft[None, :, None, None]
    return b0 * (1.0 - wt) + b1 * wt


def _simpson_weights(count: int, h: float) -> np.ndarray:
    if count < 3:
        return np.zeros(count)
    w = np.ones(count)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (h / 3.0)


def _const_value(e: Expression):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Pi):
        return float(np.pi)
    if isinstance(e, Neg):
        inner = _const_value(e.arg)
        return None if inner is None else -inner
    return None


def solve_transport_stack(spec: SystemSpec, grid: Grid, stack: np.ndarray,
                          cache: BlockAdjugates | None = None,
                          rhs_exprs=None) -> np.ndarray:
    """Batched explicit inverse; stack is (B, n, nx+1, ny, nt).

    With rhs_exprs given (closed forms of the single field in the batch),
    integrand values are exact expression samples instead of interpolated
    grid reads; the batch must then have size 1.
    """
    nx, ny, nt = grid.nx, grid.ny, grid.nt
    n, k = spec.n, spec.k
    cache = cache or BlockAdjugates.from_spec(spec)
    if rhs_exprs is not None and stack.shape[0] != 1:
        raise ValueError("closed-form right-hand sides need a batch of one")
    h2 = 1.0 / (2 * nx)
    nq = 2 * nx + 1
    xsq = np.arange(nq) * h2
    ys = grid.ys()[None, :, None]
    ts = grid.ts()[None, None, :]
    w = np.zeros_like(stack)
    for i in range(n):
        beta = float(spec.beta[i])
        alpha = float(spec.alpha[i])
        gam = spec.gamma[i]
        gamma_zero = is_literal_zero(gam)
        gamma_const = _const_value(gam)
        if rhs_exprs is None:
            comp = stack[:, i]
            refined = np.empty((stack.shape[0], nq, ny, nt))
            refined[:, 0::2] = comp
            refined[:, 1::2] = 0.5 * (comp[:, :-1] + comp[:, 1:])
        forward = i < k
        targets = range(1, nx + 1) if forward else range(0, nx)
        for ix in targets:
            q0, q1 = (0, 2 * ix) if forward else (2 * ix, nq - 1)
            xiq = xsq[q0:q1 + 1]
            d = xiq - ix / nx
            if rhs_exprs is not None:
                Yl = ys + beta * d[:, None, None]
                Tl = ts + alpha * d[:, None, None]
                F = evaluate_on(rhs_exprs[i], xiq[:, None, None], Yl, Tl)[None]
            else:
                F = _shift_slices(refined[:, q0:q1 + 1],
                                  beta * d * ny / grid.period_y,
                                  alpha * d * nt / grid.period_t)
            if gamma_zero:
                EF = F
            elif gamma_const is not None:
                EF = np.exp(gamma_const * d)[None, :, None, None] * F
            else:
                Yl = ys + beta * d[:, None, None]
                Tl = ts + alpha * d[:, None, None]
                gv = evaluate_on(gam, xiq[:, None, None], Yl, Tl)
                segs = 0.5 * h2 * (gv[:-1] + gv[1:])
                zero = np.zeros((1, ny, nt))
                if forward:
                    tail = np.cumsum(segs[::-1], axis=0)[::-1]
                    G = np.concatenate([-tail, zero], axis=0)
                else:
                    G = np.concatenate([zero, np.cumsum(segs, axis=0)], axis=0)
                EF = np.exp(G) * F
            acc = np.einsum("q,bqjk->bjk", _simpson_weights(d.size, h2), EF)
            w[:, i, ix] = acc if forward else -acc
    u = np.empty_like(w)
    for sl, adj, det in cache.block_items(spec):
        u[:, sl] = np.einsum("ij,bj...->bi...", adj, w[:, sl]) / det
    u[:, :k, 0] = 0.0
    u[:, k:, nx] = 0.0
    return u


def solve_transport(spec: SystemSpec, f: GridFunction,
                    cache: BlockAdjugates | None = None,
                    rhs_exprs=None) -> GridFunction:
    """Solve the uncoupled system row by row along characteristics.

    Returns u with (A u)_i the integrated right-hand side of row i and
    the inflow rows zeroed exactly on their faces.
    """
    out = solve_transport_stack(spec, f.grid, f.values[None], cache, rhs_exprs)
    return GridFunction(f.grid, out[0])


def apply_transport(spec: SystemSpec, u: GridFunction,
                    step: float | None = None) -> GridFunction:
    """Forward operator: directional differences plus the gamma term.

    Central differences along each row's line direction, one sided on the
    faces x = 0 and x = 1.
    """
    grid = u.grid
    s = default_step(spec, grid) if step is None else float(step)
    if s <= 0 or s > 1.0 / (2 * grid.nx):
        raise ValueError("step must be positive and at most half a cell")
    nx, ny, nt = grid.nx, grid.ny, grid.nt
    X = np.broadcast_to(grid.xs()[:, None, None], (nx + 1, ny, nt))
    Y = np.broadcast_to(grid.ys()[None, :, None], (nx + 1, ny, nt))
    T = np.broadcast_to(grid.ts()[None, None, :], (nx + 1, ny, nt))
    A = spec.full_matrix()
    Au = np.einsum("ij,j...->i...", A, u.values)
    out = np.empty_like(u.values)
    for i in range(spec.n):
        beta = float(spec.beta[i])
        alpha = float(spec.alpha[i])
        plus = interpolate_many(u, X[:nx] + s, Y[:nx] + beta * s,
                                T[:nx] + alpha * s)
        minus = interpolate_many(u, X[1:] - s, Y[1:] - beta * s,
                                 T[1:] - alpha * s)
        dd = np.empty_like(u.values)
        dd[:, 1:nx] = (plus[:, 1:] - minus[:, :nx - 1]) / (2 * s)
        dd[:, 0] = (plus[:, 0] - u.values[:, 0]) / s
        dd[:, nx] = (u.values[:, nx] - minus[:, nx - 1]) / s
        gam = spec.gamma[i]
        if is_literal_zero(gam):
            gterm = 0.0
        else:
            gterm = evaluate_on(gam, X, Y, T) * Au[i]
        out[i] = np.einsum("j,j...->...", A[i], dd) + gterm
    return GridFunction(grid, out)


def sample_coupling(spec: SystemSpec, grid: Grid) -> dict:
    """Node values of the nonzero coupling entries, keyed by (i, j)."""
    X = grid.xs()[:, None, None]
    Y = grid.ys()[None, :, None]
    T = grid.ts()[None, None, :]
    out = {}
    for i in range(spec.n):
        for j in range(spec.n):
            e = spec.b[i][j]
            if not is_literal_zero(e):
                out[(i, j)] = evaluate_on(e, X, Y, T)
    return out


def apply_coupling_stack(spec: SystemSpec, grid: Grid, stack: np.ndarray,
                         coupling: dict | None = None) -> np.ndarray:
    if coupling is None:
        coupling = sample_coupling(spec, grid)
    out = np.zeros_like(stack)
    for (i, j), vals in coupling.items():
        out[:, i] += vals * stack[:, j]
    return out


def apply_coupling(spec: SystemSpec, u: GridFunction,
                   coupling: dict | None = None) -> GridFunction:
    """Multiply pointwise by the coupling matrix b."""
    out = apply_coupling_stack(spec, u.grid, u.values[None], coupling)
    return GridFunction(u.grid, out[0])


def residual_sup(spec: SystemSpec, u: GridFunction, f: GridFunction,
                 step: float | None = None) -> float:
    """sup norm of (transport + coupling) u - f on the nodes."""
    lhs = apply_transport(spec, u, step) + apply_coupling(spec, u)
    return sup_norm(lhs - f)
