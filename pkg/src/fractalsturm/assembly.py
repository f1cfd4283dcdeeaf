"""Tridiagonal pencil assembly.

The quadratic forms

    a[u] = (1/r_mass) int u'(t)^2 dt + int u^2 dq~ + v0 u(0)^2 + v1 u(1)^2
    b[u] = int u^2 dp~

are restricted to hat functions on a mesh that contains every atom,
every density breakpoint and every self-similar cell endpoint of the
working depth, so all measure integrals below are exact per cell.  The
result is a symmetric tridiagonal pencil (A, B); Dirichlet ends are
eliminated.

Two direct entry points avoid the explicit change of variable when the
problem comes as a pair (R, P) on the original axis: one for exactly
self-similar R (hat pullbacks integrate against dP via mixed moments
int R^l dP) and one for R a finite substitution iterate (hat pullbacks
are affine on cells of depth >= k and integrate via plain moments).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from ._kernels import min_pivot_ratio
from .errors import (
    InvalidParametersError,
    ResolventPoleError,
    UnsupportedConfigurationError,
)
from .measures import CompositeMeasure
from .selfsim import (
    MonotonePrimitive,
    SelfSimilarParams,
    jump_atoms,
    junction_gaps,
    moments,
    pair_moments,
    support_cells,
)

_TOL = 1e-12


@dataclass(frozen=True)
class BoundaryCondition:
    """Separated conditions at the two ends.

    None marks a Dirichlet end; a float v is the Robin coefficient in
    the boundary form v * u(end)^2 (v = 0 is Neumann).
    """

    left: float | None
    right: float | None

    @classmethod
    def dirichlet(cls) -> "BoundaryCondition":
        return cls(None, None)

    @classmethod
    def neumann(cls) -> "BoundaryCondition":
        return cls(0.0, 0.0)

    @classmethod
    def robin(cls, v0: float, v1: float) -> "BoundaryCondition":
        return cls(float(v0), float(v1))


def boundary_data(u_matrix) -> BoundaryCondition:
    """Boundary condition encoded by a unitary 2x2 matrix U.

    The condition reads V (U - I) = -i (U + I) on the boundary trace
    vector; a diagonal entry 1 forces Dirichlet at that end, otherwise
    the Robin coefficient is v_j = -i (u + 1) / (u - 1), which is real
    for |u| = 1.  Non-diagonal U couples the two ends and is rejected.
    """
    u = np.asarray(u_matrix, dtype=complex)
    if u.shape != (2, 2):
        raise InvalidParametersError("boundary matrix must be 2x2")
    if np.linalg.norm(u.conj().T @ u - np.eye(2)) > 1e-10:
        raise InvalidParametersError("boundary matrix must be unitary")
    if abs(u[0, 1]) > 1e-10 or abs(u[1, 0]) > 1e-10:
        raise UnsupportedConfigurationError("coupled boundary conditions not supported")

    def side(uj: complex) -> float | None:
        if abs(uj - 1.0) <= 1e-10:
            return None
        v = -1j * (uj + 1.0) / (uj - 1.0)
        if abs(v.imag) > 1e-8:
            raise InvalidParametersError("boundary coefficient came out non-real")
        return float(v.real)

    return BoundaryCondition(side(u[0, 0]), side(u[1, 1]))


@dataclass(frozen=True)
class PencilDiscretization:
    """Symmetric tridiagonal pencil (A, B) over hat functions.

    nodes lists the full mesh; the arrays hold the reduced pencil after
    eliminating Dirichlet ends, and free_start tells how many leading
    nodes were dropped (0 or 1).
    """

    nodes: np.ndarray
    a_diag: np.ndarray
    a_off: np.ndarray
    b_diag: np.ndarray
    b_off: np.ndarray
    free_start: int
    constrained: tuple[int, ...]

    @property
    def n_free(self) -> int:
        return int(self.a_diag.size)

    def free_index(self, node_idx: int) -> int | None:
        """Reduced index of a mesh node, None if it was eliminated."""
        if node_idx in self.constrained:
            return None
        return node_idx - self.free_start

    def node_index(self, x: float, tol: float = 1e-9) -> int:
        j = int(np.searchsorted(self.nodes, x))
        for cand in (j - 1, j):
            if 0 <= cand < self.nodes.size and abs(self.nodes[cand] - x) <= tol:
                return cand
        raise InvalidParametersError(f"no mesh node at {x}")

    def dense(self) -> tuple[np.ndarray, np.ndarray]:
        n = self.n_free
        a = np.diag(self.a_diag).astype(float)
        b = np.diag(self.b_diag).astype(float)
        idx = np.arange(n - 1)
        a[idx, idx + 1] = a[idx + 1, idx] = self.a_off
        b[idx, idx + 1] = b[idx + 1, idx] = self.b_off
        return a, b

    def scaled(self, c: float) -> "PencilDiscretization":
        return PencilDiscretization(
            self.nodes,
            c * self.a_diag,
            c * self.a_off,
            c * self.b_diag,
            c * self.b_off,
            self.free_start,
            self.constrained,
        )

    def triplet_text(self, which: str = "A") -> str:
        """Banded triplet dump 'row col value' for debugging."""
        if which not in ("A", "B"):
            raise InvalidParametersError("which must be 'A' or 'B'")
        diag = self.a_diag if which == "A" else self.b_diag
        off = self.a_off if which == "A" else self.b_off
        lines = []
        for i in range(diag.size):
            lines.append(f"{i} {i} {diag[i]:.17g}")
            if i + 1 < diag.size:
                lines.append(f"{i} {i + 1} {off[i]:.17g}")
                lines.append(f"{i + 1} {i} {off[i]:.17g}")
        return "\n".join(lines) + "\n"


def _dedupe(xs: np.ndarray, tol: float = 1e-13) -> np.ndarray:
    xs = np.sort(xs)
    keep = [xs[0]]
    for x in xs[1:]:
        if x - keep[-1] > tol:
            keep.append(x)
    keep[0] = 0.0
    keep[-1] = 1.0
    return np.asarray(keep)


def _mesh_nodes(p: CompositeMeasure, q: CompositeMeasure, depth: int) -> np.ndarray:
    cand = [np.array([0.0, 1.0])]
    has_selfsim = False
    has_density = False
    for mu in (p, q):
        if mu.selfsim is not None:
            has_selfsim = True
            params = mu.selfsim[0]
            cells = support_cells(params, depth)
            ends = np.empty(2 * len(cells))
            for k, c in enumerate(cells):
                ends[2 * k] = c.left
                ends[2 * k + 1] = c.left + c.width
            cand.append(ends)
            branching = sum(1 for dp in params.dprime if dp != 0.0)
            if branching <= 1:
                jump_depth = min(depth, 48)
            else:
                jump_depth = min(depth, int(np.log(4096.0) / np.log(branching)))
            jumps = jump_atoms(params, max(1, jump_depth), include_endpoints=False)
            if len(jumps) > 4096:
                # cap the mesh size; dropped atoms still get lumped in-cell
                jumps.sort(key=lambda pw: -abs(pw[1]))
                jumps = jumps[:4096]
            if jumps:
                cand.append(np.array([pos for pos, _ in jumps]))
        if mu.atoms:
            cand.append(np.array([pos for pos, _ in mu.atoms]))
        if mu.density is not None and np.any(mu.density.values):
            has_density = True
            cand.append(mu.density.breaks)
    if has_density or not has_selfsim:
        # uniform background grid; kept moderate when self-similar cell
        # endpoints already populate the mesh
        m = min(depth, 10) if has_selfsim else depth
        cand.append(np.linspace(0.0, 1.0, 2**m + 1))
    return _dedupe(np.concatenate(cand))


class _Accumulator:
    def __init__(self, nodes: np.ndarray):
        self.nodes = nodes
        self.diag = np.zeros(nodes.size)
        self.off = np.zeros(nodes.size - 1)

    def add_atom(self, pos: float, weight: float):
        j = int(np.searchsorted(self.nodes, pos))
        for cand in (j - 1, j):
            if 0 <= cand < self.nodes.size and abs(self.nodes[cand] - pos) <= 1e-12:
                self.diag[cand] += weight
                return
        # point mass between nodes: stamp the exact hat-function products
        j = int(np.clip(j - 1, 0, self.nodes.size - 2))
        al = (self.nodes[j + 1] - pos) / (self.nodes[j + 1] - self.nodes[j])
        self.diag[j] += weight * al * al
        self.diag[j + 1] += weight * (1.0 - al) * (1.0 - al)
        self.off[j] += weight * al * (1.0 - al)

    def add_density(self, density):
        mids = 0.5 * (self.nodes[:-1] + self.nodes[1:])
        vals = density(mids)
        h = np.diff(self.nodes)
        self.diag[:-1] += vals * h / 3.0
        self.diag[1:] += vals * h / 3.0
        self.off += vals * h / 6.0

    def add_selfsim(self, params: SelfSimilarParams, scale: float, depth: int, extra: int = 30):
        mu = moments(params, 2)
        nodes = self.nodes
        gaps = junction_gaps(params)

        def place(left: float, width: float, weight: float, level: int):
            j = int(np.clip(np.searchsorted(nodes, left, side="right") - 1, 0, nodes.size - 2))
            if left >= nodes[j] - 1e-12 and left + width <= nodes[j + 1] + 1e-12:
                # the cell sits inside one mesh interval: the copy moments
                # carry its full Stieltjes content, interior jumps included
                xl, xr = nodes[j], nodes[j + 1]
                h = xr - xl
                al = (xr - left) / h
                bl = -width / h
                ar = (left - xl) / h
                br = width / h
                w = scale * weight
                self.diag[j] += w * (al * al * mu[0] + 2 * al * bl * mu[1] + bl * bl * mu[2])
                self.diag[j + 1] += w * (ar * ar * mu[0] + 2 * ar * br * mu[1] + br * br * mu[2])
                self.off[j] += w * (al * ar * mu[0] + (al * br + ar * bl) * mu[1] + bl * br * mu[2])
                return
            if level < depth + extra:
                # splitting into copies loses the junction atoms between
                # neighbouring copy values; emit them explicitly
                for i in range(params.n):
                    if i > 0 and gaps[i - 1] != 0.0:
                        self.add_atom(
                            left + width * params.alpha[i], scale * weight * gaps[i - 1]
                        )
                    wi = weight * params.dprime[i]
                    if wi == 0.0:
                        continue
                    place(left + width * params.alpha[i], width * params.a[i], wi, level + 1)
                return
            # unresolvable straddle at the maximum depth: lump the remaining
            # (vanishingly small) cell mass at its midpoint
            mid = left + 0.5 * width
            al = (nodes[j + 1] - mid) / (nodes[j + 1] - nodes[j])
            w = scale * weight * mu[0]
            self.diag[j] += w * al * al
            self.diag[j + 1] += w * (1 - al) * (1 - al)
            self.off[j] += w * al * (1 - al)

        place(0.0, 1.0, 1.0, 0)

    def add_measure(self, mu: CompositeMeasure, depth: int):
        for pos, w in mu.atoms:
            self.add_atom(pos, w)
        if mu.density is not None and np.any(mu.density.values):
            self.add_density(mu.density)
        if mu.selfsim is not None:
            self.add_selfsim(mu.selfsim[0], mu.selfsim[1], depth)


def _finalize(
    nodes: np.ndarray,
    a_diag: np.ndarray,
    a_off: np.ndarray,
    b_diag: np.ndarray,
    b_off: np.ndarray,
    bc: BoundaryCondition,
) -> PencilDiscretization:
    n = nodes.size
    constrained = []
    if bc.left is None:
        constrained.append(0)
    else:
        a_diag[0] += bc.left
    if bc.right is None:
        constrained.append(n - 1)
    else:
        a_diag[-1] += bc.right
    lo = 1 if bc.left is None else 0
    hi = n - 1 if bc.right is None else n
    if hi - lo < 1:
        raise InvalidParametersError("no free nodes left after constraints")
    return PencilDiscretization(
        nodes=nodes,
        a_diag=np.ascontiguousarray(a_diag[lo:hi]),
        a_off=np.ascontiguousarray(a_off[lo : hi - 1]),
        b_diag=np.ascontiguousarray(b_diag[lo:hi]),
        b_off=np.ascontiguousarray(b_off[lo : hi - 1]),
        free_start=lo,
        constrained=tuple(constrained),
    )


def assemble(
    r_mass: float,
    q: CompositeMeasure | float,
    p: CompositeMeasure,
    bc: BoundaryCondition,
    depth: int = 8,
) -> PencilDiscretization:
    """Assemble the pencil for -(1/r_mass) u'' + q u = lam p u on [0,1].

    q may be a plain number c, read as c * Lebesgue.  p must be nonzero.
    """
    if isinstance(q, (int, float)):
        q = CompositeMeasure.lebesgue(float(q)) if q else CompositeMeasure()
    if r_mass <= 0.0:
        raise InvalidParametersError("total r mass must be positive")
    if p.is_zero():
        raise InvalidParametersError("weight measure p is zero")

    nodes = _mesh_nodes(p, q, depth)
    h = np.diff(nodes)
    stiff = 1.0 / (r_mass * h)
    a_diag = np.zeros(nodes.size)
    a_diag[:-1] += stiff
    a_diag[1:] += stiff
    a_off = -stiff

    qa = _Accumulator(nodes)
    qa.add_measure(q, depth)
    a_diag += qa.diag
    a_off = a_off + qa.off

    pa = _Accumulator(nodes)
    pa.add_measure(p, depth)
    return _finalize(nodes, a_diag, a_off, pa.diag, pa.off, bc)


def _walk_segments(
    p: SelfSimilarParams,
    depth: int,
    t_factor,
) -> list[tuple[float, float]]:
    """Depth-first pass emitting (t_length, mass_weight) leaves.

    t_factor(level, i) is the horizontal shrink of letter i at a given
    level (1-based).  Letters with zero shrink must carry no dP mass
    (otherwise an atom would appear on the image axis); massless
    subtrees with positive shrink collapse to single resistor segments.
    """
    if any(abs(g) > _TOL for g in junction_gaps(p)):
        raise UnsupportedConfigurationError(
            "dP carries atoms at cell junctions; assemble from the composite measure instead"
        )
    segments: list[tuple[float, float]] = []

    def walk(level: int, tprod: float, mass: float):
        if level > depth:
            segments.append((tprod, mass))
            return
        for i in range(p.n):
            tf = t_factor(level, i)
            m2 = mass * p.dprime[i]
            if tf == 0.0:
                if m2 != 0.0:
                    raise UnsupportedConfigurationError(
                        f"cell letter {i}: dP mass sits on a plateau of R"
                    )
                continue
            tp2 = tprod * tf
            if m2 == 0.0:
                segments.append((tp2, 0.0))
            else:
                walk(level + 1, tp2, m2)

    walk(1, 1.0, 1.0)
    return segments


def _assemble_from_segments(
    segments: list[tuple[float, float]],
    quad: np.ndarray,
    r_mass: float,
    bc: BoundaryCondition,
    mass_scale: float = 1.0,
) -> PencilDiscretization:
    # merge consecutive massless segments (exact series condensation)
    merged: list[list[float]] = []
    for ln, mass in segments:
        if mass == 0.0 and merged and merged[-1][1] == 0.0:
            merged[-1][0] += ln
        else:
            merged.append([ln, mass])
    k = len(merged)
    nodes = np.empty(k + 1)
    nodes[0] = 0.0
    np.cumsum([ln for ln, _ in merged], out=nodes[1:])
    nodes[-1] = 1.0

    a_diag = np.zeros(k + 1)
    a_off = np.zeros(k)
    b_diag = np.zeros(k + 1)
    b_off = np.zeros(k)
    for j, (ln, mass) in enumerate(merged):
        s = 1.0 / (r_mass * ln)
        a_diag[j] += s
        a_diag[j + 1] += s
        a_off[j] -= s
        if mass != 0.0:
            w = mass_scale * mass
            b_diag[j] += w * quad[0]
            b_diag[j + 1] += w * quad[2]
            b_off[j] += w * quad[1]
    return _finalize(nodes, a_diag, a_off, b_diag, b_off, bc)


def assemble_selfsimilar_pair(
    r: MonotonePrimitive,
    p: SelfSimilarParams,
    bc: BoundaryCondition,
    depth: int,
    r_mass: float = 1.0,
    p_scale: float = 1.0,
) -> PencilDiscretization:
    """Direct assembly for dr = dR, dp = p_scale * dP, q = 0.

    Works on the t = R(x) axis without forming the image measure: on
    every depth-m cell the pulled-back hats are (1 - R, R) in the local
    coordinate, so dP integrates them through the mixed moments
    int R^l dP.
    """
    rp = r.params
    m = pair_moments(r, p, 2)
    quad = np.array([m[0] - 2 * m[1] + m[2], m[1] - m[2], m[2]])
    segs = _walk_segments(p, depth, lambda level, i: rp.dprime[i])
    return _assemble_from_segments(segs, quad, r_mass, bc, p_scale)


def assemble_iterated_pair(
    r_base: MonotonePrimitive,
    k: int,
    p: SelfSimilarParams,
    bc: BoundaryCondition,
    depth: int,
    r_mass: float = 1.0,
    p_scale: float = 1.0,
) -> PencilDiscretization:
    """Direct assembly for R the k-th substitution iterate (identity seed).

    R is then affine on every cell of depth >= k, with slope products
    d'_i for the first k letters and a_i afterwards, so dP integrates
    the pulled-back hats through the plain moments of P.  Requires
    depth >= k.
    """
    if k < 0:
        raise InvalidParametersError("iteration count must be >= 0")
    if depth < k:
        raise InvalidParametersError("depth must be at least the iteration count")
    rp = r_base.params
    if rp.n != p.n or max(abs(x - y) for x, y in zip(rp.a, p.a)) > _TOL:
        raise InvalidParametersError("cell widths of R and P differ")
    mu = moments(p, 2)
    quad = np.array([mu[0] - 2 * mu[1] + mu[2], mu[1] - mu[2], mu[2]])
    segs = _walk_segments(
        p, depth, lambda level, i: rp.dprime[i] if level <= k else rp.a[i]
    )
    return _assemble_from_segments(segs, quad, r_mass, bc, p_scale)


def resolvent_sandwich(
    disc: PencilDiscretization, positions, lam: float, weights=None
) -> np.ndarray:
    """Matrix of the resolvent evaluated between atom sites.

    Entry (i, j) is e_i^T (A - lam B)^{-1} e_j over the hat coefficients
    at the given node positions; a position eliminated by a Dirichlet
    condition contributes a zero row and column.  Raises
    ResolventPoleError when lam is (numerically) in the spectrum.
    """
    positions = list(positions)
    k = len(positions)
    free = []
    for pos in positions:
        free.append(disc.free_index(disc.node_index(pos)))
    n = disc.n_free
    ab = np.zeros((3, n))
    ab[0, 1:] = disc.a_off - lam * disc.b_off
    ab[1, :] = disc.a_diag - lam * disc.b_diag
    ab[2, :-1] = disc.a_off - lam * disc.b_off
    rhs = np.zeros((n, k))
    for col, fi in enumerate(free):
        if fi is not None:
            rhs[fi, col] = 1.0
    scale = np.max(np.abs(ab))
    try:
        sol = solve_banded((1, 1), ab, rhs)
    except np.linalg.LinAlgError as exc:
        raise ResolventPoleError(f"spectral parameter {lam} is a pole") from exc
    if not np.all(np.isfinite(sol)):
        raise ResolventPoleError(f"spectral parameter {lam} is a pole")
    residual = np.max(np.abs(_tri_apply(ab, sol) - rhs))
    if residual > 1e-6 * max(scale, 1.0) * max(np.max(np.abs(sol)), 1.0):
        raise ResolventPoleError(f"solve at {lam} lost all accuracy (near pole)")
    # sandwich entries can vanish at a pole (green function zeros), so
    # probe the conditioning with an independent right hand side
    probe = np.random.default_rng(0).normal(size=n)
    probe /= np.linalg.norm(probe)
    cond_est = np.linalg.norm(solve_banded((1, 1), ab, probe)) * scale
    if cond_est > 1e11:
        raise ResolventPoleError(f"spectral parameter {lam} is numerically at an eigenvalue")
    out = np.zeros((k, k))
    for col, fi in enumerate(free):
        if fi is None:
            continue
        for row, fj in enumerate(free):
            if fj is not None:
                out[row, col] = sol[fj, col]
    out = 0.5 * (out + out.T)
    if weights is not None:
        w = np.asarray(weights, dtype=float)
        out = out * w[np.newaxis, :]
    return out


def _tri_apply(ab: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Apply the banded (1,1) matrix stored LAPACK-style to columns x."""
    n = ab.shape[1]
    y = ab[1, :, np.newaxis] * x
    y[:-1] += ab[0, 1:, np.newaxis] * x[1:]
    y[1:] += ab[2, :-1, np.newaxis] * x[:-1]
    return y


def positivity_scan(disc: PencilDiscretization, xi_grid, margin: float = 1e-13) -> float | None:
    """First shift xi with A - xi B positive definite, else None.

    Positive definiteness is read off the LDL^T pivots: all positive
    with relative magnitude above `margin`.
    """
    for xi in xi_grid:
        neg, min_rel = min_pivot_ratio(
            disc.a_diag, disc.a_off, disc.b_diag, disc.b_off, float(xi)
        )
        if neg == 0 and min_rel > margin:
            return float(xi)
    return None


def default_shift_grid() -> np.ndarray:
    """Shift candidates used when no reference shift is supplied."""
    mags = np.geomspace(1e-6, 1e8, 29)
    return np.concatenate(([0.0], -mags, mags))
