"""Self-similar functions on [0, 1].

A function P is self-similar for the data (a_i, d'_i, beta'_i, p0, p1)
when on every cell [alpha_i, alpha_i + a_i] (alpha_i = a_1 + ... +
a_{i-1}) it reproduces a scaled copy of itself:

    P(alpha_i + a_i t) = beta'_i + d'_i P(t),   t in [0, 1],

with boundary values P(0) = p0, P(1) = p1.  When sum_i a_i |d'_i|^2 < 1
such a P exists and is unique in L2.  The classical Cantor ladder is the
case a = (1/3, 1/3, 1/3), d' = (1/2, 0, 1/2).

This module evaluates such functions with certified error bounds,
iterates the substitution operator on piecewise linear seeds, enumerates
cell words, and computes power moments of the induced Stieltjes measure
dP, all of which feed the quadrature rules of the assembly stage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    DegenerateMomentsError,
    DomainError,
    InvalidParametersError,
    ParameterMismatchError,
)

_TOL = 1e-12


def _as_float_tuple(xs) -> tuple[float, ...]:
    return tuple(float(x) for x in xs)


@dataclass(frozen=True)
class SelfSimilarParams:
    """Substitution data (a, d', beta', p0, p1) for one function."""

    a: tuple[float, ...]
    dprime: tuple[float, ...]
    betaprime: tuple[float, ...]
    p0: float = 0.0
    p1: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "a", _as_float_tuple(self.a))
        object.__setattr__(self, "dprime", _as_float_tuple(self.dprime))
        object.__setattr__(self, "betaprime", _as_float_tuple(self.betaprime))
        object.__setattr__(self, "p0", float(self.p0))
        object.__setattr__(self, "p1", float(self.p1))
        n = len(self.a)
        if n < 2:
            raise InvalidParametersError("need at least two cells")
        if len(self.dprime) != n or len(self.betaprime) != n:
            raise InvalidParametersError("a, dprime, betaprime must share length")
        if any(w <= 0.0 for w in self.a):
            raise InvalidParametersError("cell widths must be positive")
        if abs(sum(self.a) - 1.0) > 1e-9:
            raise InvalidParametersError("cell widths must sum to 1")
        # the functional equation evaluated at x = 0 and x = 1 pins the
        # boundary values; inconsistent ones admit no fixed point
        ref = 1e-9 * max(1.0, abs(self.p0), abs(self.p1), max(abs(b) for b in self.betaprime))
        if abs(self.betaprime[0] + self.dprime[0] * self.p0 - self.p0) > ref:
            raise InvalidParametersError("p0 does not solve the corner equation at 0")
        if abs(self.betaprime[-1] + self.dprime[-1] * self.p1 - self.p1) > ref:
            raise InvalidParametersError("p1 does not solve the corner equation at 1")

    @property
    def n(self) -> int:
        return len(self.a)

    @property
    def alpha(self) -> np.ndarray:
        """Left cell endpoints alpha_1 = 0, ..., alpha_n, plus 1."""
        return np.concatenate(([0.0], np.cumsum(self.a)))

    def sup_bound(self) -> float:
        """A bound M with sup |P| <= M, infinite if max |d'| >= 1."""
        dmax = max(abs(d) for d in self.dprime)
        if dmax >= 1.0:
            return math.inf
        bmax = max(abs(b) for b in self.betaprime)
        return max(abs(self.p0), abs(self.p1), bmax / (1.0 - dmax))

    def osc_bound(self) -> float:
        """Bound on the oscillation of P over any subinterval."""
        m = self.sup_bound()
        return 2.0 * m if math.isfinite(m) else math.inf

    def is_continuous(self, tol: float = 1e-9) -> bool:
        """Whether copies match at cell junctions and at 0, 1."""
        if abs(self.betaprime[0] + self.dprime[0] * self.p0 - self.p0) > tol:
            return False
        last = self.betaprime[-1] + self.dprime[-1] * self.p1
        if abs(last - self.p1) > tol:
            return False
        for i in range(self.n - 1):
            left = self.betaprime[i] + self.dprime[i] * self.p1
            right = self.betaprime[i + 1] + self.dprime[i + 1] * self.p0
            if abs(left - right) > tol:
                return False
        return True

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "a": list(self.a),
            "dprime": list(self.dprime),
            "betaprime": list(self.betaprime),
            "p0": self.p0,
            "p1": self.p1,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SelfSimilarParams":
        if not isinstance(obj, dict):
            raise InvalidParametersError("parameter JSON must be an object")
        try:
            params = cls(
                a=obj["a"],
                dprime=obj["dprime"],
                betaprime=obj["betaprime"],
                p0=obj.get("p0", 0.0),
                p1=obj.get("p1", 1.0),
            )
        except KeyError as exc:
            raise InvalidParametersError(f"missing parameter field {exc}") from exc
        if "n" in obj and int(obj["n"]) != params.n:
            raise InvalidParametersError("declared n does not match array lengths")
        return params


def cantor_ladder() -> SelfSimilarParams:
    """The Cantor function: constant 1/2 on the middle third."""
    return SelfSimilarParams(
        a=(1 / 3, 1 / 3, 1 / 3),
        dprime=(0.5, 0.0, 0.5),
        betaprime=(0.0, 0.5, 0.5),
        p0=0.0,
        p1=1.0,
    )


def identity_params(n: int = 2) -> SelfSimilarParams:
    """Parameters whose fixed point is the identity map on [0, 1]."""
    a = (1.0 / n,) * n
    return SelfSimilarParams(
        a=a,
        dprime=a,
        betaprime=tuple(i / n for i in range(n)),
        p0=0.0,
        p1=1.0,
    )


def fixed_point_boundaries(a, dprime, betaprime) -> tuple[float, float]:
    """Boundary values forced by self-consistency at 0 and 1.

    P(0) = beta'_1 + d'_1 P(0) and P(1) = beta'_n + d'_n P(1), solvable
    when d'_1 != 1 and d'_n != 1.
    """
    d0, dn = float(dprime[0]), float(dprime[-1])
    if abs(1.0 - d0) < _TOL or abs(1.0 - dn) < _TOL:
        raise InvalidParametersError("corner scaling equal to 1, boundary values free")
    p0 = float(betaprime[0]) / (1.0 - d0)
    p1 = float(betaprime[-1]) / (1.0 - dn)
    return p0, p1


@dataclass(frozen=True)
class MonotonePrimitive:
    """Nondecreasing self-similar primitive R with R(0)=0, R(1)=1.

    The substitution y = u o R turns a Stieltjes derivative d/dR into a
    plain derivative; weights d_i >= 0 sum to one and the offsets are
    their running sums, which makes R a continuous distribution function.
    """

    params: SelfSimilarParams

    def __post_init__(self):
        p = self.params
        if any(d < 0.0 for d in p.dprime):
            raise InvalidParametersError("monotone primitive needs d_i >= 0")
        if max(p.dprime) >= 1.0:
            raise InvalidParametersError("monotone primitive needs max d_i < 1")
        if abs(sum(p.dprime) - 1.0) > 1e-9:
            raise InvalidParametersError("weights d_i must sum to 1")
        beta = 0.0
        for i in range(p.n):
            if abs(p.betaprime[i] - beta) > 1e-9:
                raise InvalidParametersError("offsets must be running sums of d_i")
            beta += p.dprime[i]
        if abs(p.p0) > _TOL or abs(p.p1 - 1.0) > _TOL:
            raise InvalidParametersError("primitive must run from 0 to 1")

    @classmethod
    def from_weights(cls, a: Sequence[float], d: Sequence[float]) -> "MonotonePrimitive":
        d = _as_float_tuple(d)
        beta = tuple(float(s) for s in np.concatenate(([0.0], np.cumsum(d[:-1]))))
        return cls(SelfSimilarParams(a=a, dprime=d, betaprime=beta, p0=0.0, p1=1.0))

    @classmethod
    def cantor(cls) -> "MonotonePrimitive":
        return cls(cantor_ladder())

    @classmethod
    def identity(cls, n: int = 2) -> "MonotonePrimitive":
        return cls(identity_params(n))

    @property
    def weights(self) -> tuple[float, ...]:
        return self.params.dprime

    def __call__(self, x: float, depth: int = 48) -> float:
        return evaluate(self.params, x, depth)[0]

    def to_json(self) -> dict:
        return self.params.to_json()

    @classmethod
    def from_json(cls, obj: dict) -> "MonotonePrimitive":
        return cls(SelfSimilarParams.from_json(obj))


@dataclass(frozen=True)
class PiecewiseLinear:
    """Continuous piecewise linear function on [0, 1]."""

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if bp.ndim != 1 or bp.shape != vals.shape or bp.size < 2:
            raise InvalidParametersError("breakpoints/values must be equal-length 1d")
        if abs(bp[0]) > _TOL or abs(bp[-1] - 1.0) > _TOL:
            raise InvalidParametersError("breakpoints must span [0, 1]")
        if np.any(np.diff(bp) < -_TOL):
            raise InvalidParametersError("breakpoints must be nondecreasing")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    def __call__(self, x):
        return np.interp(x, self.breakpoints, self.values)

    @classmethod
    def identity(cls) -> "PiecewiseLinear":
        return cls(np.array([0.0, 1.0]), np.array([0.0, 1.0]))


def validate_contraction(r: MonotonePrimitive, p: SelfSimilarParams) -> bool:
    """Existence test sum_i d_i |d'_i|^2 < 1 for the pair (R, P).

    Both parameter sets must share the horizontal cell structure.
    """
    rp = r.params
    if rp.n != p.n or max(abs(x - y) for x, y in zip(rp.a, p.a)) > _TOL:
        raise ParameterMismatchError("cell widths of R and P differ")
    s = sum(d * dp * dp for d, dp in zip(r.weights, p.dprime))
    return s < 1.0


def _locate(alpha: np.ndarray, t: float, side: str = "left") -> int:
    """Cell index for t in (0, 1); `side` picks the cell at exact junctions."""
    i = int(np.searchsorted(alpha, t, side=side)) - 1
    if i < 0:
        i = 0
    elif i > alpha.size - 2:
        i = alpha.size - 2
    return i


def evaluate(
    params: SelfSimilarParams, x: float, depth: int = 48, side: str = "left"
) -> tuple[float, float]:
    """Evaluate P(x) by digit expansion.

    Returns (value, error_bound).  The expansion walks at most `depth`
    cells; it terminates exactly when x hits a cell boundary or a dead
    (d' = 0) cell, otherwise the residual is bounded by the accumulated
    |d'| product times the oscillation bound of P.  Rescaling a digit
    amplifies float error in x by 1/a_i, so the walk also stops once the
    propagated drift could flip a digit, and boundary hits reached after
    noticeable drift are not reported as exact.  `side` selects the cell
    taken at exact junction hits, i.e. which one-sided limit a jump
    evaluates to.
    """
    x = float(x)
    if x < -_TOL or x > 1.0 + _TOL:
        raise DomainError(f"point {x} outside [0, 1]")
    x = min(max(x, 0.0), 1.0)
    alpha = params.alpha
    offset = 0.0
    scale = 1.0
    t = x
    drift = 4.0 * np.finfo(float).eps
    for _ in range(depth):
        if drift >= 0.25:
            break
        exact = 0.0 if drift <= 1e-12 else abs(scale) * params.osc_bound()
        if t <= 0.0:
            return offset + scale * params.p0, exact
        if t >= 1.0:
            return offset + scale * params.p1, exact
        i = _locate(alpha, t, side)
        offset += scale * params.betaprime[i]
        scale *= params.dprime[i]
        if scale == 0.0:
            return offset, exact
        t = (t - alpha[i]) / params.a[i]
        t = min(max(t, 0.0), 1.0)
        drift /= params.a[i]
    mid = 0.5 * (params.p0 + params.p1)
    return offset + scale * mid, abs(scale) * params.osc_bound()


def evaluate_many(params: SelfSimilarParams, xs, depth: int = 48) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    out = np.empty(xs.shape, dtype=float)
    flat = xs.ravel()
    res = out.ravel()
    for k in range(flat.size):
        res[k] = evaluate(params, flat[k], depth)[0]
    return out


def iterate(params: SelfSimilarParams, k: int, seed: PiecewiseLinear | None = None) -> PiecewiseLinear:
    """Apply the substitution operator k times to a piecewise linear seed.

    The seed must satisfy seed(0) = p0, seed(1) = p1 and the parameters
    must be continuity-consistent, otherwise the result would jump and
    leave the piecewise linear class.
    """
    if k < 0:
        raise InvalidParametersError("iteration count must be >= 0")
    if seed is None:
        lo, hi = params.p0, params.p1
        seed = PiecewiseLinear(np.array([0.0, 1.0]), np.array([lo, hi]))
    if not params.is_continuous():
        raise InvalidParametersError("substitution of a continuous seed needs matching junctions")
    if abs(seed.values[0] - params.p0) > 1e-9 or abs(seed.values[-1] - params.p1) > 1e-9:
        raise InvalidParametersError("seed must match boundary values p0, p1")
    bp = seed.breakpoints
    vals = seed.values
    alpha = params.alpha
    for _ in range(k):
        new_bp = [np.array([0.0])]
        new_vals = [np.array([params.p0])]
        for i in range(params.n):
            cell_bp = alpha[i] + params.a[i] * bp
            cell_vals = params.betaprime[i] + params.dprime[i] * vals
            new_bp.append(cell_bp[1:])
            new_vals.append(cell_vals[1:])
        bp = np.concatenate(new_bp)
        vals = np.concatenate(new_vals)
    return PiecewiseLinear(bp, vals)


def moments(params: SelfSimilarParams, order: int) -> np.ndarray:
    """Power moments mu_k = int_0^1 t^k dP(t), k = 0..order.

    mu_0 is the total mass p1 - p0; higher moments follow from the
    substitution identity.  A normalization factor 1 - sum d'_i a_i^k
    within 1e-12 of zero raises DegenerateMomentsError naming the order.
    """
    if order < 0:
        raise InvalidParametersError("order must be >= 0")
    mu = np.empty(order + 1)
    mu[0] = params.p1 - params.p0
    alpha = params.alpha
    for k in range(1, order + 1):
        denom = 1.0 - sum(dp * a**k for dp, a in zip(params.dprime, params.a))
        if abs(denom) <= 1e-12:
            raise DegenerateMomentsError(f"moment normalization vanishes at order {k}")
        rhs = 0.0
        for i in range(params.n):
            inner = 0.0
            for j in range(k):
                inner += math.comb(k, j) * params.a[i] ** j * alpha[i] ** (k - j) * mu[j]
            rhs += params.dprime[i] * inner
        # junction atoms are not images of any copy
        for i, gap in enumerate(junction_gaps(params)):
            rhs += gap * alpha[i + 1] ** k
        mu[k] = rhs / denom
    return mu


def pair_moments(r: MonotonePrimitive, p: SelfSimilarParams, order: int = 2) -> np.ndarray:
    """Mixed moments m_l = int_0^1 R(t)^l dP(t), l = 0..order.

    R and P must share cell widths.  Needed to integrate hat functions
    composed with R against dP on the original axis.
    """
    rp = r.params
    if rp.n != p.n or max(abs(x - y) for x, y in zip(rp.a, p.a)) > _TOL:
        raise ParameterMismatchError("cell widths of R and P differ")
    if order < 0:
        raise InvalidParametersError("order must be >= 0")
    d = r.weights
    beta = rp.betaprime
    m = np.empty(order + 1)
    m[0] = p.p1 - p.p0
    for k in range(1, order + 1):
        denom = 1.0 - sum(d[i] ** k * p.dprime[i] for i in range(p.n))
        if abs(denom) <= 1e-12:
            raise DegenerateMomentsError(f"mixed moment normalization vanishes at order {k}")
        rhs = 0.0
        for i in range(p.n):
            inner = 0.0
            for j in range(k):
                inner += math.comb(k, j) * d[i] ** j * beta[i] ** (k - j) * m[j]
            rhs += p.dprime[i] * inner
        # junction atoms of dP sit where R takes its cumulative values
        for i, gap in enumerate(junction_gaps(p)):
            rhs += gap * beta[i + 1] ** k
        m[k] = rhs / denom
    return m


class Cell(NamedTuple):
    """Depth-m cell: P(left + width*t) = offset + weight*P(t) on [0,1]."""

    left: float
    width: float
    weight: float
    offset: float


def cells(params: SelfSimilarParams, depth: int) -> list[Cell]:
    """All n^depth cells at the given depth, left to right."""
    if depth < 0:
        raise InvalidParametersError("depth must be >= 0")
    if params.n**depth > 4_000_000:
        raise InvalidParametersError("cell enumeration too large; lower the depth")
    out = [Cell(0.0, 1.0, 1.0, 0.0)]
    for _ in range(depth):
        nxt = []
        for c in out:
            for i in range(params.n):
                nxt.append(
                    Cell(
                        c.left + c.width * params.alpha[i],
                        c.width * params.a[i],
                        c.weight * params.dprime[i],
                        c.offset + c.weight * params.betaprime[i],
                    )
                )
        out = nxt
    return out


def support_cells(params: SelfSimilarParams, depth: int) -> list[Cell]:
    """Depth-m cells with nonzero weight, pruning dead subtrees.

    Cells whose word contains a d' = 0 letter carry no dP mass and are
    skipped; the output is ordered left to right.
    """
    if depth < 0:
        raise InvalidParametersError("depth must be >= 0")
    alpha = params.alpha
    out: list[Cell] = []

    def walk(level: int, left: float, width: float, weight: float, offset: float):
        if level == depth:
            out.append(Cell(left, width, weight, offset))
            return
        for i in range(params.n):
            w = weight * params.dprime[i]
            if w == 0.0:
                continue
            walk(
                level + 1,
                left + width * alpha[i],
                width * params.a[i],
                w,
                offset + weight * params.betaprime[i],
            )

    walk(0, 0.0, 1.0, 1.0, 0.0)
    return out


def _one_sided_limits(params: SelfSimilarParams) -> tuple[float, float]:
    """(right limit at 0, left limit at 1) of the fixed point.

    Construction enforces the corner equations, so these coincide with
    the boundary values and P has no atoms at the ends.
    """
    return params.p0, params.p1


def junction_gaps(params: SelfSimilarParams) -> tuple[float, ...]:
    """Copy-value mismatches at the n-1 interior junctions.

    Splitting P into its affinely scaled copies drops the Stieltjes atom
    between the right value of one copy and the left value of the next;
    entry i is that atom at the junction alpha_{i+1}.  All zero exactly
    when the copies tile the increment of P (e.g. cumulative beta').
    """
    bp, dp = params.betaprime, params.dprime
    return tuple(
        (bp[i + 1] + dp[i + 1] * params.p0) - (bp[i] + dp[i] * params.p1)
        for i in range(params.n - 1)
    )


def jump_atoms(params: SelfSimilarParams, depth: int, include_endpoints: bool = True) -> list[tuple[float, float]]:
    """Exact jumps of P at cell junctions down to the given depth.

    Returns (position, jump) pairs sorted by position.  Junction values
    use the true one-sided limits, so each listed jump is exact; only
    junctions deeper than `depth` are omitted.
    """
    r0, l1 = _one_sided_limits(params)
    alpha = params.alpha
    found: dict[float, float] = {}

    def visit(level, left, width, weight):
        for i in range(params.n - 1):
            pos = left + width * alpha[i + 1]
            jump = weight * (
                (params.betaprime[i + 1] + params.dprime[i + 1] * r0)
                - (params.betaprime[i] + params.dprime[i] * l1)
            )
            if jump != 0.0:
                found[pos] = found.get(pos, 0.0) + jump
        if level == depth:
            return
        for i in range(params.n):
            w = weight * params.dprime[i]
            if w == 0.0:
                continue
            visit(level + 1, left + width * alpha[i], width * params.a[i], w)

    if depth < 1:
        raise InvalidParametersError("depth must be >= 1")
    visit(1, 0.0, 1.0, 1.0)
    if include_endpoints:
        j0 = r0 - params.p0
        j1 = params.p1 - l1
        if j0 != 0.0:
            found[0.0] = found.get(0.0, 0.0) + j0
        if j1 != 0.0:
            found[1.0] = found.get(1.0, 0.0) + j1
    return sorted(found.items())
