"""Reduction of measure coefficients to the image axis of a monotone
self-similar primitive R.

The substitution y = u o R maps the singular problem on the x axis to an
equivalent one on the t = R(x) axis whose leading coefficient is
Lebesgue.  Pushing the remaining coefficients through R is exact for
compatible self-similar parts and cellwise exact for step densities:
density mass over a plateau of R collapses to an atom at the plateau
value, mass over a support cell spreads over the image interval.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidParametersError, ParameterMismatchError, UnsupportedConfigurationError
from .measures import CompositeMeasure, StepFunction
from .selfsim import MonotonePrimitive, SelfSimilarParams, evaluate, support_cells

_TOL = 1e-12


def pushforward_params(r: MonotonePrimitive, p: SelfSimilarParams) -> SelfSimilarParams:
    """Parameters of the image function P~ = P o R^{-1}.

    R and P must share cell widths.  Cells where R is flat (d_i = 0)
    vanish from the image axis, so any dP mass there would pile into an
    atom; that case is rejected here and must be handled by the caller
    via explicit atoms.  The surviving cells keep their vertical data
    and acquire widths d_i.
    """
    rp = r.params
    if rp.n != p.n or max(abs(x - y) for x, y in zip(rp.a, p.a)) > _TOL:
        raise ParameterMismatchError("cell widths of R and P differ")
    d = r.weights
    for i in range(p.n):
        if d[i] == 0.0 and p.dprime[i] != 0.0:
            raise UnsupportedConfigurationError(
                f"cell {i}: dP mass sits on a plateau of R (d_i = 0, d'_i != 0)"
            )
    keep = [i for i in range(p.n) if d[i] != 0.0]
    if len(keep) < 2:
        raise UnsupportedConfigurationError("image function needs at least two active cells")
    return SelfSimilarParams(
        a=tuple(d[i] for i in keep),
        dprime=tuple(p.dprime[i] for i in keep),
        betaprime=tuple(p.betaprime[i] for i in keep),
        p0=p.p0,
        p1=p.p1,
    )


def generalized_inverse(r: MonotonePrimitive, t: float, depth: int = 48, iters: int = 80) -> float:
    """Left-continuous inverse inf {x : R(x) >= t} by bisection."""
    t = float(t)
    if t <= 0.0:
        return 0.0
    if t > 1.0 + _TOL:
        raise InvalidParametersError("target outside the range of R")
    if t >= 1.0:
        t = 1.0
    lo, hi = 0.0, 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if r(mid, depth) >= t:
            hi = mid
        else:
            lo = mid
    return hi


def _density_through(r: MonotonePrimitive, density: StepFunction, depth: int):
    """Push a step density through R at the given cell depth.

    Returns (atoms, image_step).  Support cells of R map onto abutting
    image intervals of length = cell weight; gaps (plateaus) map to
    single points.  Cell masses are exact; within a cell the image mass
    is spread uniformly, which is the only approximation.
    """
    cells = support_cells(r.params, depth)
    atoms: list[tuple[float, float]] = []
    img_breaks = [0.0]
    img_values = []

    def plateau(lo: float, hi: float, value_t: float):
        if hi - lo <= 0.0:
            return
        mass = density.integral(lo, hi)
        if mass != 0.0:
            atoms.append((value_t, mass))

    prev_end = 0.0
    prev_img = 0.0
    for c in cells:
        plateau(prev_end, c.left, c.offset)
        mass = density.integral(c.left, c.left + c.width)
        img_breaks.append(prev_img + c.weight)
        img_values.append(mass / c.weight)
        prev_end = c.left + c.width
        prev_img += c.weight
    plateau(prev_end, 1.0, 1.0)
    img_breaks[-1] = 1.0  # guard cumulative rounding
    return atoms, StepFunction(np.asarray(img_breaks), np.asarray(img_values))


def transform_measure(f: CompositeMeasure, r: MonotonePrimitive, depth: int = 8) -> CompositeMeasure:
    """Image measure of f under t = R(x).

    Atoms move to R(x0) keeping their weight.  A compatible self-similar
    part (same cell widths as R, no mass on plateaus) maps exactly to
    the pushforward parameter set; otherwise it is scattered cellwise at
    the given depth.  Step densities map via plateau collapse (exact
    atoms) and per-cell spreading (exact cell masses).
    """
    atoms: list[tuple[float, float]] = [
        (evaluate(r.params, pos, 60)[0], w) for pos, w in f.atoms
    ]
    density_out: StepFunction | None = None
    selfsim_out = None

    if f.density is not None and np.any(f.density.values):
        extra_atoms, density_out = _density_through(r, f.density, depth)
        atoms.extend(extra_atoms)

    if f.selfsim is not None:
        params, scale = f.selfsim
        rp = r.params
        compatible = rp.n == params.n and max(
            abs(x - y) for x, y in zip(rp.a, params.a)
        ) <= _TOL
        if compatible:
            selfsim_out = (pushforward_params(r, params), scale)
        else:
            # incompatible cell structure: scatter cell masses through R
            mass0 = params.p1 - params.p0
            for c in support_cells(params, depth):
                lo_t = evaluate(rp, c.left, 60)[0]
                hi_t = evaluate(rp, c.left + c.width, 60)[0]
                cell_mass = scale * c.weight * mass0
                if cell_mass == 0.0:
                    continue
                atoms.append((0.5 * (lo_t + hi_t), cell_mass))

    atoms.sort()
    merged: list[list[float]] = []
    for pos, w in atoms:
        if merged and pos - merged[-1][0] <= 1e-12:
            merged[-1][1] += w
        else:
            merged.append([pos, w])
    atom_tuple = tuple((p, w) for p, w in merged if w != 0.0)
    return CompositeMeasure(atoms=atom_tuple, density=density_out, selfsim=selfsim_out)
