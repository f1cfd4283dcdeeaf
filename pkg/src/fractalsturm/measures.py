"""Signed measures on [0, 1] built from atoms, step densities and
self-similar parts, plus the adaptive step approximation used to reduce
a general coefficient to a piecewise constant one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ApproximationFailureError, InvalidParametersError
from .selfsim import (
    MonotonePrimitive,
    SelfSimilarParams,
    evaluate,
    jump_atoms,
    junction_gaps,
    support_cells,
)

_TOL = 1e-12


@dataclass(frozen=True)
class StepFunction:
    """Piecewise constant function: values[i] on [breaks[i], breaks[i+1])."""

    breaks: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.breaks, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if b.ndim != 1 or v.ndim != 1 or b.size != v.size + 1:
            raise InvalidParametersError("need len(breaks) == len(values) + 1")
        if np.any(np.diff(b) <= 0):
            raise InvalidParametersError("breaks must be strictly increasing")
        if abs(b[0]) > _TOL or abs(b[-1] - 1.0) > _TOL:
            raise InvalidParametersError("breaks must span [0, 1]")
        object.__setattr__(self, "breaks", b)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, c: float) -> "StepFunction":
        return cls(np.array([0.0, 1.0]), np.array([float(c)]))

    def __call__(self, x):
        idx = np.clip(np.searchsorted(self.breaks, x, side="right") - 1, 0, self.values.size - 1)
        return self.values[idx]

    def integral(self, lo: float = 0.0, hi: float = 1.0) -> float:
        """Exact integral of the step function over [lo, hi]."""
        if hi < lo:
            return -self.integral(hi, lo)
        cuts = np.clip(self.breaks, lo, hi)
        return float(np.sum(self.values * np.diff(cuts)))

    def abs_integral(self) -> float:
        return float(np.sum(np.abs(self.values) * np.diff(self.breaks)))

    def to_json(self) -> dict:
        return {"breaks": self.breaks.tolist(), "values": self.values.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "StepFunction":
        if not isinstance(obj, dict) or not {"breaks", "values"} <= set(obj):
            raise InvalidParametersError("step function JSON needs breaks and values arrays")
        return cls(np.asarray(obj["breaks"], dtype=float), np.asarray(obj["values"], dtype=float))


@dataclass(frozen=True)
class CompositeMeasure:
    """Atoms + step density + scaled self-similar Stieltjes part.

    The self-similar part is the measure scale * dP for a parameter set
    P; it is treated as atomless (its own jumps, if any, are recovered
    explicitly via jump enumeration when needed).  All three parts may
    be present at once and add up.
    """

    atoms: tuple[tuple[float, float], ...] = ()
    density: StepFunction | None = None
    selfsim: tuple[SelfSimilarParams, float] | None = None

    def __post_init__(self):
        cleaned = []
        for pos, w in self.atoms:
            pos, w = float(pos), float(w)
            if pos < -_TOL or pos > 1.0 + _TOL:
                raise InvalidParametersError(f"atom at {pos} outside [0, 1]")
            cleaned.append((min(max(pos, 0.0), 1.0), w))
        cleaned.sort()
        object.__setattr__(self, "atoms", tuple(cleaned))
        if self.selfsim is not None:
            params, scale = self.selfsim
            object.__setattr__(self, "selfsim", (params, float(scale)))

    @classmethod
    def lebesgue(cls, c: float = 1.0) -> "CompositeMeasure":
        return cls(density=StepFunction.constant(c))

    @classmethod
    def from_atoms(cls, atoms) -> "CompositeMeasure":
        return cls(atoms=tuple(atoms))

    @classmethod
    def from_selfsim(cls, params: SelfSimilarParams, scale: float = 1.0) -> "CompositeMeasure":
        return cls(selfsim=(params, scale))

    def is_zero(self) -> bool:
        return (
            not self.atoms
            and (self.density is None or not np.any(self.density.values))
            and self.selfsim is None
        )

    def total_mass(self) -> float:
        m = sum(w for _, w in self.atoms)
        if self.density is not None:
            m += self.density.integral()
        if self.selfsim is not None:
            params, scale = self.selfsim
            m += scale * (params.p1 - params.p0)
        return float(m)

    def total_variation(self, depth: int = 12) -> float:
        """Upper bound on |mu|([0,1]), exact for monotone parts.

        The self-similar part is bounded cellwise at the given depth by
        |weight| * osc(P); for a nondecreasing P this telescopes to the
        exact value.
        """
        tv = sum(abs(w) for _, w in self.atoms)
        if self.density is not None:
            tv += self.density.abs_integral()
        if self.selfsim is not None:
            params, scale = self.selfsim
            gaps = junction_gaps(params)
            if min(params.dprime) >= 0.0 and all(g >= 0.0 for g in gaps):
                # nonnegative measure
                tv += abs(scale) * (params.p1 - params.p0)
            elif any(g != 0.0 for g in gaps):
                # signed jumps: purely atomic when the |d'| sum is
                # contracting, of unbounded variation otherwise
                s = sum(abs(d) for d in params.dprime)
                per_level = sum(abs(g) for g in gaps)
                tv += abs(scale) * per_level / (1.0 - s) if s < 1.0 else np.inf
            else:
                osc = params.osc_bound()
                tv += abs(scale) * sum(abs(c.weight) for c in support_cells(params, depth)) * osc
        return float(tv)

    def cdf(self, x: float, depth: int = 48) -> float:
        """mu([0, x]), atoms at x included; error bounded by the
        self-similar evaluation bound at the given depth."""
        x = float(x)
        total = sum(w for pos, w in self.atoms if pos <= x + _TOL)
        if self.density is not None:
            total += self.density.integral(0.0, x)
        if self.selfsim is not None:
            # right limit of P, so a junction atom at x itself counts
            params, scale = self.selfsim
            total += scale * (evaluate(params, x, depth, side="right")[0] - params.p0)
        return float(total)

    def scaled(self, c: float) -> "CompositeMeasure":
        dens = None
        if self.density is not None:
            dens = StepFunction(self.density.breaks, c * self.density.values)
        ss = None
        if self.selfsim is not None:
            ss = (self.selfsim[0], c * self.selfsim[1])
        return CompositeMeasure(
            atoms=tuple((p, c * w) for p, w in self.atoms), density=dens, selfsim=ss
        )

    def to_json(self):
        if not self.atoms and self.selfsim is None and self.density is not None:
            if self.density.values.size == 1:
                return float(self.density.values[0])
        obj: dict = {}
        if self.atoms:
            obj["atoms"] = [[p, w] for p, w in self.atoms]
        if self.density is not None:
            obj["density"] = self.density.to_json()
        if self.selfsim is not None:
            params, scale = self.selfsim
            obj["selfsim"] = dict(params.to_json(), scale=scale)
        return obj

    @classmethod
    def from_json(cls, obj) -> "CompositeMeasure":
        if isinstance(obj, (int, float)) and not isinstance(obj, bool):
            return cls.lebesgue(float(obj))
        if not isinstance(obj, dict):
            raise InvalidParametersError("measure JSON must be a number or an object")
        atoms = tuple((float(p), float(w)) for p, w in obj.get("atoms", []))
        density = StepFunction.from_json(obj["density"]) if "density" in obj else None
        selfsim = None
        if "selfsim" in obj:
            sub = dict(obj["selfsim"])
            scale = float(sub.pop("scale", 1.0))
            selfsim = (SelfSimilarParams.from_json(sub), scale)
        return cls(atoms=atoms, density=density, selfsim=selfsim)


def common_atoms(mu: CompositeMeasure, nu: CompositeMeasure, tol: float = 1e-12) -> list[float]:
    """Positions carrying an explicit atom of both measures."""
    out = []
    positions = sorted(p for p, _ in nu.atoms)
    for p, _ in mu.atoms:
        idx = np.searchsorted(positions, p)
        for j in (idx - 1, idx):
            if 0 <= j < len(positions) and abs(positions[j] - p) <= tol:
                out.append(p)
                break
    return out


def integrate_against(mu: CompositeMeasure, g, depth: int = 10) -> float:
    """Approximate int g dmu, used by tests as an independent check.

    Atoms are exact; the density part uses the midpoint rule on a
    refinement of its own breaks; the self-similar part uses cell
    midpoints at the given depth, with error at most
    sum |weight| * osc(g over the cell).
    """
    total = sum(w * g(p) for p, w in mu.atoms)
    if mu.density is not None:
        for lo, hi, v in zip(mu.density.breaks[:-1], mu.density.breaks[1:], mu.density.values):
            if v == 0.0:
                continue
            k = max(8, int(np.ceil((hi - lo) * 512)))
            xs = np.linspace(lo, hi, 2 * k + 1)[1::2]
            total += v * (hi - lo) / k * sum(g(x) for x in xs)
    if mu.selfsim is not None:
        params, scale = mu.selfsim
        mass = params.p1 - params.p0
        for pos, jump in jump_atoms(params, depth, include_endpoints=False):
            total += scale * jump * g(pos)
        for c in support_cells(params, depth):
            total += scale * c.weight * mass * g(c.left + 0.5 * c.width)
    return float(total)


def step_approximation(
    f: CompositeMeasure, r: MonotonePrimitive, eps: float, max_levels: int = 60
) -> StepFunction:
    """Piecewise constant surrogate of a nonnegative measure f.

    The partition 0 = z_0 < ... < z_K = 1 is refined greedily at cell
    midpoints until every cell satisfies f(cell) < eps^3 or
    R(z_{k+1}) - R(z_k) < eps^2.  Cells of the second kind keep the cell
    average f(cell) / (z_{k+1} - z_k); the remaining (R-heavy) cells are
    dropped, i.e. the surrogate vanishes there.  Split points are nudged
    off atoms of f so that cell masses are unambiguous.
    """
    if not 0.0 < eps < 1.0:
        raise InvalidParametersError("eps must lie in (0, 1)")
    if any(w < 0 for _, w in f.atoms) or (
        f.density is not None and np.any(f.density.values < 0.0)
    ):
        raise ApproximationFailureError("step approximation needs a nonnegative measure")
    if f.selfsim is not None:
        params, scale = f.selfsim
        if scale < 0.0 or any(d < 0.0 for d in params.dprime):
            raise ApproximationFailureError("step approximation needs a nonnegative measure")

    atom_positions = np.array([p for p, _ in f.atoms])

    def off_atoms(x: float, width: float) -> float:
        step = 1e-3 * width
        for j in range(1, 50):
            if atom_positions.size == 0 or np.min(np.abs(atom_positions - x)) > 1e-13:
                return x
            x += step / j
        raise ApproximationFailureError("could not place a split point off the atoms")

    def cell_mass(a: float, b: float) -> float:
        base = f.cdf(a, 60) if a > 0.0 else 0.0
        return f.cdf(b, 60) - base

    def r_increment(a: float, b: float) -> float:
        return r(b, 60) - r(a, 60)

    cells = [(0.0, 1.0)]
    for _ in range(max_levels):
        refined = []
        dirty = False
        for a, b in cells:
            if cell_mass(a, b) < eps**3 or r_increment(a, b) < eps**2:
                refined.append((a, b))
            else:
                mid = off_atoms(0.5 * (a + b), b - a)
                if not a < mid < b:
                    raise ApproximationFailureError("split point escaped its cell")
                refined.append((a, mid))
                refined.append((mid, b))
                dirty = True
        cells = refined
        if not dirty:
            break
    else:
        raise ApproximationFailureError(f"partition not admissible after {max_levels} levels")

    # keep cells where R moves little, drop the complementary ones:
    # their total mass is < eps^3 each and there are at most eps^-2 of
    # them, so the surrogate converges as eps -> 0
    breaks = np.array([a for a, _ in cells] + [1.0])
    values = np.empty(len(cells))
    for k, (a, b) in enumerate(cells):
        mass = cell_mass(a, b)
        if r_increment(a, b) < eps**2:
            values[k] = mass / (b - a)
        elif mass < eps**3:
            values[k] = 0.0
        else:  # pragma: no cover - excluded by the refinement loop
            raise ApproximationFailureError("inadmissible cell survived refinement")
    return StepFunction(breaks, values)
