"""Grid search with box refinement for the impedance coefficients."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .modal_analysis import (
    ImpedanceParams,
    PhysicalParams,
    Variant,
    DEFAULT_VARIANT,
    admissible,
    amplification_arrays,
    consistency_check,
    modal_table,
)


class Objective(str, Enum):
    MAX_ABS_T = "max"
    MEAN_ABS_T = "mean"


@dataclass(frozen=True)
class SearchSpec:
    """Bounds are (lo, hi) pairs for Re/Im of beta_I and beta_C.

    An axis with lo == hi contributes a single value; other axes get
    ``resolution`` equispaced values.
    """

    re_beta_I: tuple[float, float] = (-0.1, 0.0)
    im_beta_I: tuple[float, float] = (0.0, 0.0)
    re_beta_C: tuple[float, float] = (0.0, 0.2)
    im_beta_C: tuple[float, float] = (0.0, 0.0)
    resolution: int = 21
    n_range: tuple[int, int] = (1, 200)
    objective: Objective = Objective.MAX_ABS_T
    refine_rounds: int = 0
    variant: Variant = DEFAULT_VARIANT

    def __post_init__(self):
        for name in ("re_beta_I", "im_beta_I", "re_beta_C", "im_beta_C"):
            lo, hi = getattr(self, name)
            if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
                raise ValueError(f"bad bounds for {name}: {(lo, hi)}")
            object.__setattr__(self, name, (float(lo), float(hi)))
        if self.resolution < 2:
            raise ValueError("resolution must be >= 2")
        n_min, n_max = self.n_range
        if n_min < 1 or n_max < n_min:
            raise ValueError(f"bad mode range {self.n_range}")
        if self.refine_rounds < 0:
            raise ValueError("refine_rounds must be >= 0")
        object.__setattr__(self, "objective", Objective(self.objective))
        object.__setattr__(self, "variant", Variant(self.variant))

    @property
    def axes(self):
        return (self.re_beta_I, self.im_beta_I, self.re_beta_C, self.im_beta_C)


@dataclass(frozen=True)
class GridRow:
    round: int
    beta_I: complex
    beta_C: complex
    objective: float
    admissible: bool
    consistent: bool


@dataclass
class SearchResult:
    beta_I: complex | None
    beta_C: complex | None
    objective: float
    admissible: bool
    consistent: bool
    evaluated: int
    incumbents: list[float] = field(default_factory=list)
    grid: list[GridRow] = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.beta_I is not None


class _Evaluator:
    def __init__(self, phys: PhysicalParams, n_range, kind: Objective, variant: Variant):
        self.phys = phys
        self.n_min, self.n_max = n_range
        self.kind = Objective(kind)
        self.variant = Variant(variant)
        self.table = modal_table(self.n_max, phys)

    def __call__(self, beta_I: complex, beta_C: complex) -> float:
        imp = ImpedanceParams(beta_I, beta_C, self.variant)
        _, _, t, bad = amplification_arrays(self.table, self.phys, imp)
        sl = slice(self.n_min - 1, self.n_max)
        if np.any(bad[sl]):
            return math.inf
        mod = np.abs(t[sl])
        return float(mod.max() if self.kind is Objective.MAX_ABS_T else mod.mean())


def objective(imp: ImpedanceParams, phys: PhysicalParams, n_range=(1, 200),
              kind: Objective = Objective.MAX_ABS_T) -> float:
    """max or mean of |t_n| over ``n_range``; +inf if any mode is resonant."""
    return _Evaluator(phys, n_range, kind, imp.tc_variant)(imp.beta_I, imp.beta_C)


def _axis(lo: float, hi: float, resolution: int) -> np.ndarray:
    return np.array([lo]) if lo == hi else np.linspace(lo, hi, resolution)


def _key(obj: float, beta_I: complex, beta_C: complex):
    return (obj, abs(beta_C), abs(beta_I))


def scan(spec: SearchSpec, phys: PhysicalParams) -> SearchResult:
    """Evaluate the grid, keep admissible and consistent points, refine around the best.

    Each refinement round shrinks every axis to a quarter of its width,
    recentred on the incumbent and kept inside the previous box.
    """
    evaluate = _Evaluator(phys, spec.n_range, spec.objective, spec.variant)
    box = list(spec.axes)
    best = None
    result = SearchResult(None, None, math.inf, False, False, 0)

    for rnd in range(spec.refine_rounds + 1):
        axes = [_axis(lo, hi, spec.resolution) for lo, hi in box]
        for rI, iI, rC, iC in itertools.product(*axes):
            bI, bC = complex(rI, iI), complex(rC, iC)
            imp = ImpedanceParams(bI, bC, spec.variant)
            ok_adm = not admissible(imp)
            ok_con = consistency_check(imp)
            val = evaluate(bI, bC)
            result.grid.append(GridRow(rnd, bI, bC, val, ok_adm, ok_con))
            result.evaluated += 1
            if ok_adm and ok_con and math.isfinite(val):
                cand = _key(val, bI, bC)
                if best is None or cand < best[0]:
                    best = (cand, bI, bC)
        if best is None:
            break
        result.incumbents.append(best[0][0])
        box = [_shrink(lo, hi, centre) for (lo, hi), centre in
               zip(box, (best[1].real, best[1].imag, best[2].real, best[2].imag))]

    if best is not None:
        result.objective, result.beta_I, result.beta_C = best[0][0], best[1], best[2]
        result.admissible = result.consistent = True
    return result


def _shrink(lo: float, hi: float, centre: float) -> tuple[float, float]:
    half = (hi - lo) / 8.0
    new_lo, new_hi = centre - half, centre + half
    if new_lo < lo:
        new_lo, new_hi = lo, lo + 2 * half
    if new_hi > hi:
        new_lo, new_hi = hi - 2 * half, hi
    return new_lo, new_hi
