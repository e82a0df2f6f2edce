"""Exact spectral simulation of the Jacobi conductor/insulator iteration.

One representative coefficient is kept per order ``n`` (the problem is
degenerate in ``m``); norms weight order ``n`` by its multiplicity ``2n+1``.

Conventions on the interface |x| = 1, normal pointing out of the conductor:

* insulator potential  p = (c r^n + d r^-n) Y_n
    dp/dn                  -> n (c - d) Y_n
    curl_G Curl_G p        -> n(n+1) (c + d) Y_n
    Curl_G p               -> -sqrt(n(n+1)) (c + d) V_n
* conductor field  E = a M_n,  M_n = curl(x j_n(kappa r) Y_n)
    curl E x n             -> a j_n A_C_scaled V_n
    Curl_G(curl E . n)     -> a j_n B_C_scaled V_n
    curl_G E               -> n(n+1) a j_n Y_n
    curl_G(curl E x n)     -> -sqrt(n(n+1)) A_C_scaled a j_n Y_n

The conductor unknown is stored as ``a_scaled = a * j_n(kappa)``, the field
amplitude at the interface, so nothing overflows at high order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import eval_legendre, lpmv

from .modal_analysis import (
    ImpedanceParams,
    ModalTable,
    PhysicalParams,
    RESONANCE_RTOL,
    ResonantImpedanceError,
    modal_table,
)
from .special_functions import sph_bessel_table

_table = lru_cache(maxsize=64)(modal_table)


@dataclass(frozen=True)
class SourceSpec:
    """Outer Dirichlet data p = f on |x| = R, one coefficient per order."""

    f: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.f, dtype=complex).copy()
        if f.ndim != 1 or f.size < 1:
            raise ValueError("source needs at least one mode")
        if not np.all(np.isfinite(f)):
            raise ValueError("source coefficients must be finite")
        f.flags.writeable = False
        object.__setattr__(self, "f", f)

    @property
    def n_max(self) -> int:
        return self.f.size

    @property
    def is_zero(self) -> bool:
        return not np.any(self.f)

    @classmethod
    def zero(cls, n_max: int) -> "SourceSpec":
        return cls(np.zeros(n_max, dtype=complex))

    @classmethod
    def decay(cls, n_max: int, exponent: float = 2.0) -> "SourceSpec":
        n = np.arange(1, n_max + 1, dtype=float)
        return cls((1.0 + n) ** (-exponent))


@dataclass(frozen=True)
class InterfaceState:
    g_C: np.ndarray
    g_I: np.ndarray

    def __post_init__(self):
        g_C = np.asarray(self.g_C, dtype=complex)
        g_I = np.asarray(self.g_I, dtype=complex)
        if g_C.shape != g_I.shape or g_C.ndim != 1:
            raise ValueError("g_C and g_I must be 1-d arrays of equal length")
        object.__setattr__(self, "g_C", g_C)
        object.__setattr__(self, "g_I", g_I)

    @property
    def n_max(self) -> int:
        return self.g_C.size

    @classmethod
    def ones(cls, n_max: int) -> "InterfaceState":
        return cls(np.ones(n_max, dtype=complex), np.ones(n_max, dtype=complex))

    @classmethod
    def zeros(cls, n_max: int) -> "InterfaceState":
        return cls(np.zeros(n_max, dtype=complex), np.zeros(n_max, dtype=complex))

    @classmethod
    def random(cls, n_max: int, seed: int) -> "InterfaceState":
        rng = np.random.default_rng(seed)
        parts = rng.standard_normal((4, n_max))
        return cls(parts[0] + 1j * parts[1], parts[2] + 1j * parts[3])

    def __sub__(self, other: "InterfaceState") -> "InterfaceState":
        return InterfaceState(self.g_C - other.g_C, self.g_I - other.g_I)

    def mode_norms(self) -> np.ndarray:
        return np.hypot(np.abs(self.g_C), np.abs(self.g_I))

    def norm(self) -> float:
        """Euclidean norm with multiplicity weight 2n+1 per order."""
        n = np.arange(1, self.n_max + 1)
        w = np.sqrt(2.0 * n + 1.0) * self.mode_norms()
        if not np.all(np.isfinite(w)):
            return math.inf  # a blown-up state, including inf - inf
        top = w.max(initial=0.0)
        if top == 0:
            return 0.0
        return float(top * np.sqrt(np.sum((w / top) ** 2)))  # scaled against overflow


@dataclass(frozen=True)
class InsulatorModalSolution:
    c: np.ndarray
    d: np.ndarray
    R: float

    def outer_values(self) -> np.ndarray:
        """c R^n + d R^-n, i.e. the Dirichlet data actually met."""
        n = np.arange(1, self.c.size + 1)
        return self.c * self.R ** n + self.d * self.R ** (-n)


@dataclass(frozen=True)
class ConductorModalSolution:
    a_scaled: np.ndarray
    j_n: np.ndarray

    @property
    def a(self) -> np.ndarray:
        """Coefficient of M_n; may overflow to inf where j_n(kappa) underflows."""
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return self.a_scaled / self.j_n


@dataclass
class IterationLog:
    residual: list[float] = field(default_factory=list)
    per_mode_factor: np.ndarray | None = None
    iterations: int = 0
    converged: bool = False
    dominant_mode: int | None = None


def _check_length(n_max: int, *arrays):
    for a in arrays:
        if np.asarray(a).size != n_max:
            raise ValueError(f"expected {n_max} modes, got {np.asarray(a).size}")


def _first_bad(bad: np.ndarray, side: str):
    if np.any(bad):
        raise ResonantImpedanceError(int(np.argmax(bad)) + 1, side)


def insulator_solve(g_I, f: SourceSpec, phys: PhysicalParams,
                    imp: ImpedanceParams) -> InsulatorModalSolution:
    """Harmonic p in the shell with p = f at R and the impedance condition at 1.

    Per mode:  c R^n + d R^-n = f
               n (c - d) + beta_I n(n+1) (c + d) = g_I
    """
    g_I = np.asarray(g_I, dtype=complex)
    _check_length(f.n_max, g_I)
    n = np.arange(1, f.n_max + 1, dtype=float)
    logR = math.log(phys.R)
    inv_Rn = np.exp(-n * logR)
    q = inv_Rn ** 2
    nn1 = n * (n + 1.0)
    # rows scaled by R^-n: c + q d = f R^-n
    m21 = n + imp.beta_I * nn1
    m22 = -n + imp.beta_I * nn1
    det = m22 - q * m21
    _first_bad(np.abs(det) <= RESONANCE_RTOL * (np.abs(m22) + q * np.abs(m21)), "insulator")
    rhs1 = f.f * inv_Rn
    c = (rhs1 * m22 - q * g_I) / det
    d = (g_I - m21 * rhs1) / det
    return InsulatorModalSolution(c, d, phys.R)


def conductor_solve(g_C, phys: PhysicalParams, imp: ImpedanceParams,
                    table: ModalTable | None = None) -> ConductorModalSolution:
    """E = a M_n in the unit ball with the conductor impedance condition."""
    g_C = np.asarray(g_C, dtype=complex)
    table = table or _table(g_C.size, phys)
    A, B = table.A_C_scaled, table.B_C_scaled
    den = A + imp.beta_C * B
    _first_bad(np.abs(den) <= RESONANCE_RTOL * (np.abs(A) + np.abs(imp.beta_C * B)), "conductor")
    return ConductorModalSolution(g_C / den, np.asarray(table.j_n))


def insulator_trace(sol: InsulatorModalSolution, phys: PhysicalParams,
                    imp: ImpedanceParams) -> np.ndarray:
    """V-coefficients of i omega mu Curl_G(p + beta_C dp/dn)."""
    n = np.arange(1, sol.c.size + 1, dtype=float)
    root = np.sqrt(n * (n + 1.0))
    p_trace = sol.c + sol.d
    dn_trace = n * (sol.c - sol.d)
    return phys.i_omega_mu * (-root) * (p_trace + imp.beta_C * dn_trace)


def conductor_trace(sol: ConductorModalSolution, phys: PhysicalParams,
                    imp: ImpedanceParams, table: ModalTable | None = None) -> np.ndarray:
    """Y-coefficients of (1 / i omega mu) curl_G(E + beta_I curl E x n)."""
    table = table or _table(sol.a_scaled.size, phys)
    root = table.root
    curl_g_e = root ** 2 * sol.a_scaled
    curl_g_curl_e = -root * table.A_C_scaled * sol.a_scaled
    return (curl_g_e + imp.beta_I * curl_g_curl_e) / phys.i_omega_mu


def exchange(state: InterfaceState, f: SourceSpec, phys: PhysicalParams,
             imp: ImpedanceParams) -> InterfaceState:
    """One Jacobi sweep: both subdomain solves from ``state``, then the trace maps.

    The sweep is physical, so it ignores ``imp.tc_variant``; it agrees with the
    TRACE_CONSISTENT modal factors.
    """
    _check_length(f.n_max, state.g_C)
    table = _table(f.n_max, phys)
    ins = insulator_solve(state.g_I, f, phys, imp)
    cond = conductor_solve(state.g_C, phys, imp, table)
    return InterfaceState(insulator_trace(ins, phys, imp),
                          conductor_trace(cond, phys, imp, table))


def run(f: SourceSpec, phys: PhysicalParams, imp: ImpedanceParams, tol: float = 1e-6,
        max_iter: int = 1000, init: InterfaceState | None = None,
        factor_sweep: int = 4) -> tuple[InterfaceState, IterationLog]:
    """Iterate ``exchange`` until the weighted successive difference drops below
    ``tol * (1 + |g0|)``.

    Per-mode factors are observed double-step ratios at sweep ``factor_sweep``:
    ``|g^(K)| / |g^(K-2)|`` when f = 0, otherwise the same ratio of successive
    differences (which needs one extra sweep). Non-convergence is reported
    through ``log.converged``, not raised.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    if factor_sweep < 2:
        raise ValueError("factor_sweep must be >= 2")
    g = init if init is not None else InterfaceState.ones(f.n_max)
    _check_length(f.n_max, g.g_C)
    homogeneous = f.is_zero
    threshold = tol * (1.0 + g.norm())
    log = IterationLog()
    snapshots = [g]
    keep = factor_sweep + (1 if homogeneous else 2)

    for k in range(1, max_iter + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            g_new = exchange(g, f, phys, imp)
            res = (g_new - g).norm()
        log.residual.append(res)
        log.iterations = k
        if not math.isfinite(res):
            g = g_new
            break
        if len(snapshots) < keep:
            snapshots.append(g_new)
        g = g_new
        if res < threshold:
            log.converged = True
            break

    log.per_mode_factor = _observed_factors(snapshots, factor_sweep, homogeneous, f.n_max)
    if np.any(np.isfinite(log.per_mode_factor)):
        log.dominant_mode = int(np.nanargmax(log.per_mode_factor)) + 1
    return g, log


def _observed_factors(snaps, K, homogeneous, n_max) -> np.ndarray:
    out = np.full(n_max, np.nan)
    if homogeneous:
        if len(snaps) <= K:
            return out
        num, den = snaps[K].mode_norms(), snaps[K - 2].mode_norms()
    else:
        if len(snaps) <= K + 1:
            return out
        num = (snaps[K + 1] - snaps[K]).mode_norms()
        den = (snaps[K - 1] - snaps[K - 2]).mode_norms()
    ok = den > 0
    out[ok] = num[ok] / den[ok]
    return out


def ddm_solution(state: InterfaceState, f: SourceSpec, phys: PhysicalParams,
                 imp: ImpedanceParams) -> tuple[InsulatorModalSolution, ConductorModalSolution]:
    """Subdomain solutions driven by ``state`` (the DDM iterate's fields)."""
    return insulator_solve(state.g_I, f, phys, imp), conductor_solve(state.g_C, phys, imp)


def monolithic_solve(f: SourceSpec, phys: PhysicalParams
                     ) -> tuple[InsulatorModalSolution, ConductorModalSolution]:
    """Direct coupled solve with the original interface conditions.

    Unknowns (c, d, a_scaled) per mode:
        c + R^-2n d                          = f R^-n
        i omega mu sqrt(n(n+1)) (c + d) + A_C_scaled a_scaled = 0
        n (c - d) - n(n+1) a_scaled / (i omega mu)            = 0
    """
    n_max = f.n_max
    table = _table(n_max, phys)
    n = table.n
    root = table.root
    iwm = phys.i_omega_mu
    inv_Rn = np.exp(-n * math.log(phys.R))
    M = np.zeros((n_max, 3, 3), dtype=complex)
    M[:, 0, 0] = 1.0
    M[:, 0, 1] = inv_Rn ** 2
    M[:, 1, 0] = iwm * root
    M[:, 1, 1] = iwm * root
    M[:, 1, 2] = table.A_C_scaled
    M[:, 2, 0] = n
    M[:, 2, 1] = -n
    M[:, 2, 2] = -(root ** 2) / iwm
    rhs = np.zeros((n_max, 3, 1), dtype=complex)
    rhs[:, 0, 0] = f.f * inv_Rn
    cond = np.linalg.cond(M)
    if np.any(~np.isfinite(cond) | (cond > 1e14)):
        bad = int(np.argmax(~np.isfinite(cond) | (cond > 1e14))) + 1
        raise np.linalg.LinAlgError(f"monolithic system singular at mode n={bad}")
    x = np.linalg.solve(M, rhs)[:, :, 0]
    return (InsulatorModalSolution(x[:, 0], x[:, 1], phys.R),
            ConductorModalSolution(x[:, 2], np.asarray(table.j_n)))


def interface_residuals(ins: InsulatorModalSolution, cond: ConductorModalSolution,
                        phys: PhysicalParams) -> tuple[np.ndarray, np.ndarray]:
    """Relative mismatch of curl E x n = i w mu Curl_G p and dp/dn = curl_G E / (i w mu)."""
    n_max = ins.c.size
    table = _table(n_max, phys)
    n, root = table.n, table.root
    iwm = phys.i_omega_mu
    lhs1 = table.A_C_scaled * cond.a_scaled
    rhs1 = iwm * (-root) * (ins.c + ins.d)
    lhs2 = n * (ins.c - ins.d)
    rhs2 = root ** 2 * cond.a_scaled / iwm

    def rel(a, b):
        scale = np.maximum(np.abs(a), np.abs(b))
        out = np.zeros(a.shape)
        nz = scale > 0
        out[nz] = np.abs(a - b)[nz] / scale[nz]
        return out

    return rel(lhs1, rhs1), rel(lhs2, rhs2)


def _spherical(x):
    x = np.asarray(x, dtype=float)
    if x.shape != (3,):
        raise ValueError("point must be a 3-vector")
    r = float(np.linalg.norm(x))
    cos_t = x[2] / r if r > 0 else 1.0
    phi = math.atan2(x[1], x[0])
    return r, min(1.0, max(-1.0, cos_t)), phi


def _ynorm(n):
    return np.sqrt((2 * n + 1) / (4 * math.pi))


def potential(sol: InsulatorModalSolution, x) -> complex:
    """Truncated p at a point of the insulating shell (m = 0 representatives)."""
    r, cos_t, _ = _spherical(x)
    if not (1.0 - 1e-12 < r <= sol.R * (1 + 1e-12)):
        raise ValueError(f"|x| = {r} lies outside the insulating shell (1, {sol.R}]")
    n = np.arange(1, sol.c.size + 1)
    radial = sol.c * np.exp(n * math.log(r)) + sol.d * np.exp(-n * math.log(r))
    return complex(np.sum(radial * _ynorm(n) * eval_legendre(n, cos_t)))


def electric_field(sol: ConductorModalSolution, x, phys: PhysicalParams) -> np.ndarray:
    """Truncated E = sum a_n M_n at a point of the conductor (m = 0 representatives).

    M_n^0 = -j_n(kappa r) dY_n^0/dtheta e_phi.
    """
    r, cos_t, phi = _spherical(x)
    if r > 1.0 + 1e-12:
        raise ValueError(f"|x| = {r} lies outside the conductor")
    n_max = sol.a_scaled.size
    n = np.arange(1, n_max + 1)
    if r == 0:
        return np.zeros(3, dtype=complex)
    kappa = phys.kappa
    inner = sph_bessel_table(kappa * r, n_max).log_values()[1:]
    outer = sph_bessel_table(kappa, n_max).log_values()[1:]
    with np.errstate(over="ignore", invalid="ignore"):
        ratio = np.exp(inner - outer)  # j_n(kappa r) / j_n(kappa)
    dtheta_y = _ynorm(n) * lpmv(1, n, cos_t)
    e_phi_amp = np.sum(-sol.a_scaled * ratio * dtheta_y)
    e_phi = np.array([-math.sin(phi), math.cos(phi), 0.0])
    return e_phi_amp * e_phi


def field_eval(sol, x, phys: PhysicalParams | None = None):
    """Evaluate p (insulator solution) or E (conductor solution) at ``x``."""
    if isinstance(sol, InsulatorModalSolution):
        return potential(sol, x)
    if isinstance(sol, ConductorModalSolution):
        if phys is None:
            raise ValueError("conductor field evaluation needs the physical parameters")
        return electric_field(sol, x, phys)
    raise TypeError(f"unsupported solution type {type(sol).__name__}")
