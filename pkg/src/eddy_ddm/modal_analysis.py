"""Per-mode eigen-analysis of the conductor/insulator iteration on concentric spheres.

The conductor is the unit ball, the insulator the shell ``1 < |x| < R``. Every
quantity depends on the spherical-harmonic order ``n`` only (never on ``m``).

Conductor coefficients are carried in *scaled* form, divided by ``j_n(kappa)``:
``A_C = j_n(kappa) * A_C_scaled`` and ``B_C = j_n(kappa) * B_C_scaled``. All
conductor-side ratios are formed from the scaled values, so the analysis
stays finite at orders where ``j_n(kappa)`` underflows (n of a few hundred
for the usual parameters).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .special_functions import BesselTable, sph_bessel_table

RESONANCE_RTOL = 1e-14


class Variant(str, Enum):
    """Which closed form is used for the modal factors t_c and t_i.

    PAPER_EXACT
        ``n(n+1)`` on the ``beta_C A_I`` term of t_c and
        ``+beta_I sqrt(n(n+1)) A_C`` in t_i.
    ASYMPTOTIC_CONSISTENT
        ``sqrt(n(n+1))`` on the ``beta_C A_I`` term, t_i with ``+beta_I``. This is the
        combination whose large-n limit is independent of ``beta_I``.
    TRACE_CONSISTENT
        Both factors re-derived from the interface trace maps: ``sqrt(n(n+1))``
        in t_c and ``-beta_I sqrt(n(n+1)) A_C`` in t_i. This is what one sweep
        of the spectral iteration actually applies, hence the default.
    """

    PAPER_EXACT = "paper"
    ASYMPTOTIC_CONSISTENT = "asymptotic"
    TRACE_CONSISTENT = "derived"


DEFAULT_VARIANT = Variant.TRACE_CONSISTENT


class ResonantImpedanceError(ArithmeticError):
    """A subdomain problem is singular for mode ``n`` with the chosen impedances."""

    def __init__(self, n: int, side: str):
        super().__init__(f"resonant impedance in the {side} problem at mode n={n}")
        self.n = n
        self.side = side


@dataclass(frozen=True)
class PhysicalParams:
    """Angular frequency, permeability, conductivity and outer radius.

    ``kappa_branch=-1`` selects the non-principal square root of
    ``i omega mu sigma``; results must not depend on it.
    """

    omega: float = math.pi / 4
    mu: float = 1.0
    sigma: float = 1.0
    R: float = 2.0
    kappa_branch: int = 1

    def __post_init__(self):
        for name in ("omega", "mu", "sigma"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v}")
        if not (math.isfinite(self.R) and self.R > 1):
            raise ValueError(f"R must exceed 1 (conductor is the unit ball), got {self.R}")
        if self.kappa_branch not in (1, -1):
            raise ValueError("kappa_branch must be +1 or -1")

    @property
    def kappa(self) -> complex:
        return self.kappa_branch * cmath.sqrt(1j * self.omega * self.mu * self.sigma)

    @property
    def i_omega_mu(self) -> complex:
        return 1j * self.omega * self.mu


@dataclass(frozen=True)
class ImpedanceParams:
    beta_I: complex = 0j
    beta_C: complex = 0j
    tc_variant: Variant = DEFAULT_VARIANT

    def __post_init__(self):
        object.__setattr__(self, "beta_I", complex(self.beta_I))
        object.__setattr__(self, "beta_C", complex(self.beta_C))
        object.__setattr__(self, "tc_variant", Variant(self.tc_variant))


@dataclass(frozen=True)
class ModalCoefficients:
    n: int
    A_I: float
    B_I: float
    A_C: complex
    B_C: complex
    A_C_scaled: complex
    B_C_scaled: complex


@dataclass(frozen=True)
class AmplificationRecord:
    n: int
    t_c: complex
    t_i: complex
    t: complex
    abs_t: float
    asymptote: float
    resonant: bool = False


@dataclass(frozen=True)
class ModalTable:
    """Vectorised coefficients for n = 1..n_max sharing one Bessel table."""

    n: np.ndarray
    A_I: np.ndarray
    B_I: np.ndarray
    A_C_scaled: np.ndarray
    B_C_scaled: np.ndarray
    bessel: BesselTable

    @property
    def root(self) -> np.ndarray:
        """sqrt(n(n+1))."""
        return np.sqrt(self.n * (self.n + 1.0))

    @property
    def j_n(self) -> np.ndarray:
        return self.bessel.values[1:]

    def coefficients(self, n: int) -> ModalCoefficients:
        k = n - 1
        jn = self.j_n[k]
        return ModalCoefficients(
            n=n,
            A_I=float(self.A_I[k]),
            B_I=float(self.B_I[k]),
            A_C=complex(jn * self.A_C_scaled[k]),
            B_C=complex(jn * self.B_C_scaled[k]),
            A_C_scaled=complex(self.A_C_scaled[k]),
            B_C_scaled=complex(self.B_C_scaled[k]),
        )


def modal_table(n_max: int, phys: PhysicalParams) -> ModalTable:
    if n_max < 1:
        raise ValueError(f"modes start at n=1, got n_max={n_max}")
    n = np.arange(1, n_max + 1, dtype=float)
    q = np.exp(-2.0 * n * math.log(phys.R))  # R^{-2n}, underflows gracefully
    root = np.sqrt(n * (n + 1.0))
    kappa = phys.kappa
    bessel = sph_bessel_table(kappa, n_max)
    z_logder = kappa * bessel.log_derivative(np.arange(1, n_max + 1))
    return ModalTable(
        n=n,
        A_I=-n * (1.0 + q),
        B_I=n * (n + 1.0) * (1.0 - q),
        A_C_scaled=-root * (1.0 + z_logder),
        B_C_scaled=-(root ** 3) + 0j,
        bessel=bessel,
    )


def modal_coefficients(n: int, phys: PhysicalParams) -> ModalCoefficients:
    if n < 1:
        raise ValueError(f"modes start at n=1, got n={n}")
    return modal_table(n, phys).coefficients(n)


def _near_zero(den, *parts) -> np.ndarray:
    scale = sum(np.abs(p) for p in parts)
    return np.abs(den) <= RESONANCE_RTOL * scale


def tc_values(table: ModalTable, phys: PhysicalParams, imp: ImpedanceParams):
    """Return (t_c array, resonant mask) over all modes of ``table``."""
    root = table.root
    weight = table.n * (table.n + 1.0) if imp.tc_variant is Variant.PAPER_EXACT else root
    num = table.B_I / root + imp.beta_C * weight * table.A_I
    den = table.A_I + imp.beta_I * table.B_I
    bad = _near_zero(den, table.A_I, imp.beta_I * table.B_I)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = -phys.i_omega_mu * num / den
    t = np.where(bad, np.nan + 0j, t)
    return t, bad


def ti_values(table: ModalTable, phys: PhysicalParams, imp: ImpedanceParams):
    """Return (t_i array, resonant mask) over all modes of ``table``."""
    root = table.root
    sign = -1.0 if imp.tc_variant is Variant.TRACE_CONSISTENT else 1.0
    A, B = table.A_C_scaled, table.B_C_scaled
    num = -B / root + sign * imp.beta_I * root * A
    den = A + imp.beta_C * B
    bad = _near_zero(den, A, imp.beta_C * B)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = num / (phys.i_omega_mu * den)
    t = np.where(bad, np.nan + 0j, t)
    return t, bad


def _single(values_fn, side, n, phys, imp):
    if n < 1:
        raise ValueError(f"modes start at n=1, got n={n}")
    t, bad = values_fn(modal_table(n, phys), phys, imp)
    if bad[-1]:
        raise ResonantImpedanceError(n, side)
    return complex(t[-1])


def t_c(n: int, phys: PhysicalParams, imp: ImpedanceParams) -> complex:
    """Modal factor mapping insulator data g_I to new conductor data g_C."""
    return _single(tc_values, "insulator", n, phys, imp)


def t_i(n: int, phys: PhysicalParams, imp: ImpedanceParams) -> complex:
    """Modal factor mapping conductor data g_C to new insulator data g_I."""
    return _single(ti_values, "conductor", n, phys, imp)


def asymptotic_amplification(n, beta_C) -> float | np.ndarray:
    """Large-n modulus |(1 - n beta_C) / (1 + n beta_C)|."""
    n_arr = np.asarray(n)
    if np.any(n_arr < 1):
        raise ValueError("asymptote defined for n >= 1")
    den = 1.0 + n_arr * beta_C
    if np.any(den == 0):
        raise ZeroDivisionError("1 + n*beta_C vanishes")
    # ratio of moduli rather than modulus of the ratio: exact 1 for imaginary beta_C
    out = np.abs(1.0 - n_arr * beta_C) / np.abs(den)
    return float(out) if out.ndim == 0 else out


def two_sided_asymptote(n, beta_I, beta_C) -> float | np.ndarray:
    """Large-n modulus of the trace-consistent factor.

    Keeps the ``(1 + n beta_I) / (1 - n beta_I)`` term that survives in the
    TRACE_CONSISTENT variant.
    """
    n_arr = np.asarray(n, dtype=float)
    out = asymptotic_amplification(n_arr, beta_C) * np.abs(
        (1.0 + n_arr * beta_I) / (1.0 - n_arr * beta_I)
    )
    return float(out) if np.ndim(out) == 0 else out


def amplification_arrays(table: ModalTable, phys: PhysicalParams, imp: ImpedanceParams):
    """(t_c, t_i, t, resonant) arrays for every mode in ``table``."""
    tc, bad_c = tc_values(table, phys, imp)
    ti, bad_i = ti_values(table, phys, imp)
    return tc, ti, ti * tc, bad_c | bad_i


def _asymptote_or_nan(n: int, beta_C: complex) -> float:
    try:
        return asymptotic_amplification(n, beta_C)
    except ZeroDivisionError:
        return math.nan


def amplification(n: int, phys: PhysicalParams, imp: ImpedanceParams) -> AmplificationRecord:
    tc = t_c(n, phys, imp)
    ti = t_i(n, phys, imp)
    t = ti * tc
    return AmplificationRecord(n, tc, ti, t, abs(t), _asymptote_or_nan(n, imp.beta_C))


def spectrum(n_max: int, phys: PhysicalParams, imp: ImpedanceParams) -> list[AmplificationRecord]:
    """Records for n = 1..n_max; resonant modes are flagged rather than raised."""
    table = modal_table(n_max, phys)
    tc, ti, t, bad = amplification_arrays(table, phys, imp)
    return [
        AmplificationRecord(
            n=k + 1,
            t_c=complex(tc[k]),
            t_i=complex(ti[k]),
            t=complex(t[k]),
            abs_t=float(abs(t[k])),
            asymptote=_asymptote_or_nan(k + 1, imp.beta_C),
            resonant=bool(bad[k]),
        )
        for k in range(n_max)
    ]


def admissible(imp: ImpedanceParams) -> list[str]:
    """Violated well-posedness inequalities; an empty list means admissible."""
    violations = []
    if imp.beta_I.real > 0:
        violations.append("Re beta_I > 0")
    if imp.beta_C.real < 0:
        violations.append("Re beta_C < 0")
    if imp.beta_C.imag > 0:
        violations.append("Im beta_C > 0")
    return violations


def consistency_check(imp: ImpedanceParams) -> bool:
    """Sufficient condition for the impedance conditions to recover the original ones."""
    p = imp.beta_C * imp.beta_I
    return (-p).real >= 0 or p.imag != 0


def surface_curl_curl_eigenvalue(n):
    """Eigenvalue of Curl_G curl_G on the tangential field V_n^m: n(n+1).

    curl_G V = -sqrt(n(n+1)) Y and Curl_G Y = -sqrt(n(n+1)) V.
    """
    n = np.asarray(n, dtype=float)
    return n * (n + 1.0)


def consistency_factor(n, imp: ImpedanceParams):
    """Per-mode factor 1 - beta_C beta_I lambda_n of the mismatch equation."""
    out = 1.0 - imp.beta_C * imp.beta_I * surface_curl_curl_eigenvalue(n)
    return complex(out) if np.ndim(out) == 0 else out
