"""Spherical Bessel functions of the first kind for complex arguments.

Values come from Miller-style downward recurrence carried out on the ratios
``j_n / j_{n-1}`` (a continued fraction), which stays stable when the order
exceeds the argument and never overflows. The ratios are anchored on the
closed forms of ``j_0`` or ``j_1``. Small arguments use the ascending series.

Besides the values and derivatives, a table keeps the ratios themselves so
that callers can form quantities such as ``z j_n'(z) / j_n(z)`` at orders where
``j_n`` itself underflows double precision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SMALL_ARGUMENT = 1e-2
SERIES_REL_TOL = 1e-18


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class BesselTable:
    """j_0..j_N and their derivatives at a single complex argument.

    ``ratios[n]`` holds ``j_n(z) / j_{n-1}(z)`` for ``1 <= n <= N + 1``
    (``ratios[0]`` is unused and set to nan). At ``z = 0`` the ratios are 0.
    """

    z: complex
    max_order: int
    values: np.ndarray
    derivatives: np.ndarray
    ratios: np.ndarray

    def log_derivative(self, n: int | np.ndarray) -> complex | np.ndarray:
        """``j_n'(z) / j_n(z)``, computed from ratios only (no underflow)."""
        n = np.asarray(n)
        return n / self.z - self.ratios[n + 1]

    def log_values(self) -> np.ndarray:
        """Complex logarithms of j_0..j_N, finite even where j_n underflows."""
        logs = np.empty(self.max_order + 1, dtype=complex)
        with np.errstate(divide="ignore"):
            logs[0] = np.log(self.values[0])
            if self.max_order >= 1:
                logs[1:] = logs[0] + np.cumsum(np.log(self.ratios[1:self.max_order + 1]))
        return logs


def _start_order(z: complex, N: int) -> int:
    return N + 1 + max(20, math.ceil(abs(z)) + 20)


def _ratios(z: complex, N: int) -> np.ndarray:
    """Continued-fraction ratios j_n/j_{n-1} for n = 1..N+1."""
    top = _start_order(z, N)
    out = np.full(N + 2, np.nan, dtype=complex)
    r_next = 0j
    for k in range(top, 0, -1):
        denom = (2 * k + 1) / z - r_next
        if denom == 0:
            denom = complex(np.finfo(float).tiny)
        r_next = 1.0 / denom
        if k <= N + 1:
            out[k] = r_next
    return out


def _series_values(z: complex, N: int) -> np.ndarray:
    """Ascending series of j_0..j_N, each truncated at relative term 1e-18."""
    out = np.empty(N + 1, dtype=complex)
    w = -0.5 * z * z
    prefactor = 1.0 + 0j
    for n in range(N + 1):
        if n > 0:
            prefactor *= z / (2 * n + 1)
        term = 1.0 + 0j
        total = 1.0 + 0j
        k = 0
        while True:
            k += 1
            term *= w / (k * (2 * n + 2 * k + 1))
            total += term
            if abs(term) <= SERIES_REL_TOL * abs(total):
                break
        out[n] = prefactor * total
    return out


def sph_bessel_table(z: complex, N: int) -> BesselTable:
    """Tabulate j_n(z) and j_n'(z) for n = 0..N.

    Parameters
    ----------
    z : complex
        Argument. Must be finite.
    N : int
        Highest order, ``N >= 0``.
    """
    z = complex(z)
    if N < 0:
        raise ValueError(f"max order must be >= 0, got {N}")
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError(f"argument must be finite, got {z}")

    if z == 0:
        values = np.zeros(N + 1, dtype=complex)
        values[0] = 1.0
        derivs = np.zeros(N + 1, dtype=complex)
        if N >= 1:
            derivs[1] = 1.0 / 3.0
        ratios = np.zeros(N + 2, dtype=complex)
        ratios[0] = np.nan
        return BesselTable(z, N, _frozen(values), _frozen(derivs), _frozen(ratios))

    ratios = _ratios(z, N)
    if abs(z) < SMALL_ARGUMENT:
        values = _series_values(z, N)
    else:
        values = np.empty(N + 1, dtype=complex)
        j0 = np.sin(z) / z
        values[0] = j0
        if N >= 1:
            j1 = np.sin(z) / (z * z) - np.cos(z) / z
            # anchor on whichever closed form is better conditioned here
            if abs(z) >= 0.5 and abs(j1) > abs(j0):
                values[1] = j1
            else:
                values[1] = j0 * ratios[1]
            if N >= 2:
                values[2:] = values[1] * np.cumprod(ratios[2:N + 1])

    # j_n' = (n/z) j_n - j_{n+1}
    n = np.arange(N + 1)
    j_next = np.empty(N + 1, dtype=complex)
    j_next[:-1] = values[1:]
    j_next[-1] = values[-1] * ratios[N + 1]
    derivs = (n / z) * values - j_next
    return BesselTable(z, N, _frozen(values), _frozen(derivs), _frozen(ratios))


def sph_bessel_asymptotic(z: complex, n: int) -> complex:
    """Leading large-order approximation (1/sqrt(2 pi n)) (e z / 2n)^n.

    Diagnostics only; never used inside the modal formulas.
    """
    if n < 1:
        raise ValueError(f"asymptotic form needs n >= 1, got {n}")
    if z == 0:
        raise ValueError("asymptotic form needs z != 0")
    return complex((math.e * complex(z) / (2 * n)) ** n / math.sqrt(2 * math.pi * n))
