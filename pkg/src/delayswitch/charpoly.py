"""Characteristic quasi-polynomials ``W(lam) = p(lam) + q1(lam) e^{-lam tau} + q2(lam) e^{-2 lam tau}``."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np
from numpy.polynomial import polynomial as P

from .model import DelaySystem, Placement


def _trim(c) -> tuple[float, ...]:
    c = [float(x) + 0.0 for x in c]
    while len(c) > 1 and c[-1] == 0.0:
        c.pop()
    return tuple(c) if c else (0.0,)


@dataclass(frozen=True)
class QuasiPolynomial:
    """Coefficients are dense and ascending: ``p[k]`` multiplies ``lam**k``."""

    p: tuple[float, ...]
    q1: tuple[float, ...]
    q2: tuple[float, ...]
    placement: Placement = Placement.NONE
    # largest |a_kl| of the source system; 0 when built by hand
    scale: float = 0.0

    @property
    def degree(self) -> int:
        return len(self.p) - 1

    @property
    def has_q1(self) -> bool:
        return any(c != 0.0 for c in self.q1)

    @property
    def has_q2(self) -> bool:
        return any(c != 0.0 for c in self.q2)

    def coefficient_scale(self) -> float:
        """Sum of absolute values of all non-leading coefficients."""
        return float(sum(abs(c) for c in self.p[:-1]) + sum(abs(c) for c in self.q1)
                     + sum(abs(c) for c in self.q2))

    def __call__(self, lam, tau: float):
        return evaluate(self, lam, tau)


def _bimul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros((a.shape[0] + b.shape[0] - 1, a.shape[1] + b.shape[1] - 1))
    for i, j in zip(*np.nonzero(a)):
        out[i:i + b.shape[0], j:j + b.shape[1]] += a[i, j] * b
    return out


def _biadd(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros((max(a.shape[0], b.shape[0]), max(a.shape[1], b.shape[1])))
    out[:a.shape[0], :a.shape[1]] += a
    out[:b.shape[0], :b.shape[1]] += b
    return out


def _char_entries(sys: DelaySystem) -> list[list[np.ndarray]]:
    # entry[k][l][i, j] multiplies s**i * lam**j, with s = exp(-lam*tau)
    a0 = sys.undelayed_part()
    a1 = sys.delayed_part()
    n = a0.shape[0]
    rows = []
    for k in range(n):
        row = []
        for l in range(n):
            e = np.zeros((2, 2))
            e[0, 0] = -a0[k, l]
            e[1, 0] = -a1[k, l]
            if k == l:
                e[0, 1] = 1.0
            row.append(e)
        rows.append(row)
    return rows


def _sign(perm) -> int:
    s = 1
    perm = list(perm)
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                s = -s
    return s


def quasi_polynomial(sys: DelaySystem) -> QuasiPolynomial:
    """``det(lam I - A0 - A1 e^{-lam tau})`` grouped by powers of the exponential."""
    m = _char_entries(sys)
    n = len(m)
    total = np.zeros((1, 1))
    for perm in permutations(range(n)):
        term = np.ones((1, 1)) * _sign(perm)
        for k, l in enumerate(perm):
            term = _bimul(term, m[k][l])
        total = _biadd(total, term)
    rows = [total[i] if i < total.shape[0] else np.zeros(1) for i in range(3)]
    if total.shape[0] > 3 and np.any(total[3:] != 0.0):
        raise AssertionError("exponential order above 2 cannot arise from one delay in a 2x2/3x3 system")
    scale = max(sys.matrix.max_norm(), abs(sys.placement.a13))
    return QuasiPolynomial(_trim(rows[0]), _trim(rows[1]), _trim(rows[2]), sys.placement.kind, scale)


def evaluate(w: QuasiPolynomial, lam, tau: float):
    """``W(lam; tau)``; ``lam`` may be a scalar or an array."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    lam = np.asarray(lam, dtype=complex)
    s = np.exp(-lam * tau)
    out = P.polyval(lam, w.p) + P.polyval(lam, w.q1) * s + P.polyval(lam, w.q2) * s * s
    return out[()] if out.ndim == 0 else out


def derivative(w: QuasiPolynomial, lam, tau: float):
    """``dW/dlam`` at fixed ``tau``."""
    lam = np.asarray(lam, dtype=complex)
    s = np.exp(-lam * tau)
    dp = P.polyval(lam, P.polyder(w.p))
    q1 = P.polyval(lam, w.q1)
    q2 = P.polyval(lam, w.q2)
    out = (dp + (P.polyval(lam, P.polyder(w.q1)) - tau * q1) * s
           + (P.polyval(lam, P.polyder(w.q2)) - 2.0 * tau * q2) * s * s)
    return out[()] if out.ndim == 0 else out


def omega_ceiling(w: QuasiPolynomial) -> float:
    """Upper bound on ``|lam|`` for roots with ``Re lam >= 0``.

    ``2 (1 + max|a_kl|) n`` dominates the Fujiwara bound of the majorant
    polynomial for n = 2, 3; the coefficient-based bound is folded in for
    hand-built quasi-polynomials without a recorded scale.
    """
    n = w.degree
    mags = np.zeros(n)
    for c in (w.p, w.q1, w.q2):
        for k, v in enumerate(c[:n]):
            mags[k] += abs(v)
    fujiwara = 2.0 * max([mags[n - 1 - j] ** (1.0 / (j + 1)) for j in range(n)] + [0.0])
    return max(2.0 * (1.0 + w.scale) * n, fujiwara, 1.0)


def tau_zero_polynomial(w: QuasiPolynomial) -> tuple[float, ...]:
    """``p + q1 + q2``: the ordinary characteristic polynomial at zero delay."""
    return _trim(P.polyadd(P.polyadd(w.p, w.q1), w.q2))


def tau_zero_roots(w: QuasiPolynomial) -> np.ndarray:
    return P.polyroots(tau_zero_polynomial(w))
