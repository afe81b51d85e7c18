"""Domain types for planar and triadic linear interaction systems with one delay."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

# Relative tolerance below which trace/determinant count as zero.
MARGINAL_TOL = 1e-9


class NonGenericError(ValueError):
    """Input sits on a degenerate boundary where switch counting is undefined."""


class DimensionError(ValueError):
    """Matrix dimension does not match what the placement or operation needs."""


class SingularSystemError(ValueError):
    """Stationarity conditions have no unique solution."""


@dataclass(frozen=True)
class InteractionMatrix:
    """Reaction coefficients ``a_kl``.

    Planar matrices carry ``a11, a12, a21, a22``; a triad additionally carries
    ``a23, a32, a33`` (``a13 = a31 = 0``: the first and third actors do not
    interact directly).
    """

    a11: float
    a12: float
    a21: float
    a22: float
    a23: float | None = None
    a32: float | None = None
    a33: float | None = None

    def __post_init__(self):
        triad = (self.a23, self.a32, self.a33)
        if any(v is None for v in triad) and not all(v is None for v in triad):
            raise DimensionError("triad block needs all of a23, a32, a33")
        for v in self.coefficients:
            if not math.isfinite(v):
                raise ValueError(f"non-finite coefficient {v!r}")

    @classmethod
    def from_sequence(cls, values: Sequence[float]) -> "InteractionMatrix":
        vals = [float(v) for v in values]
        if len(vals) not in (4, 7):
            raise DimensionError(f"expected 4 or 7 coefficients, got {len(vals)}")
        return cls(*vals)

    @property
    def dimension(self) -> int:
        return 2 if self.a33 is None else 3

    @property
    def coefficients(self) -> tuple[float, ...]:
        """[a11, a12, a21, a22] or [a11, a12, a21, a22, a23, a32, a33]."""
        base = (self.a11, self.a12, self.a21, self.a22)
        if self.a33 is None:
            return base
        return base + (self.a23, self.a32, self.a33)

    def entry(self, k: int, l: int) -> float:
        """1-based matrix entry; absent triad links are zero."""
        return float(self.as_array()[k - 1, l - 1])

    def as_array(self) -> np.ndarray:
        if self.dimension == 2:
            return np.array([[self.a11, self.a12], [self.a21, self.a22]], dtype=float)
        return np.array(
            [
                [self.a11, self.a12, 0.0],
                [self.a21, self.a22, self.a23],
                [0.0, self.a32, self.a33],
            ],
            dtype=float,
        )

    def max_norm(self) -> float:
        return max(abs(v) for v in self.coefficients)

    def transpose(self) -> "InteractionMatrix":
        if self.dimension != 2:
            raise DimensionError("transpose is only defined here for planar matrices")
        return InteractionMatrix(self.a11, self.a21, self.a12, self.a22)


@dataclass(frozen=True)
class GoalModel:
    """Relaxation toward ideal states plus attraction toward the partner."""

    c: float
    d: float
    e: float
    f: float
    Rstar: float = 0.0
    Jstar: float = 0.0

    def __post_init__(self):
        for v in (self.c, self.d, self.e, self.f, self.Rstar, self.Jstar):
            if not math.isfinite(v):
                raise ValueError(f"non-finite parameter {v!r}")


class Placement(enum.Enum):
    """Which reaction terms carry the common delay."""

    NONE = "none"
    OWN = "own"
    CROSS = "cross"
    ROW_R = "row_r"
    COL_R = "col_r"
    DIAGONAL = "diagonal"
    ANTI_DIAGONAL = "anti_diagonal"
    THREE_OWN_LAST = "three_own_last"
    THREE_CROSS_LAST = "three_cross_last"
    FULL = "full"
    MIXED_SELF = "mixed_self"
    PURE_CROSS = "pure_cross"
    TRIAD_J_IN = "triad_j_in"
    TRIAD_J_OWN = "triad_j_own"

    @classmethod
    def parse(cls, name: str) -> "Placement":
        key = name.strip().lower().replace("-", "_")
        try:
            return cls(key)
        except ValueError:
            known = ", ".join(p.value for p in cls)
            raise ValueError(f"unknown placement {name!r} (known: {known})") from None

    @property
    def delayed(self) -> frozenset[tuple[int, int]]:
        return _DELAYED[self]

    @property
    def dimension(self) -> int:
        return 3 if self in (Placement.TRIAD_J_IN, Placement.TRIAD_J_OWN) else 2


_DELAYED = {
    Placement.NONE: frozenset(),
    Placement.OWN: frozenset({(1, 1)}),
    Placement.CROSS: frozenset({(1, 2)}),
    Placement.ROW_R: frozenset({(1, 1), (1, 2)}),
    Placement.COL_R: frozenset({(1, 1), (2, 1)}),
    Placement.DIAGONAL: frozenset({(1, 1), (2, 2)}),
    Placement.ANTI_DIAGONAL: frozenset({(1, 2), (2, 1)}),
    Placement.THREE_OWN_LAST: frozenset({(1, 1), (1, 2), (2, 1)}),
    Placement.THREE_CROSS_LAST: frozenset({(1, 1), (1, 2), (2, 2)}),
    Placement.FULL: frozenset({(1, 1), (1, 2), (2, 1), (2, 2)}),
    Placement.MIXED_SELF: frozenset({(1, 1)}),
    Placement.PURE_CROSS: frozenset({(1, 2)}),
    Placement.TRIAD_J_IN: frozenset({(2, 1), (2, 3)}),
    Placement.TRIAD_J_OWN: frozenset({(2, 2)}),
}


@dataclass(frozen=True)
class DelayPlacement:
    """A placement plus the undelayed self-term ``a13`` used only by MIXED_SELF."""

    kind: Placement
    a13: float = 0.0

    def __post_init__(self):
        if self.kind is not Placement.MIXED_SELF and self.a13 != 0.0:
            raise ValueError("a13 is only meaningful for the mixed_self placement")
        if not math.isfinite(self.a13):
            raise ValueError("a13 must be finite")

    @classmethod
    def parse(cls, name: str, a13: float = 0.0) -> "DelayPlacement":
        return cls(Placement.parse(name), float(a13))

    @property
    def delayed(self) -> frozenset[tuple[int, int]]:
        return self.kind.delayed

    @property
    def name(self) -> str:
        return self.kind.value


@dataclass(frozen=True)
class DelaySystem:
    matrix: InteractionMatrix
    placement: DelayPlacement

    def __post_init__(self):
        kind = self.placement.kind
        if self.matrix.dimension != kind.dimension:
            raise DimensionError(
                f"placement {kind.value!r} needs a {kind.dimension}-dimensional matrix, "
                f"got dimension {self.matrix.dimension}"
            )

    def undelayed_part(self) -> np.ndarray:
        """Matrix multiplying the current state."""
        a = self.matrix.as_array()
        mask = self._mask()
        a0 = np.where(mask, 0.0, a)
        a0[0, 0] += self.placement.a13
        return a0

    def delayed_part(self) -> np.ndarray:
        """Matrix multiplying the state ``tau`` time units ago."""
        a = self.matrix.as_array()
        return np.where(self._mask(), a, 0.0)

    def tau_zero_matrix(self) -> np.ndarray:
        return self.undelayed_part() + self.delayed_part()

    def _mask(self) -> np.ndarray:
        n = self.matrix.dimension
        mask = np.zeros((n, n), dtype=bool)
        for k, l in self.placement.delayed:
            mask[k - 1, l - 1] = True
        return mask


def build_system(m: InteractionMatrix, p: DelayPlacement | Placement | str) -> DelaySystem:
    """Validate that ``m`` and ``p`` fit together and return the system."""
    if isinstance(p, str):
        p = DelayPlacement.parse(p)
    elif isinstance(p, Placement):
        p = DelayPlacement(p)
    return DelaySystem(m, p)


class Verdict(enum.Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    MARGINAL_CENTER = "marginal_center"
    MARGINAL_ZERO_ROOT = "marginal_zero_root"

    @property
    def marginal(self) -> bool:
        return self in (Verdict.MARGINAL_CENTER, Verdict.MARGINAL_ZERO_ROOT)


@dataclass(frozen=True)
class BaselineStability:
    trace: float
    determinant: float
    verdict: Verdict


def classify_matrix(a: np.ndarray) -> BaselineStability:
    """Trace/determinant classification of a planar matrix given as an array."""
    a = np.asarray(a, dtype=float)
    if a.shape != (2, 2):
        raise DimensionError("baseline classification is planar-only")
    tr = float(a[0, 0] + a[1, 1])
    det = float(a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0])
    scale = max(float(np.max(np.abs(a))), 1e-300)
    if abs(det) <= MARGINAL_TOL * scale * scale:
        verdict = Verdict.MARGINAL_ZERO_ROOT
    elif det < 0:
        verdict = Verdict.UNSTABLE
    elif abs(tr) <= MARGINAL_TOL * scale:
        verdict = Verdict.MARGINAL_CENTER
    elif tr < 0:
        verdict = Verdict.STABLE
    else:
        verdict = Verdict.UNSTABLE
    return BaselineStability(tr, det, verdict)


def classify_baseline(m: InteractionMatrix) -> BaselineStability:
    """Stability of the undelayed planar system ``x' = A x``."""
    if m.dimension != 2:
        raise DimensionError("baseline classification is planar-only")
    return classify_matrix(m.as_array())


def homogenize(g: GoalModel) -> tuple[tuple[float, float], InteractionMatrix]:
    """Shift the goal-seeking model to equilibrium-centred coordinates.

    Returns the stationary state ``(R_eq, J_eq)`` and the matrix of the
    deviation dynamics.
    """
    a = np.array([[-g.c - g.d, g.d], [g.f, -g.e - g.f]], dtype=float)
    rhs = -np.array([g.c * g.Rstar, g.e * g.Jstar], dtype=float)
    det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    scale = float(np.max(np.abs(a)))
    if scale == 0.0 or abs(det) <= MARGINAL_TOL * scale * scale:
        raise SingularSystemError("coefficient matrix is singular; no unique equilibrium")
    eq = np.linalg.solve(a, rhs)
    m = InteractionMatrix(a[0, 0], a[0, 1], a[1, 0], a[1, 1])
    return (float(eq[0]) + 0.0, float(eq[1]) + 0.0), m
