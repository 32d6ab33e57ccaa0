"""Pi-model transmission line physics and the stacked phasor regression.

A line between buses k and l is described by series impedance r + jx and
total shunt susceptance 2b (b at each end).  Steady-state relations between
the bus voltage and branch current phasors are linear in the four real
admittance unknowns, so a window of synchrophasor records can be rearranged
into a real-valued regression problem whose coefficient vector maps back to
(r, x, b).
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

__all__ = [
    "LineParameters",
    "AdmittanceVector",
    "PmuRecord",
    "EivProblem",
    "branch_currents",
    "params_to_admittance",
    "admittance_to_params",
    "build_regression",
    "CONSTRAINT_C",
    "CONSTRAINT_F",
]

# Equality constraint on the admittance vector: y1 + y3 = 0 for a symmetric
# pi-model line.  Shape (p, c) with c = 1.
CONSTRAINT_C = np.array([[1.0], [0.0], [1.0], [0.0]])
CONSTRAINT_F = np.array([0.0])


@dataclass(frozen=True)
class LineParameters:
    """Series resistance r, series reactance x and shunt susceptance b (p.u.)."""

    r: float
    x: float
    b: float

    def __post_init__(self) -> None:
        for name in ("r", "x", "b"):
            v = getattr(self, name)
            if not np.isfinite(v):
                raise ValueError(f"line parameter {name} must be finite, got {v!r}")
        if self.r < 0:
            raise ValueError(f"series resistance must be non-negative, got {self.r}")
        if self.r == 0 and self.x == 0:
            raise ValueError("series impedance must be nonzero")


@dataclass(frozen=True)
class AdmittanceVector:
    """Real coefficient vector (y1, y2, y3, y4) of the stacked regression.

    y1 = Re(y_kl), y2 = -(b + Im(y_kl)), y3 = -Re(y_kl), y4 = Im(y_kl)
    where y_kl = 1 / (r + jx).  A physical line satisfies y1 + y3 = 0.
    """

    y1: float
    y2: float
    y3: float
    y4: float

    def as_array(self) -> np.ndarray:
        return np.array([self.y1, self.y2, self.y3, self.y4])

    @classmethod
    def from_array(cls, w: np.ndarray) -> "AdmittanceVector":
        w = np.asarray(w, dtype=float)
        if w.shape != (4,):
            raise ValueError(f"admittance vector must have shape (4,), got {w.shape}")
        return cls(*(float(v) for v in w))


@dataclass(frozen=True)
class PmuRecord:
    """One synchronized snapshot of the four terminal phasors."""

    t: int
    vk: complex
    vl: complex
    ik: complex
    il: complex


@dataclass
class EivProblem:
    """Real regression y ~ X w with noise in both sides.

    Attributes
    ----------
    x : (n, p) float array of noisy regressors.
    y : (n,) float array of noisy responses.
    constraint : optional (C, f) pair encoding the equality C^T w = f.
    eps0 : ratio of response to regressor noise intensity (1 = equal).
    """

    x: np.ndarray
    y: np.ndarray
    constraint: tuple[np.ndarray, np.ndarray] | None = None
    eps0: float = 1.0

    def __post_init__(self) -> None:
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.x.ndim != 2:
            raise ValueError("x must be a 2-d array")
        n, p = self.x.shape
        if self.y.shape != (n,):
            raise ValueError(f"y must have shape ({n},), got {self.y.shape}")
        if n < p:
            raise ValueError(f"need at least p={p} rows, got {n}")
        if not (np.isfinite(self.x).all() and np.isfinite(self.y).all()):
            raise ValueError("regression data must be finite")
        if self.eps0 <= 0:
            raise ValueError(f"eps0 must be positive, got {self.eps0}")
        if self.constraint is not None:
            c, f = self.constraint
            c = np.asarray(c, dtype=float)
            f = np.asarray(f, dtype=float)
            if c.ndim != 2 or c.shape[0] != p or f.shape != (c.shape[1],):
                raise ValueError("constraint shapes must be (p, c) and (c,)")
            self.constraint = (c, f)

    @property
    def shape(self) -> tuple[int, int]:
        return self.x.shape


def series_admittance(params: LineParameters) -> complex:
    """Complex series admittance y_kl = 1 / (r + jx)."""
    return 1.0 / complex(params.r, params.x)


def branch_currents(vk: complex, vl: complex, params: LineParameters) -> tuple[complex, complex]:
    """Terminal current phasors (ik, il) of the pi-model line.

    ik = (y_kl + jb) vk - y_kl vl and symmetrically for il, with half the
    total shunt susceptance lumped at each terminal.
    """
    y = series_admittance(params)
    jb = complex(0.0, params.b)
    ik = (y + jb) * vk - y * vl
    il = (y + jb) * vl - y * vk
    return ik, il


def params_to_admittance(params: LineParameters) -> AdmittanceVector:
    """Map (r, x, b) to the regression coefficient vector."""
    y = series_admittance(params)
    g, by = y.real, y.imag
    return AdmittanceVector(g, -(params.b + by), -g, by)


def admittance_to_params(w: AdmittanceVector | np.ndarray) -> LineParameters:
    """Recover (r, x, b) from an estimated coefficient vector.

    The inverse uses the symmetric combination (y1 - y3) / 2 for the series
    conductance so unconstrained estimates (y1 + y3 != 0) remain well defined.

    Raises
    ------
    ValueError
        If the implied series admittance is numerically zero.
    """
    if isinstance(w, AdmittanceVector):
        y1, y2, y3, y4 = w.y1, w.y2, w.y3, w.y4
    else:
        y1, y2, y3, y4 = AdmittanceVector.from_array(np.asarray(w)).as_array()
    den = (y1 - y3) ** 2 + (2.0 * y4) ** 2
    if den < 1e-24:
        raise ValueError("estimated series admittance is numerically zero")
    r = 2.0 * (y1 - y3) / den
    x = -4.0 * y4 / den
    b = -(y2 + y4)
    return LineParameters(r, x, b)


def simulate_records(
    vk: np.ndarray, vl: np.ndarray, params: LineParameters
) -> list[PmuRecord]:
    """Build exact records from voltage phasor trajectories."""
    if vk.shape != vl.shape:
        raise ValueError("voltage trajectories must have equal length")
    records = []
    for t, (a, b_) in enumerate(zip(vk, vl)):
        ik, il = branch_currents(complex(a), complex(b_), params)
        records.append(PmuRecord(t, complex(a), complex(b_), ik, il))
    return records


def build_regression(
    records: list[PmuRecord],
    with_constraint: bool = False,
    eps0: float = 1.0,
) -> EivProblem:
    """Stack PMU records into the 4-rows-per-record real regression.

    Per record, in order: Re(ik), Im(ik), Re(il), Im(il) regressed on the
    voltage components arranged so that one coefficient vector serves all
    four rows.  Row layout for record (vk, vl):

        [Re vk,  Im vk,  Re vl,  Im vl]   ->  Re ik
        [Im vk, -Re vk,  Im vl, -Re vl]   ->  Im ik
        [Re vl,  Im vl,  Re vk,  Im vk]   ->  Re il
        [Im vl, -Re vl,  Im vk, -Re vk]   ->  Im il
    """
    if not records:
        raise ValueError("need at least one record")
    n = len(records)
    x = np.empty((4 * n, 4))
    y = np.empty(4 * n)
    for i, rec in enumerate(records):
        vk, vl = rec.vk, rec.vl
        base = 4 * i
        x[base + 0] = (vk.real, vk.imag, vl.real, vl.imag)
        x[base + 1] = (vk.imag, -vk.real, vl.imag, -vl.real)
        x[base + 2] = (vl.real, vl.imag, vk.real, vk.imag)
        x[base + 3] = (vl.imag, -vl.real, vk.imag, -vk.real)
        y[base + 0] = rec.ik.real
        y[base + 1] = rec.ik.imag
        y[base + 2] = rec.il.real
        y[base + 3] = rec.il.imag
    constraint = (CONSTRAINT_C.copy(), CONSTRAINT_F.copy()) if with_constraint else None
    return EivProblem(x, y, constraint=constraint, eps0=eps0)


def phasor(mag: float, angle: float) -> complex:
    """Polar to rectangular helper."""
    return cmath.rect(mag, angle)
