"""Shared data model: frequency grids, segment descriptors, response containers.

No physics lives here. Port convention used throughout the package
(single-ended): 1 = P-left, 3 = N-left, 2 = P-right, 4 = N-right. Direction
naming: ``skew_21`` is the intra-pair skew seen at the right end for a signal
launched at the left mixed-mode port; ``skew_12`` is the reverse.

All containers are immutable after construction (frozen dataclasses, arrays
marked read-only), so they are safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    EmptyGrid,
    InconsistentPhysicalParams,
    NegativeLength,
    NonPositiveFrequency,
)

__all__ = [
    "FrequencyGrid",
    "LcMatrices",
    "PhysicalLine",
    "SegmentSpec",
    "FourPortResponse",
    "MixedModeResponse",
    "SkewProfile",
    "make_grid",
    "validate_segment",
]


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    """Strictly increasing, strictly positive frequency points in Hz.

    f = 0 is excluded by construction; low-frequency limits are handled
    analytically by consumers. ``max_spacing`` feeds the unwrap guard.
    """

    points: np.ndarray
    max_spacing: float = field(init=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise EmptyGrid("grid needs at least two points")
        if not np.all(np.isfinite(pts)):
            raise NonPositiveFrequency("grid contains non-finite frequencies")
        if pts[0] <= 0.0:
            raise NonPositiveFrequency("frequencies must be > 0 (f = 0 excluded)")
        d = np.diff(pts)
        if np.any(d <= 0.0):
            raise EmptyGrid("frequencies must strictly increase")
        object.__setattr__(self, "points", _readonly(pts))
        object.__setattr__(self, "max_spacing", float(d.max()))

    def __len__(self) -> int:
        return self.points.size

    def same_as(self, other: "FrequencyGrid") -> bool:
        return self.points.shape == other.points.shape and bool(
            np.array_equal(self.points, other.points)
        )


def make_grid(f_start: float, f_stop: float, n_points: int,
              spacing: str = "linear") -> FrequencyGrid:
    """Build a frequency grid with inclusive endpoints.

    Parameters
    ----------
    f_start, f_stop : float
        Band edges in Hz, 0 < f_start < f_stop.
    n_points : int
        Number of points (>= 2); linear spacing is (f_stop-f_start)/(n_points-1).
    spacing : {"linear", "log"}
    """
    if f_start <= 0.0 or f_stop <= 0.0:
        raise NonPositiveFrequency(f"band edges must be > 0, got ({f_start}, {f_stop})")
    if n_points < 2:
        raise EmptyGrid(f"n_points must be >= 2, got {n_points}")
    if f_start >= f_stop:
        raise EmptyGrid(f"empty band: f_start={f_start} >= f_stop={f_stop}")
    if spacing == "linear":
        pts = np.linspace(f_start, f_stop, n_points)
    elif spacing == "log":
        pts = np.geomspace(f_start, f_stop, n_points)
    else:
        raise ValueError(f"spacing must be 'linear' or 'log', got {spacing!r}")
    return FrequencyGrid(pts)


class LcMatrices:
    """Per-unit-length 2x2 inductance (H/m) and capacitance (F/m) matrices.

    Off-diagonal asymmetry between the two conductors is what produces
    intra-pair skew. Sign convention of C12 is accepted as given (Maxwellian
    negative or coupling-coefficient positive); validity is gated only by the
    propagating-mode requirement checked in the mode solver.
    """

    __slots__ = ("L", "C")

    def __init__(self, L, C):
        L = np.asarray(L, dtype=float)
        C = np.asarray(C, dtype=float)
        if L.shape != (2, 2) or C.shape != (2, 2):
            raise ValueError("L and C must be 2x2 matrices")
        if not (np.all(np.isfinite(L)) and np.all(np.isfinite(C))):
            raise ValueError("L and C entries must be finite")
        self.L = _readonly(L)
        self.C = _readonly(C)

    def product(self) -> np.ndarray:
        """The 2x2 matrix formed by the L*C products (units (s/m)^2)."""
        return self.L @ self.C

    def is_symmetric(self) -> bool:
        L, C = self.L, self.C
        return bool(
            L[0, 0] == L[1, 1] and L[0, 1] == L[1, 0]
            and C[0, 0] == C[1, 1] and C[0, 1] == C[1, 0]
        )

    def is_uncoupled(self) -> bool:
        return bool(
            self.L[0, 1] == 0.0 and self.L[1, 0] == 0.0
            and self.C[0, 1] == 0.0 and self.C[1, 0] == 0.0
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, LcMatrices):
            return NotImplemented
        return bool(np.array_equal(self.L, other.L) and np.array_equal(self.C, other.C))

    def __repr__(self) -> str:
        return f"LcMatrices(L={self.L.tolist()}, C={self.C.tolist()})"


@dataclass(frozen=True)
class PhysicalLine:
    """Physical origin of a strongly coupled segment: L/C, length, prepend delay."""

    lc: LcMatrices
    length: float
    t_l_prepend: float = 0.0

    def __post_init__(self):
        if self.length <= 0.0:
            raise NegativeLength(f"segment length must be > 0 m, got {self.length}")


@dataclass(frozen=True)
class SegmentSpec:
    """One channel stage: loosely coupled (LC) or strongly coupled (SC).

    LC stages carry only a flat P-line delay ``t_l``. SC stages carry the mode
    delay difference ``delta_tau`` (= pi-mode transit time minus c-mode transit
    time over the stage length; positive for physical lines) and the skew
    amplitude ``t_s`` (the stage's zero-frequency intra-pair skew; may be 0 for
    a symmetric strongly coupled line). ``physical`` optionally records the L/C
    origin, which must be consistent with the declared values.
    """

    kind: str
    t_l: float = 0.0
    delta_tau: float = 0.0
    t_s: float = 0.0
    physical: Optional[PhysicalLine] = None

    def __post_init__(self):
        if self.kind not in ("LC", "SC"):
            raise ValueError(f"kind must be 'LC' or 'SC', got {self.kind!r}")
        if self.kind == "LC":
            if self.delta_tau != 0.0 or self.t_s != 0.0:
                raise ValueError("LC segments have delta_tau = t_s = 0 by construction")
            if self.physical is not None:
                raise ValueError("LC segments carry no physical L/C record")
        else:
            if self.delta_tau == 0.0:
                raise ValueError("SC segments require delta_tau != 0")
            if self.t_l != 0.0:
                raise ValueError("SC segments carry no t_l (use physical.t_l_prepend)")

    @classmethod
    def lc(cls, t_l: float) -> "SegmentSpec":
        return cls(kind="LC", t_l=float(t_l))

    @classmethod
    def sc(cls, delta_tau: float, t_s: float = 0.0,
           physical: Optional[PhysicalLine] = None) -> "SegmentSpec":
        return cls(kind="SC", delta_tau=float(delta_tau), t_s=float(t_s),
                   physical=physical)


#: Absolute tolerance (seconds) between declared and L/C-derived delta_tau/t_s.
PHYSICAL_CONSISTENCY_TOL = 1e-15


def validate_segment(seg: SegmentSpec) -> SegmentSpec:
    """Enforce SegmentSpec invariants; cross-check declared vs derived values.

    If the segment carries a physical L/C record, delta_tau and t_s are
    recomputed from it and must agree with the declared values within
    PHYSICAL_CONSISTENCY_TOL, else InconsistentPhysicalParams is raised.
    """
    if seg.kind == "SC" and seg.physical is not None:
        from .modes import derive_segment  # local import: modes depends on core

        ref = derive_segment(seg.physical.lc, seg.physical.length,
                             t_l_prepend=seg.physical.t_l_prepend)
        d_dt = abs(ref.delta_tau - seg.delta_tau)
        d_ts = abs(ref.t_s - seg.t_s)
        if d_dt > PHYSICAL_CONSISTENCY_TOL or d_ts > PHYSICAL_CONSISTENCY_TOL:
            raise InconsistentPhysicalParams(
                f"declared (delta_tau={seg.delta_tau!r}, t_s={seg.t_s!r}) vs "
                f"derived ({ref.delta_tau!r}, {ref.t_s!r}) differ by "
                f"({d_dt:.3e}, {d_ts:.3e}) s > {PHYSICAL_CONSISTENCY_TOL} s"
            )
    return seg


@dataclass(frozen=True, eq=False)
class FourPortResponse:
    """Transmission blocks of a matched, reflectionless 4-port.

    ``forward[k]`` is the 2x2 matrix [[S21, S23], [S41, S43]] at grid point k:
    it maps incident waves at the left ports (1, 3) to outgoing waves at the
    right ports (2, 4). ``reverse[k]`` is [[S12, S14], [S32, S34]] for
    right-to-left traversal. For everything synthesized in this package the
    reverse block is the element-wise reciprocal partner (transpose) of the
    forward block; measured data may violate that and carries the
    ``reciprocal`` flag. ``discarded_energy`` records, per frequency, the
    summed |S|^2 of reflection/near-end entries dropped on Touchstone import.
    """

    grid: FrequencyGrid
    forward: np.ndarray
    reverse: np.ndarray
    reciprocal: bool = True
    discarded_energy: Optional[np.ndarray] = None

    def __post_init__(self):
        n = len(self.grid)
        fwd = np.asarray(self.forward, dtype=complex)
        rev = np.asarray(self.reverse, dtype=complex)
        if fwd.shape != (n, 2, 2) or rev.shape != (n, 2, 2):
            raise ValueError(f"blocks must have shape ({n}, 2, 2)")
        object.__setattr__(self, "forward", _readonly(fwd))
        object.__setattr__(self, "reverse", _readonly(rev))
        if self.discarded_energy is not None:
            object.__setattr__(self, "discarded_energy",
                               _readonly(np.asarray(self.discarded_energy, float)))

    # Named accessors for the single-ended entries.
    @property
    def s21(self) -> np.ndarray:
        return self.forward[:, 0, 0]

    @property
    def s23(self) -> np.ndarray:
        return self.forward[:, 0, 1]

    @property
    def s41(self) -> np.ndarray:
        return self.forward[:, 1, 0]

    @property
    def s43(self) -> np.ndarray:
        return self.forward[:, 1, 1]

    @property
    def s12(self) -> np.ndarray:
        return self.reverse[:, 0, 0]

    @property
    def s14(self) -> np.ndarray:
        return self.reverse[:, 0, 1]

    @property
    def s32(self) -> np.ndarray:
        return self.reverse[:, 1, 0]

    @property
    def s34(self) -> np.ndarray:
        return self.reverse[:, 1, 1]

    def unitarity_defect(self) -> float:
        """max per-frequency deviation of |S21|^2+|S41|^2 and |S23|^2+|S43|^2 from 1."""
        cols = np.sum(np.abs(self.forward) ** 2, axis=1)  # sum over output ports
        return float(np.max(np.abs(cols - 1.0)))

    def reciprocity_defect(self) -> float:
        """max |reverse - forward^T| over all frequencies and entries."""
        return float(np.max(np.abs(self.reverse - np.swapaxes(self.forward, 1, 2))))


@dataclass(frozen=True, eq=False)
class MixedModeResponse:
    """Mixed-mode and single-ended-to-differential transfer terms.

    sdd/scc/scd/sdc use the power-consistent differential/common basis;
    the ssd terms are the mixed-mode port 1 (or 2) to single-ended port
    transfers that the skew definitions are built from.
    """

    grid: FrequencyGrid
    sdd21: np.ndarray
    scc21: np.ndarray
    scd21: np.ndarray
    sdc21: np.ndarray
    ssd21: np.ndarray
    ssd41: np.ndarray
    ssd12: np.ndarray
    ssd32: np.ndarray

    def __post_init__(self):
        n = len(self.grid)
        for name in ("sdd21", "scc21", "scd21", "sdc21",
                     "ssd21", "ssd41", "ssd12", "ssd32"):
            a = np.asarray(getattr(self, name), dtype=complex)
            if a.shape != (n,):
                raise ValueError(f"{name} must have shape ({n},)")
            object.__setattr__(self, name, _readonly(a))


@dataclass(frozen=True, eq=False)
class SkewProfile:
    """Frequency-indexed intra-pair skew, both propagation directions, seconds."""

    grid: FrequencyGrid
    skew_21: np.ndarray
    skew_12: np.ndarray

    def __post_init__(self):
        n = len(self.grid)
        for name in ("skew_21", "skew_12"):
            a = np.asarray(getattr(self, name), dtype=float)
            if a.shape != (n,):
                raise ValueError(f"{name} must have shape ({n},)")
            if not np.all(np.isfinite(a)):
                raise ValueError(f"{name} contains non-finite skew values")
            object.__setattr__(self, name, _readonly(a))

    def stacked(self) -> np.ndarray:
        """Both directions as one array (2, n), order (skew_21, skew_12)."""
        return np.vstack([self.skew_21, self.skew_12])
