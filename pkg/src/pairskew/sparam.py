"""Exact single-ended 4-port synthesis and mixed-mode conversion.

A matched, reflectionless, lossless coupled segment of asymmetry p, mode
transit-time split dt and average delay cd, with a flat delay t_l prepended on
the P line, has the forward transmission block

    S21 = (cos(pi f dt) - i (1-p)/(1+p) sin(pi f dt)) e^{-i 2 pi f cd} e^{+i 2 pi f t_l}
    S43 = (cos(pi f dt) + i (1-p)/(1+p) sin(pi f dt)) e^{-i 2 pi f cd}
    S41 = S23 * e^{+i 2 pi f t_l},   S23 = -2 i sqrt(p)/(1+p) sin(pi f dt) e^{-i 2 pi f cd}

The t_l factor uses the opposite phase sign from the propagation terms on
purpose: the phase-difference skew definitions then return +t_l for a P-line
delay, which is the sign convention every skew formula in this package uses.

Sign caution: ``SegmentSynthParams.delta_tau`` is the synthesis formulas' own
transit-time difference, c-mode (fast branch) minus pi-mode, which is the
NEGATIVE of the observable ``SegmentSpec.delta_tau``. The one conversion
between the two conventions lives in :func:`synth_params_for_segment`; all
magnitudes are even in delta_tau so only phase-derived quantities care.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import FourPortResponse, FrequencyGrid, MixedModeResponse, SegmentSpec
from .modes import solve_modes

__all__ = [
    "sinc",
    "SegmentSynthParams",
    "synth_segment",
    "synth_lc_segment",
    "synth_params_for_segment",
    "to_mixed_mode",
    "magnitude_expansions",
]

_SQRT2 = float(np.sqrt(2.0))


def sinc(x):
    """Unnormalized sinc: sin(x)/x with sinc(0) = 1.

    With this definition t_s*sinc(2 pi f dt) and the sweep-rule term
    t_s*sinc(pi f dt)*cos(pi f dt) are algebraically identical
    (sin 2y / 2y = sinc(y) cos(y)), which the skew formulas rely on.
    """
    return np.sinc(np.asarray(x) / np.pi)


@dataclass(frozen=True)
class SegmentSynthParams:
    """Synthesis inputs: asymmetry p, transit-time split, average delay, prepend.

    delta_tau here is c-mode minus pi-mode transit time (see module note);
    common_delay is the average of the two mode transit times.
    """

    p: float
    delta_tau: float
    common_delay: float
    t_l: float = 0.0

    def __post_init__(self):
        if not (self.p > 0.0 and np.isfinite(self.p)):
            raise ValueError(f"asymmetry parameter p must be > 0, got {self.p}")
        if self.common_delay < 0.0:
            raise ValueError(f"common_delay must be >= 0, got {self.common_delay}")


def synth_segment(params: SegmentSynthParams, grid: FrequencyGrid) -> FourPortResponse:
    """Exact 4-port transmission blocks of one segment on the given grid.

    The forward block satisfies per-frequency column unitarity
    |S21|^2+|S41|^2 = |S23|^2+|S43|^2 = 1 identically (cos^2 + sin^2 after the
    coefficient identity ((1-p)^2 + 4p)/(1+p)^2 = 1); the reverse block is the
    reciprocity transpose.
    """
    f = grid.points
    p = params.p
    y = np.pi * f * params.delta_tau
    cos_y = np.cos(y)
    sin_y = np.sin(y)
    b = (1.0 - p) / (1.0 + p)
    k = 2.0 * np.sqrt(p) / (1.0 + p)
    common = np.exp(-2j * np.pi * f * params.common_delay)
    d = np.exp(+2j * np.pi * f * params.t_l)

    s21 = (cos_y - 1j * b * sin_y) * common * d
    s43 = (cos_y + 1j * b * sin_y) * common
    s23 = -1j * k * sin_y * common
    s41 = s23 * d

    fwd = np.empty((f.size, 2, 2), dtype=complex)
    fwd[:, 0, 0] = s21
    fwd[:, 0, 1] = s23
    fwd[:, 1, 0] = s41
    fwd[:, 1, 1] = s43
    rev = np.swapaxes(fwd, 1, 2)
    return FourPortResponse(grid=grid, forward=fwd, reverse=rev, reciprocal=True)


def synth_lc_segment(t_l: float, grid: FrequencyGrid) -> FourPortResponse:
    """Loosely coupled stage: flat delay t_l on the P line, N line ideal.

    Equals synth_segment with p=1, delta_tau=0, common_delay=0 and the same t_l.
    """
    return synth_segment(SegmentSynthParams(p=1.0, delta_tau=0.0,
                                            common_delay=0.0, t_l=float(t_l)), grid)


#: Average-delay used for declared (delta_tau, t_s) segments; arbitrary but
#: recorded so cascaded absolute phases stay unwrap-safe and reproducible.
DECLARED_COMMON_DELAY_FACTOR = 5.0


def synth_params_for_segment(spec: SegmentSpec) -> SegmentSynthParams:
    """Map a segment descriptor onto exact synthesis parameters.

    LC stages map to a pure t_l delay. SC stages with a physical record use
    the exact mode solution (p, transit times). Declared (delta_tau, t_s)
    stages pin p so that the exact zero-frequency extracted skew equals t_s:
    the zero-frequency limit of the extracted skew is delta_tau_syn*(p-1)/(p+1),
    so with r = t_s/delta_tau the exact pin is p = (1-r)/(1+r); |r| < 1 must
    hold (skew amplitude below the mode delay split). common_delay defaults to
    DECLARED_COMMON_DELAY_FACTOR * |delta_tau|.
    """
    if spec.kind == "LC":
        return SegmentSynthParams(p=1.0, delta_tau=0.0, common_delay=0.0,
                                  t_l=spec.t_l)
    if spec.physical is not None:
        sol = solve_modes(spec.physical.lc)
        ell = spec.physical.length
        return SegmentSynthParams(
            p=sol.p,
            delta_tau=ell * (sol.slowness_c - sol.slowness_pi),
            common_delay=ell * (sol.slowness_c + sol.slowness_pi) / 2.0,
            t_l=spec.physical.t_l_prepend,
        )
    r = spec.t_s / spec.delta_tau
    if not abs(r) < 1.0:
        raise ValueError(
            f"|t_s| must be smaller than |delta_tau| to synthesize a passive "
            f"segment; got t_s/delta_tau = {r}")
    return SegmentSynthParams(
        p=(1.0 - r) / (1.0 + r),
        delta_tau=-spec.delta_tau,
        common_delay=DECLARED_COMMON_DELAY_FACTOR * abs(spec.delta_tau),
        t_l=0.0,
    )


def to_mixed_mode(resp: FourPortResponse) -> MixedModeResponse:
    """Convert single-ended blocks to mixed-mode and ssd transfer terms.

    Uses the power-consistent 1/sqrt(2) basis:
      ssd21 = (S21-S23)/sqrt2, ssd41 = (S43-S41)/sqrt2 (forward),
      ssd12 = (S12-S14)/sqrt2, ssd32 = (S34-S32)/sqrt2 (reverse),
      sdd21 = (S21-S23-S41+S43)/2, scc21 = (S21+S23+S41+S43)/2,
      scd21 = (S21-S23+S41-S43)/2, sdc21 = (S21+S23-S41-S43)/2.
    For lossless input |sdd21|^2 + |scd21|^2 = 1 per frequency.
    """
    s21, s23, s41, s43 = resp.s21, resp.s23, resp.s41, resp.s43
    return MixedModeResponse(
        grid=resp.grid,
        sdd21=0.5 * (s21 - s23 - s41 + s43),
        scc21=0.5 * (s21 + s23 + s41 + s43),
        scd21=0.5 * (s21 - s23 + s41 - s43),
        sdc21=0.5 * (s21 + s23 - s41 - s43),
        ssd21=(s21 - s23) / _SQRT2,
        ssd41=(s43 - s41) / _SQRT2,
        ssd12=(resp.s12 - resp.s14) / _SQRT2,
        ssd32=(resp.s34 - resp.s32) / _SQRT2,
    )


def magnitude_expansions(p: float, delta_tau: float, t_l: float, f):
    """Small-asymmetry second-order magnitude expansions.

    Evaluates, with d = 1 - sqrt(p), th = 2 pi f t_l, ph = 2 pi f delta_tau
    (delta_tau in the observable tau_pi - tau_c convention):

      sdd21_sq = cos^2(th/2) - 0.5 sin(ph) sin(th) d
                 + (0.125 cos(ph-th) + 0.375 cos(ph+th) - 0.5 cos(th)) d^2
      scd21_sq = 1 - sdd21_sq (term-by-term)
      s21_sq   = cos^2(ph/2) + sin^2(ph/2) d^2
      s41_sq   = sin^2(ph/2) - sin^2(ph/2) d^2

    Matches the exact magnitudes of synth_segment through second order
    (error O(d^3)) when the segment is synthesized with the same p and the
    synthesis-convention delta_tau (the negative of the value given here).
    """
    d = 1.0 - float(np.sqrt(p))
    if abs(d) >= 0.3:
        warnings.warn(f"|1-sqrt(p)| = {abs(d):.3f} is outside the expansion "
                      "regime (< 0.3); results are extrapolations", stacklevel=2)
    f = np.asarray(f, dtype=float)
    th = 2.0 * np.pi * f * t_l
    ph = 2.0 * np.pi * f * delta_tau
    bracket = (0.125 * np.cos(ph - th) + 0.375 * np.cos(ph + th)
               - 0.5 * np.cos(th))
    first = 0.5 * np.sin(ph) * np.sin(th)
    sdd = np.cos(th / 2.0) ** 2 - first * d + bracket * d * d
    scd = np.sin(th / 2.0) ** 2 + first * d - bracket * d * d
    s21 = np.cos(ph / 2.0) ** 2 + np.sin(ph / 2.0) ** 2 * d * d
    s41 = np.sin(ph / 2.0) ** 2 - np.sin(ph / 2.0) ** 2 * d * d
    return {"sdd21_sq": sdd, "scd21_sq": scd, "s21_sq": s21, "s41_sq": s41}
