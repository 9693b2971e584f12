"""Exact frequency-domain cascading of matched 4-port segments.

This module is the independent numerical oracle against which the analytic
skew-propagation formulas are checked: each stage is synthesized exactly,
the transmission blocks are multiplied per frequency, and the skew is
re-extracted from the cascaded phases. No first-order skew formula is used
anywhere on this path.

Every segment handled here is matched and reflectionless by construction, so
network composition reduces to plain 2x2 block products: the signal meets
stage 1 first, hence forward_total = F_N @ ... @ F_2 @ F_1 and
reverse_total = R_1 @ R_2 @ ... @ R_N. Cascading general (reflective)
networks is out of scope.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import FourPortResponse, FrequencyGrid, SkewProfile
from .errors import GridMismatch
from .ispg import IspgGraph
from .skew import extract_skew
from .sparam import synth_params_for_segment, synth_segment

__all__ = [
    "CascadeResult",
    "cascade",
    "oracle_skew",
    "ProfileComparison",
    "compare_profiles",
]


@dataclass(frozen=True, eq=False)
class CascadeResult:
    """Cascaded response plus the per-segment responses kept for audit."""

    response: FourPortResponse
    per_segment: tuple


def cascade(segments: Sequence[FourPortResponse]) -> CascadeResult:
    """Multiply segment transmission blocks per frequency, in signal order."""
    segments = tuple(segments)
    if not segments:
        raise ValueError("cascade needs at least one segment")
    grid = segments[0].grid
    for s in segments[1:]:
        if not grid.same_as(s.grid):
            raise GridMismatch("cascade segments must share one frequency grid")
    fwd = segments[0].forward
    rev = segments[0].reverse
    for s in segments[1:]:
        fwd = s.forward @ fwd
        rev = rev @ s.reverse
    reciprocal = all(s.reciprocal for s in segments)
    resp = FourPortResponse(grid=grid, forward=fwd, reverse=rev,
                            reciprocal=reciprocal)
    return CascadeResult(response=resp, per_segment=segments)


def _delay_budget(graph: IspgGraph) -> float:
    """Total delay the cascaded phases can accumulate (unwrap guard input)."""
    total = 0.0
    for spec in graph.nodes:
        p = synth_params_for_segment(spec)
        total += p.common_delay + abs(p.delta_tau) + abs(p.t_l)
    return total


def oracle_skew(graph: IspgGraph, grid: FrequencyGrid) -> SkewProfile:
    """Exact skew profile of a channel: synthesize, cascade, re-extract.

    Each SC node must be synthesizable exactly: a physical L/C record is used
    directly; a declared (delta_tau, t_s) pair is pinned so the segment's
    exact zero-frequency skew equals t_s (see synth_params_for_segment).
    skew_12 comes from the reverse-direction blocks of the same cascade.
    """
    responses = [synth_segment(synth_params_for_segment(spec), grid)
                 for spec in graph.nodes]
    result = cascade(responses)
    return extract_skew(result.response, max_delay=_delay_budget(graph))


@dataclass(frozen=True)
class ProfileComparison:
    """Error metrics between two skew profiles, seconds."""

    rms: float
    max_abs: float
    peak_to_peak_ref: float


def compare_profiles(a: SkewProfile, b: SkewProfile) -> ProfileComparison:
    """RMS / max-abs difference over both directions; ptp of the reference a."""
    if not a.grid.same_as(b.grid):
        raise GridMismatch("profiles must share one frequency grid")
    d = a.stacked() - b.stacked()
    ref = a.stacked()
    return ProfileComparison(
        rms=float(np.sqrt(np.mean(d * d))),
        max_abs=float(np.max(np.abs(d))),
        peak_to_peak_ref=float(ref.max() - ref.min()),
    )
