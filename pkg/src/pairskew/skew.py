"""Skew extraction from S-parameter phases, closed forms and special cases.

The extracted skews are defined as unwrapped-phase differences divided by
2 pi f:

    skew_21(f) = [phase(ssd21) - phase(ssd41)] / (2 pi f)   (left -> right)
    skew_12(f) = [phase(ssd12) - phase(ssd32)] / (2 pi f)   (right -> left)

Unwrapping is used instead of per-point principal values because the literal
principal-value division produces 2 pi / (2 pi f) artifacts at every phase
wrap. The grid must therefore be dense enough that the true phase moves less
than pi between adjacent points; when the total delay budget of a channel is
known, require grid step < 1 / (4 * total_delay).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FourPortResponse, FrequencyGrid, MixedModeResponse, SkewProfile
from .errors import GridTooCoarse, ZeroDeltaTau
from .sparam import sinc, to_mixed_mode

__all__ = [
    "UnwrappedPhase",
    "unwrap",
    "nyquist_max_step",
    "extract_skew",
    "closed_form_skew",
    "delta_tau_from_mixed",
    "resonance_freqs",
    "skew_zero_freqs",
]

#: A wrapped phase jump closer than this to pi is ambiguous and rejected.
PI_JUMP_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class UnwrappedPhase:
    """Continuous phase (radians) over a frequency grid, no 2-pi jumps."""

    grid: FrequencyGrid
    phase: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.phase, dtype=float)
        if a.shape != (len(self.grid),):
            raise ValueError("phase length must match the grid")
        a = np.array(a, copy=True)
        a.setflags(write=False)
        object.__setattr__(self, "phase", a)


def unwrap(series: np.ndarray, grid: FrequencyGrid) -> UnwrappedPhase:
    """Unwrap the phase of a complex series along the frequency axis.

    The first point anchors to its principal value; successive differences
    are wrapped into (-pi, pi). A difference within PI_JUMP_TOL of +-pi is
    ambiguous (the true phase step cannot be told from its alias) and raises
    GridTooCoarse. Satisfies unwrap(conj(series)) = -unwrap(series).
    """
    z = np.asarray(series)
    if z.shape != (len(grid),):
        raise ValueError("series length must match the grid")
    raw = np.angle(z)
    d = np.diff(raw)
    wrapped = (d + np.pi) % (2.0 * np.pi) - np.pi
    near_pi = np.abs(np.abs(wrapped) - np.pi) < PI_JUMP_TOL
    if np.any(near_pi):
        k = int(np.argmax(near_pi))
        raise GridTooCoarse(
            f"phase step between grid points {k} and {k + 1} is within "
            f"{PI_JUMP_TOL} of pi; halve the grid spacing")
    out = np.empty_like(raw)
    out[0] = raw[0]
    np.cumsum(wrapped, out=out[1:])
    out[1:] += raw[0]
    return UnwrappedPhase(grid=grid, phase=out)


def nyquist_max_step(total_delay: float) -> float:
    """Largest safe grid step for a channel with the given total delay budget.

    The guard is 1/(4*total_delay): a factor 2 under the aliasing limit so the
    unwrap never sees steps near pi even with skew-induced phase ripple.
    """
    return 1.0 / (4.0 * abs(total_delay))


def extract_skew(resp: FourPortResponse, max_delay: float | None = None) -> SkewProfile:
    """Intra-pair skew in both directions from a 4-port response.

    Parameters
    ----------
    resp : FourPortResponse
    max_delay : float, optional
        Total delay budget of the network (common delays + |delta_tau| +
        flat skews), if known. When given, the grid spacing is checked
        against nyquist_max_step and GridTooCoarse is raised on violation;
        without it only the per-step pi-jump guard applies.
    """
    if max_delay is not None and resp.grid.max_spacing > nyquist_max_step(max_delay):
        raise GridTooCoarse(
            f"grid step {resp.grid.max_spacing:.4g} Hz exceeds the safe step "
            f"{nyquist_max_step(max_delay):.4g} Hz for a total delay of "
            f"{max_delay:.4g} s")
    mm = to_mixed_mode(resp)
    w = 2.0 * np.pi * resp.grid.points
    s21 = (unwrap(mm.ssd21, resp.grid).phase - unwrap(mm.ssd41, resp.grid).phase) / w
    s12 = (unwrap(mm.ssd12, resp.grid).phase - unwrap(mm.ssd32, resp.grid).phase) / w
    return SkewProfile(grid=resp.grid, skew_21=s21, skew_12=s12)


def closed_form_skew(t_l: float, delta_tau: float, t_s: float,
                     grid: FrequencyGrid) -> SkewProfile:
    """First-order skew of a flat-delay stage cascaded with a coupled stage.

        skew_12(f) = t_l + t_s sinc(2 pi f delta_tau)
        skew_21(f) = cos(2 pi f delta_tau) t_l + t_s sinc(2 pi f delta_tau)

    The damped oscillatory term is the coupled stage's own skew; traversing
    the flat stage last (right -> left) merely offsets it by t_l, while
    traversing it first modulates t_l by the full coupled-stage phase. This is
    the small-asymmetry approximation; extract_skew on synthesized responses
    is the exact counterpart.
    """
    x = 2.0 * np.pi * grid.points * delta_tau
    damped = t_s * sinc(x)
    return SkewProfile(
        grid=grid,
        skew_21=np.cos(x) * t_l + damped,
        skew_12=np.full(len(grid), t_l) + damped,
    )


def delta_tau_from_mixed(mm: MixedModeResponse, signed: bool = False) -> np.ndarray:
    """Mode delay difference vs frequency from mixed-mode phases.

    Returns |phase(sdd21) - phase(scc21)| / (2 pi f) per grid point (the
    absolute value is applied after unwrapping). With ``signed=True`` the
    absolute value is skipped; the sign then tells which of the two modes the
    differential excitation rides on (branch diagnostics).

    The pointwise value carries an O(delta_t_s^2) oscillatory bias,
    delta_tau * (delta_t_s^2/2) * sinc(2 pi f delta_tau); reduce over the grid
    (median) to estimate delta_tau itself.
    """
    w = 2.0 * np.pi * mm.grid.points
    diff = (unwrap(mm.sdd21, mm.grid).phase - unwrap(mm.scc21, mm.grid).phase) / w
    return diff if signed else np.abs(diff)


def resonance_freqs(delta_tau: float, n_max: int) -> np.ndarray:
    """Frequencies of through-transmission minima / coupling maxima.

    f_n = 1/(2 delta_tau) + (n-1)/delta_tau for n = 1..n_max.
    """
    if delta_tau <= 0.0:
        raise ZeroDeltaTau(f"delta_tau must be > 0, got {delta_tau}")
    if n_max < 1:
        return np.empty(0)
    n = np.arange(1, n_max + 1, dtype=float)
    return 1.0 / (2.0 * delta_tau) + (n - 1.0) / delta_tau


def skew_zero_freqs(delta_tau: float, n_max: int) -> np.ndarray:
    """Frequencies where the coupled stage's own skew crosses zero.

    f0 = n/(2 delta_tau) for n = 1..n_max.
    """
    if delta_tau <= 0.0:
        raise ZeroDeltaTau(f"delta_tau must be > 0, got {delta_tau}")
    if n_max < 1:
        return np.empty(0)
    n = np.arange(1, n_max + 1, dtype=float)
    return n / (2.0 * delta_tau)
