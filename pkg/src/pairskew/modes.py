"""Lossless coupled-line eigenproblem and derived mode quantities.

Solves the second-order Telegrapher system d^2 V/dx^2 + w^2 L C V = 0 for a
two-conductor line. With P = L C, the propagation constants satisfy

    gamma^4 + w^2 (P11 + P22) gamma^2 + w^4 (P11 P22 - P12 P21) = 0,

so the two squared mode slownesses are s = ((P11 + P22) -/+ u) / 2 with

    u = sqrt((P11 - P22)^2 + 4 P12 P21).

Branch labels follow the "-/+ u" order: the c-mode takes the "-u" branch
(the faster mode), the pi-mode the "+u" branch. This fixed assignment beats
magnitude sorting near degeneracy and pins the sign of every derived delay
difference. The mode voltage ratios are

    R = (s - P11) / P12,

the asymmetry parameter is p = -R_c / R_pi (1 for symmetric lines), and
delta_t_s = 1 - sqrt(p) is the small skew parameter.

Two degenerate regimes are handled away from the generic formulas:

* exactly uncoupled inputs (all four off-diagonal L/C entries zero) raise
  UncoupledDegenerate: R is 0/0 and the physical limit is a skew-free pair;
* exactly symmetric inputs take the closed-form even/odd path
  (s = (L11 +/- L12)(C11 +/- C12)), returning p = 1 exactly. This matters
  because a symmetric homogeneous cross-section cancels P12 to roundoff and
  would otherwise shred the R ratio.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import LcMatrices, PhysicalLine, SegmentSpec
from .errors import (
    DegenerateVelocities,
    NegativeLength,
    NonPropagatingMode,
    UncoupledDegenerate,
)

__all__ = [
    "ModeSolution",
    "AsymmetryPerturbation",
    "solve_modes",
    "characteristic_residual",
    "estimate_delta_t_s",
    "derive_segment",
]

#: Below this magnitude (in (s/m)^2) the mode-ratio denominator P12 counts as zero.
RATIO_DENOMINATOR_FLOOR = 1e-30


@dataclass(frozen=True)
class ModeSolution:
    """All mode quantities of a lossless coupled pair.

    slowness_* is gamma/omega in s/m (frequency independent here); u is the
    characteristic discriminant in (s/m)^2; impedances are in ohm and are
    frequency independent because gamma is proportional to omega.
    """

    v_c: float
    v_pi: float
    slowness_c: float
    slowness_pi: float
    u: float
    r_c: float
    r_pi: float
    p: float
    delta_t_s: float
    z_c1: float
    z_c2: float
    z_pi1: float
    z_pi2: float


@dataclass(frozen=True)
class AsymmetryPerturbation:
    """Additive asymmetry of the L*C product matrix.

    delta_c_prime perturbs the (1,1) entry relative to the symmetric base
    value base_p22; delta_c_doubleprime perturbs the (1,2) entry relative to
    base_p21. Both must stay small against their base entries.
    """

    delta_c_prime: float
    delta_c_doubleprime: float
    base_p22: float
    base_p21: float

    def __post_init__(self):
        if abs(self.delta_c_prime) > 0.1 * abs(self.base_p22):
            warnings.warn("delta_c_prime exceeds 10% of base P22; "
                          "first-order estimates are unreliable", stacklevel=2)
        if abs(self.delta_c_doubleprime) > 0.1 * abs(self.base_p21):
            warnings.warn("delta_c_doubleprime exceeds 10% of base P21; "
                          "first-order estimates are unreliable", stacklevel=2)


def _p_entries(lc: LcMatrices):
    L, C = lc.L, lc.C
    p11 = L[0, 0] * C[0, 0] + L[0, 1] * C[1, 0]
    p12 = L[0, 0] * C[0, 1] + L[0, 1] * C[1, 1]
    p21 = L[1, 0] * C[0, 0] + L[1, 1] * C[1, 0]
    p22 = L[1, 0] * C[0, 1] + L[1, 1] * C[1, 1]
    return p11, p12, p21, p22


def _impedances(lc: LcMatrices, slowness: float, r: float) -> tuple:
    """Mode impedance pair (Z1, Z2) for one mode; nan where the ratio degenerates."""
    L = lc.L
    det_l = L[0, 1] * L[1, 0] - L[0, 0] * L[1, 1]
    d1 = slowness * (L[0, 1] * r - L[1, 1])
    d2 = slowness * (L[1, 0] - L[0, 0] * r)
    z1 = det_l / d1 if d1 != 0.0 else float("nan")
    z2 = r * det_l / d2 if d2 != 0.0 else float("nan")
    return z1, z2


def solve_modes(lc: LcMatrices) -> ModeSolution:
    """Solve the coupled-line eigenproblem for one L/C pair.

    Raises
    ------
    UncoupledDegenerate
        Exactly uncoupled inputs, or an asymmetric pair whose mode-ratio
        denominator P12 falls below RATIO_DENOMINATOR_FLOOR.
    NonPropagatingMode
        Complex characteristic roots or non-positive squared slowness.
    """
    if lc.is_uncoupled():
        raise UncoupledDegenerate(
            "L12 = L21 = C12 = C21 = 0: mode ratios are 0/0 for an uncoupled pair")

    if lc.is_symmetric():
        L, C = lc.L, lc.C
        s_even = (L[0, 0] + L[0, 1]) * (C[0, 0] + C[0, 1])
        s_odd = (L[0, 0] - L[0, 1]) * (C[0, 0] - C[0, 1])
        if s_even <= 0.0 or s_odd <= 0.0:
            raise NonPropagatingMode(
                f"even/odd squared slowness not positive: ({s_even}, {s_odd})")
        # c = "-u" branch = smaller squared slowness. Even-mode voltage ratio
        # is +1, odd-mode is -1; p = -R_c/R_pi = 1 exactly either way.
        if s_even <= s_odd:
            s_c, s_pi, r_c, r_pi = s_even, s_odd, 1.0, -1.0
        else:
            s_c, s_pi, r_c, r_pi = s_odd, s_even, -1.0, 1.0
        p = 1.0
        dts = 0.0
        u = s_pi - s_c
    else:
        p11, p12, p21, p22 = _p_entries(lc)
        if not all(np.isfinite(x) for x in (p11, p12, p21, p22)):
            raise NonPropagatingMode("non-finite L*C products")
        disc = (p11 - p22) ** 2 + 4.0 * p12 * p21
        if disc < 0.0:
            raise NonPropagatingMode(
                f"complex characteristic roots (discriminant {disc:.3e} < 0)")
        u = float(np.sqrt(disc))
        s_c = (p11 + p22 - u) / 2.0
        s_pi = (p11 + p22 + u) / 2.0
        if s_c <= 0.0 or s_pi <= 0.0:
            raise NonPropagatingMode(
                f"squared slowness not positive: ({s_c:.3e}, {s_pi:.3e})")
        if abs(p12) < RATIO_DENOMINATOR_FLOOR:
            raise UncoupledDegenerate(
                f"mode-ratio denominator |P12| = {abs(p12):.3e} below "
                f"{RATIO_DENOMINATOR_FLOOR}; treat as an uncoupled pair")
        r_c = (s_c - p11) / p12
        r_pi = (s_pi - p11) / p12
        if r_pi == 0.0:
            raise NonPropagatingMode("pi-mode voltage ratio vanishes; p undefined")
        p = -r_c / r_pi
        if p <= 0.0:
            raise NonPropagatingMode(f"asymmetry parameter p = {p:.3e} not positive")
        dts = 1.0 - float(np.sqrt(p))

    sl_c = float(np.sqrt(s_c))
    sl_pi = float(np.sqrt(s_pi))
    z_c1, z_c2 = _impedances(lc, sl_c, r_c)
    z_pi1, z_pi2 = _impedances(lc, sl_pi, r_pi)
    return ModeSolution(
        v_c=1.0 / sl_c, v_pi=1.0 / sl_pi,
        slowness_c=sl_c, slowness_pi=sl_pi,
        u=float(u), r_c=float(r_c), r_pi=float(r_pi),
        p=float(p), delta_t_s=float(dts),
        z_c1=z_c1, z_c2=z_c2, z_pi1=z_pi1, z_pi2=z_pi2,
    )


def characteristic_residual(lc: LcMatrices, gamma_over_omega: float) -> float:
    """Dimensionless residual of the characteristic polynomial.

    Evaluates |s^4 - (P11+P22) s^2 + (P11 P22 - P12 P21)| with s the given
    slowness (gamma/omega), normalized by max|P_ij|^2; the omega scaling
    cancels, so the result is frequency independent. Exact eigen-slownesses
    give ~1e-16; anything above ~1e-10 is not a mode of this line.
    """
    p11, p12, p21, p22 = _p_entries(lc)
    s2 = gamma_over_omega * gamma_over_omega
    resid = s2 * s2 - (p11 + p22) * s2 + (p11 * p22 - p12 * p21)
    scale = max(abs(p11), abs(p12), abs(p21), abs(p22)) ** 2
    if scale == 0.0:
        return float("inf")
    return abs(resid) / scale


def estimate_delta_t_s(pert: AsymmetryPerturbation, v_c: float, v_pi: float) -> float:
    """First-order skew-parameter estimate from the asymmetry perturbation.

    Returns (delta_c' + delta_c'') / (v_c^-2 - v_pi^-2). The estimate is
    first-order exact only for perturbations of the diagonal product entry
    (delta_c_doubleprime = 0); an off-diagonal perturbation enters the exact
    1 - sqrt(p) only at second order, so a nonzero delta_c_doubleprime
    contributes a spurious first-order term here. Tests exercising quadratic
    convergence therefore use capacitive-coupling-only asymmetry families.
    """
    den = 1.0 / (v_c * v_c) - 1.0 / (v_pi * v_pi)
    if abs(den) < 1e-30:
        raise DegenerateVelocities(
            f"v_c^-2 - v_pi^-2 = {den:.3e}; mode velocities coincide")
    return (pert.delta_c_prime + pert.delta_c_doubleprime) / den


def derive_segment(lc: LcMatrices, length: float,
                   pert: AsymmetryPerturbation | None = None,
                   t_l_prepend: float = 0.0) -> SegmentSpec:
    """Build a strongly coupled SegmentSpec from physical L/C and length.

    delta_tau = length * (slowness_pi - slowness_c), the pi-mode minus c-mode
    transit time (positive by branch convention). t_s is the segment's exact
    zero-frequency intra-pair skew, delta_tau * (1 - p) / (1 + p); with an
    explicit perturbation given, the first-order value
    estimate_delta_t_s(...) * delta_tau is used instead.
    """
    if length <= 0.0:
        raise NegativeLength(f"segment length must be > 0 m, got {length}")
    sol = solve_modes(lc)
    delta_tau = length * (sol.slowness_pi - sol.slowness_c)
    if delta_tau == 0.0:
        raise UncoupledDegenerate(
            "mode transit times coincide (homogeneous cross-section); "
            "the segment has no strongly-coupled character")
    if pert is not None:
        dts = estimate_delta_t_s(pert, sol.v_c, sol.v_pi)
        t_s = dts * delta_tau
    else:
        t_s = delta_tau * (1.0 - sol.p) / (1.0 + sol.p)
    return SegmentSpec.sc(
        delta_tau=delta_tau, t_s=t_s,
        physical=PhysicalLine(lc=lc, length=float(length),
                              t_l_prepend=float(t_l_prepend)),
    )
