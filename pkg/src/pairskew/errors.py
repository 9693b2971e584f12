"""Exception types raised by pairskew.

Every error the library raises on bad input or unusable data derives from
PairskewError, so callers can catch one base class. The CLI maps ConfigError
to exit code 2, OSError to 3 and every other PairskewError to 4.
"""


class PairskewError(Exception):
    """Base class for all pairskew errors."""


class NonPositiveFrequency(PairskewError):
    """A frequency grid bound is zero or negative (DC is excluded)."""


class EmptyGrid(PairskewError):
    """Grid has fewer than two points or a degenerate span."""


class GridMismatch(PairskewError):
    """Two responses/profiles do not share the same frequency grid."""


class NegativeLength(PairskewError):
    """A physical segment length is zero or negative."""


class InconsistentPhysicalParams(PairskewError):
    """Declared (delta_tau, t_s) disagree with values derived from L/C."""


class NonPropagatingMode(PairskewError):
    """The L/C matrices do not yield two real propagating modes."""


class UncoupledDegenerate(PairskewError):
    """Mode-ratio denominator vanishes: the pair is effectively uncoupled.

    Callers may substitute p = 1, delta_t_s = 0, delta_tau = 0 (a symmetric,
    skew-free pair) where that limit makes sense.
    """


class DegenerateVelocities(PairskewError):
    """The two mode velocities coincide; the asymmetry estimate is 0/0."""


class GridTooCoarse(PairskewError):
    """Frequency spacing cannot resolve the phase slope without aliasing."""


class ZeroDeltaTau(PairskewError):
    """Resonance/zero formulas need a nonzero mode delay difference."""


class BadPortMap(PairskewError):
    """Port map is not a permutation of {1,2,3,4} or data is not 4-port."""


class TouchstoneError(PairskewError):
    """Base class for Touchstone ingestion problems."""


class TouchstoneSyntaxError(TouchstoneError):
    """Unparseable Touchstone content. Carries the 1-based line number."""

    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class UnsupportedParameter(TouchstoneError):
    """File holds non-S network parameters (Y, Z, G, H)."""


class NonMonotoneFrequency(TouchstoneError):
    """Frequencies in the file do not strictly increase."""


class InsufficientBandwidth(PairskewError):
    """Measured grid spans fewer than two skew oscillation periods."""


class NonConvergent(PairskewError):
    """Local refinement ended worse than the coarse-search optimum."""


class OverParameterized(PairskewError):
    """Fit template marks more unknown scalars than supported."""


class ConfigError(PairskewError):
    """Channel config document is malformed or has unknown keys."""
