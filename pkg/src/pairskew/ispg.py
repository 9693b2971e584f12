"""Intra-pair skew propagation graph: cumulative skew of cascaded channels.

A channel is an ordered sequence of LC/SC stages, indexed 1..N left to right.
The cumulative skew at the receiving end is evaluated by a counter sweep
against the signal direction: initialize phase Phi = 0 and skew S = 0, then
move from the far (receiving) end toward the launch end,

  at an SC stage:  S += t_s sinc(pi f dt) cos(Phi + pi f dt);  Phi += 2 pi f dt
  at an LC stage:  S += t_l cos(Phi)                           (Phi unchanged)

At the launch end S equals the closed double-sum form: with theta_k = 0 for
LC and 2 pi f dt_k for SC, and Theta_m the suffix sum of theta from stage m,

  S = sum_i [ t_l_i cos(Theta_{i+1}) + t_s_i sinc(pi f dt_i) cos(Theta_{i+1} + pi f dt_i) ]

(an LC stage's own theta is zero, so including it in the suffix is harmless).
Phi accumulates the signed delta_tau of each stage.

``skew_21`` sweeps the node order as given (signal left to right); ``skew_12``
sweeps the reversed order. For a single stage the two coincide; for mixed
channels they differ: flat skews picked up after the coupled stages arrive
unmodulated, flat skews picked up before them are modulated by the
accumulated mode-split phase.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from .core import FrequencyGrid, SegmentSpec, SkewProfile
from .errors import InsufficientBandwidth, NonConvergent, OverParameterized
from .sparam import sinc

__all__ = [
    "IspgGraph",
    "SweepStep",
    "SweepTrace",
    "counter_sweep",
    "total_skew_direct",
    "evaluate_profile",
    "export_graph",
    "parse_graph",
    "TemplateNode",
    "FitResult",
    "fit_parameters",
]


@dataclass(frozen=True)
class IspgGraph:
    """Ordered stage sequence; node order is the physical cascade order.

    ``direction`` states which way the signal travels relative to the node
    order for single-direction evaluators (counter_sweep, total_skew_direct);
    reversing the direction reverses the evaluation order, not the node list.
    """

    nodes: tuple
    direction: str = "left_to_right"

    def __init__(self, nodes: Sequence[SegmentSpec], direction: str = "left_to_right"):
        nodes = tuple(nodes)
        if len(nodes) < 1:
            raise ValueError("a graph needs at least one node")
        for n in nodes:
            if not isinstance(n, SegmentSpec):
                raise TypeError(f"nodes must be SegmentSpec, got {type(n)!r}")
        if direction not in ("left_to_right", "right_to_left"):
            raise ValueError(f"bad direction {direction!r}")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "direction", direction)

    def __len__(self) -> int:
        return len(self.nodes)

    def reversed(self) -> "IspgGraph":
        """The physically mirrored channel (node list reversed)."""
        return IspgGraph(tuple(reversed(self.nodes)), self.direction)


def _expanded(nodes: Sequence[SegmentSpec]):
    """Flatten nodes to (kind, t_l, delta_tau, t_s); a physical prepend delay
    becomes an explicit LC stage in front of its SC stage."""
    out = []
    for n in nodes:
        if n.kind == "SC" and n.physical is not None and n.physical.t_l_prepend != 0.0:
            out.append(("LC", n.physical.t_l_prepend, 0.0, 0.0))
        if n.kind == "LC":
            out.append(("LC", n.t_l, 0.0, 0.0))
        else:
            out.append(("SC", 0.0, n.delta_tau, n.t_s))
    return out


@dataclass(frozen=True)
class SweepStep:
    """One counter-sweep step record. node_index is 1-based, leftmost = 1."""

    node_index: int
    kind: str
    phase_before: float
    contribution: float
    phase_after: float


SweepTrace = tuple  # tuple[SweepStep, ...]; steps in evaluation (sweep) order


def counter_sweep(graph: IspgGraph, f: float) -> tuple:
    """Evaluate the cumulative skew at one frequency by the sweep rule.

    Returns (total_skew_seconds, trace). The trace records every step in
    sweep order; phase changes only at SC steps, by 2 pi f delta_tau.
    """
    if f <= 0.0:
        raise ValueError(f"frequency must be > 0, got {f}")
    nodes = list(enumerate(_expanded(graph.nodes), start=1))
    if graph.direction == "left_to_right":
        order = list(reversed(nodes))  # evaluate at the right end, sweep right->left
    else:
        order = nodes
    phi = 0.0
    total = 0.0
    steps = []
    for idx, (kind, t_l, dt, t_s) in order:
        phase_before = phi
        if kind == "LC":
            contrib = t_l * np.cos(phi)
        else:
            half = np.pi * f * dt
            contrib = t_s * float(sinc(half)) * np.cos(phi + half)
            phi = phi + 2.0 * half
        total += contrib
        steps.append(SweepStep(node_index=idx, kind=kind,
                               phase_before=phase_before,
                               contribution=float(contrib),
                               phase_after=phi))
    return float(total), tuple(steps)


def total_skew_direct(graph: IspgGraph, f: float) -> float:
    """Closed double-sum form of the cumulative skew (no sweep state).

    Uses suffix phase sums Theta (theta_k = 0 for LC, 2 pi f delta_tau_k for
    SC, accumulated from the evaluation end); bit-compatible with
    counter_sweep up to summation order.
    """
    if f <= 0.0:
        raise ValueError(f"frequency must be > 0, got {f}")
    nodes = _expanded(graph.nodes)
    if graph.direction == "right_to_left":
        nodes = list(reversed(nodes))
    n = len(nodes)
    # theta suffix sums: theta_suffix[i] = sum of theta over stages i+1..N,
    # accumulated right-to-left exactly like the sweep's running phase.
    theta_suffix = np.zeros(n + 1)
    for i in range(n - 1, -1, -1):
        kind, _, dt, _ = nodes[i]
        th = 2.0 * np.pi * f * dt if kind == "SC" else 0.0
        theta_suffix[i] = theta_suffix[i + 1] + th
    total = 0.0
    for i, (kind, t_l, dt, t_s) in enumerate(nodes):
        if kind == "LC":
            total += t_l * np.cos(theta_suffix[i + 1])
        else:
            half = np.pi * f * dt
            total += t_s * float(sinc(half)) * np.cos(theta_suffix[i + 1] + half)
    return float(total)


def _profile_one_direction(nodes, f: np.ndarray) -> np.ndarray:
    """Vectorized sweep over a frequency array, nodes in signal order."""
    total = np.zeros_like(f)
    phi = np.zeros_like(f)
    for kind, t_l, dt, t_s in reversed(nodes):
        if kind == "LC":
            total = total + t_l * np.cos(phi)
        else:
            half = np.pi * f * dt
            total = total + t_s * sinc(half) * np.cos(phi + half)
            phi = phi + 2.0 * half
    return total


def evaluate_profile(graph: IspgGraph, grid: FrequencyGrid) -> SkewProfile:
    """Analytic skew profile of the channel, both directions.

    skew_21 sweeps the node order as given (launch at the left), skew_12 the
    reversed order (launch at the right), independent of ``graph.direction``.
    """
    nodes = _expanded(graph.nodes)
    f = grid.points
    return SkewProfile(
        grid=grid,
        skew_21=_profile_one_direction(nodes, f),
        skew_12=_profile_one_direction(list(reversed(nodes)), f),
    )


# ---------------------------------------------------------------------------
# Graph text export / import (DOT)

def _fmt_ps(x: float) -> str:
    return repr(x * 1e12)


def export_graph(graph: IspgGraph) -> str:
    """Render the channel as a Graphviz DOT document.

    LC stages are boxes labeled t_l, SC stages circles labeled (delta_tau,
    t_s); solid edges carry the signal left to right, the dashed edge
    annotates the right-to-left evaluation sweep. Machine-readable stage
    parameters ride along as node attributes (picoseconds), so
    :func:`parse_graph` can reconstruct the node sequence.
    """
    lines = ["digraph ispg {", "  rankdir=LR;"]
    names = []
    for i, n in enumerate(graph.nodes, start=1):
        name = f"n{i}"
        names.append(name)
        if n.kind == "LC":
            lines.append(
                f'  {name} [shape=box kind="LC" t_l_ps="{_fmt_ps(n.t_l)}" '
                f'label="t_l = {n.t_l * 1e12:g} ps"];')
        else:
            prepend = n.physical.t_l_prepend if n.physical is not None else 0.0
            extra = f' t_l_prepend_ps="{_fmt_ps(prepend)}"' if prepend else ""
            lines.append(
                f'  {name} [shape=circle kind="SC" '
                f'delta_tau_ps="{_fmt_ps(n.delta_tau)}" t_s_ps="{_fmt_ps(n.t_s)}"'
                f'{extra} label="dt = {n.delta_tau * 1e12:g} ps\\n'
                f't_s = {n.t_s * 1e12:g} ps"];')
    for a, b in zip(names, names[1:]):
        lines.append(f"  {a} -> {b};")
    lines.append(f'  sweep [shape=plaintext label="evaluation sweep"];')
    lines.append(f'  {names[-1]} -> {names[0]} '
                 f'[style=dashed constraint=false color=red label="sweep"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def parse_graph(text: str) -> IspgGraph:
    """Reconstruct the node sequence from a document written by export_graph."""
    import re

    node_re = re.compile(r'^\s*(n\d+)\s*\[(.*)\];\s*$')
    attr_re = re.compile(r'(\w+)="([^"]*)"')
    nodes = {}
    for line in text.splitlines():
        m = node_re.match(line)
        if not m:
            continue
        name, body = m.groups()
        attrs = dict(attr_re.findall(body))
        if "kind" not in attrs:
            continue
        idx = int(name[1:])
        if attrs["kind"] == "LC":
            nodes[idx] = SegmentSpec.lc(float(attrs["t_l_ps"]) * 1e-12)
        else:
            nodes[idx] = SegmentSpec.sc(
                delta_tau=float(attrs["delta_tau_ps"]) * 1e-12,
                t_s=float(attrs["t_s_ps"]) * 1e-12,
            )
    if not nodes:
        raise ValueError("no ispg nodes found in DOT text")
    return IspgGraph(tuple(nodes[i] for i in sorted(nodes)))


# ---------------------------------------------------------------------------
# Parameter fitting against a measured skew profile

@dataclass(frozen=True)
class TemplateNode:
    """Stage template for fitting: None marks an unknown scalar.

    LC stages may leave t_l unknown; SC stages may leave t_s and/or delta_tau
    unknown. Unknown delta_tau values search within +-10% of the caller's
    hint; unknown t parameters are solved exactly (the skew model is affine
    in them) and constrained to [-10, 10] ps.
    """

    kind: str
    t_l: Optional[float] = None
    delta_tau: Optional[float] = None
    t_s: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("LC", "SC"):
            raise ValueError(f"kind must be 'LC' or 'SC', got {self.kind!r}")


@dataclass(frozen=True)
class FitResult:
    graph: IspgGraph
    residual_rms: float


MAX_UNKNOWNS = 5
T_BOUND = 10e-12          # |t| search bound, seconds
DTAU_GRID_STEP = 0.5e-12  # coarse step for unknown delta_tau, seconds
DTAU_HINT_SPAN = 0.10     # +-10% of the hint


def _template_unknowns(template: Sequence[TemplateNode]):
    t_unknowns = []    # (node_idx, field)
    dt_unknowns = []   # node_idx
    for i, tn in enumerate(template):
        if tn.kind == "LC":
            if tn.t_l is None:
                t_unknowns.append((i, "t_l"))
        else:
            if tn.t_s is None:
                t_unknowns.append((i, "t_s"))
            if tn.delta_tau is None:
                dt_unknowns.append(i)
    return t_unknowns, dt_unknowns


def _build_graph(template, t_vals, dt_vals, t_unknowns, dt_unknowns) -> IspgGraph:
    t_map = {key: v for key, v in zip(t_unknowns, t_vals)}
    dt_map = {i: v for i, v in zip(dt_unknowns, dt_vals)}
    nodes = []
    for i, tn in enumerate(template):
        if tn.kind == "LC":
            t_l = t_map.get((i, "t_l"), tn.t_l)
            nodes.append(SegmentSpec.lc(t_l))
        else:
            dt = dt_map.get(i, tn.delta_tau)
            t_s = t_map.get((i, "t_s"), tn.t_s)
            nodes.append(SegmentSpec.sc(delta_tau=dt, t_s=t_s))
    return IspgGraph(tuple(nodes))


def _residual_rms(graph: IspgGraph, measured: SkewProfile) -> float:
    model = evaluate_profile(graph, measured.grid)
    d = model.stacked() - measured.stacked()
    return float(np.sqrt(np.mean(d * d)))


def _solve_linear_ts(template, dt_vals, t_unknowns, dt_unknowns,
                     measured: SkewProfile):
    """Exact least-squares for the t unknowns at fixed delta_tau values.

    The profile is affine in every t parameter: evaluate the zero-t baseline
    and one basis profile per unknown, solve, then project onto the bounds.
    """
    zeros = [0.0] * len(t_unknowns)
    base = evaluate_profile(
        _build_graph(template, zeros, dt_vals, t_unknowns, dt_unknowns),
        measured.grid).stacked().ravel()
    cols = []
    for j in range(len(t_unknowns)):
        unit = list(zeros)
        unit[j] = 1.0
        prof = evaluate_profile(
            _build_graph(template, unit, dt_vals, t_unknowns, dt_unknowns),
            measured.grid).stacked().ravel()
        cols.append(prof - base)
    target = measured.stacked().ravel() - base
    a = np.column_stack(cols)
    sol, *_ = np.linalg.lstsq(a, target, rcond=None)
    return np.clip(sol, -T_BOUND, T_BOUND)


def fit_parameters(measured: SkewProfile, template: Sequence[TemplateNode],
                   delta_tau_hint: float) -> FitResult:
    """Fit unknown stage parameters to a measured skew profile.

    Deterministic two-stage search: a coarse scan over unknown delta_tau
    values (+-10% of the hint, 0.5 ps step) with an exact linear solve for
    the t parameters at each candidate, then Nelder-Mead refinement of all
    unknowns from the best coarse point (bounds enforced by projection).
    Both skew directions are fitted jointly with equal weight.

    Raises OverParameterized for more than MAX_UNKNOWNS unknown scalars,
    InsufficientBandwidth when the measured span covers fewer than two
    oscillation periods (span < 2/delta_tau_hint), NonConvergent if the
    refinement somehow ends above the coarse optimum.
    """
    template = list(template)
    t_unknowns, dt_unknowns = _template_unknowns(template)
    n_unknown = len(t_unknowns) + len(dt_unknowns)
    if n_unknown > MAX_UNKNOWNS:
        raise OverParameterized(
            f"{n_unknown} unknown scalars; at most {MAX_UNKNOWNS} supported")
    if n_unknown == 0:
        g = _build_graph(template, [], [], [], [])
        return FitResult(graph=g, residual_rms=_residual_rms(g, measured))
    if delta_tau_hint <= 0.0:
        raise ValueError("delta_tau_hint must be > 0")
    span = float(measured.grid.points[-1] - measured.grid.points[0])
    if span < 2.0 / delta_tau_hint:
        raise InsufficientBandwidth(
            f"measured span {span:.4g} Hz covers fewer than two oscillation "
            f"periods of delta_tau = {delta_tau_hint:.4g} s "
            f"(needs >= {2.0 / delta_tau_hint:.4g} Hz)")

    lo = delta_tau_hint * (1.0 - DTAU_HINT_SPAN)
    hi = delta_tau_hint * (1.0 + DTAU_HINT_SPAN)
    n_steps = max(2, int(np.floor((hi - lo) / DTAU_GRID_STEP)) + 1)
    dt_candidates = lo + DTAU_GRID_STEP * np.arange(n_steps)
    dt_candidates = dt_candidates[dt_candidates <= hi]

    best = None
    if dt_unknowns:
        grids = np.meshgrid(*([dt_candidates] * len(dt_unknowns)), indexing="ij")
        combos = np.stack([g.ravel() for g in grids], axis=-1)
    else:
        combos = np.zeros((1, 0))
    for dt_vals in combos:
        t_vals = (_solve_linear_ts(template, dt_vals, t_unknowns, dt_unknowns,
                                   measured)
                  if t_unknowns else np.zeros(0))
        g = _build_graph(template, t_vals, dt_vals, t_unknowns, dt_unknowns)
        r = _residual_rms(g, measured)
        if best is None or r < best[0]:
            best = (r, np.asarray(t_vals, float), np.asarray(dt_vals, float))

    r0, t0, dt0 = best

    def objective(x):
        tv = np.clip(x[:len(t_unknowns)], -T_BOUND, T_BOUND)
        dv = np.clip(x[len(t_unknowns):], lo, hi)
        g = _build_graph(template, tv, dv, t_unknowns, dt_unknowns)
        return _residual_rms(g, measured)

    x0 = np.concatenate([t0, dt0])
    res = minimize(objective, x0, method="Nelder-Mead",
                   options={"xatol": 1e-16, "fatol": 1e-18, "maxiter": 2000})
    if res.fun <= r0:
        tv = np.clip(res.x[:len(t_unknowns)], -T_BOUND, T_BOUND)
        dv = np.clip(res.x[len(t_unknowns):], lo, hi)
        graph = _build_graph(template, tv, dv, t_unknowns, dt_unknowns)
        return FitResult(graph=graph, residual_rms=float(res.fun))
    if r0 is None or not np.isfinite(r0):
        raise NonConvergent("no finite residual found over the search grid")
    # Refinement found nothing better; the coarse optimum stands.
    graph = _build_graph(template, t0, dt0, t_unknowns, dt_unknowns)
    return FitResult(graph=graph, residual_rms=float(r0))
