"""Command-line front end.

Verbs:
  synth    config -> cascaded channel S-parameters (.s4p)
  skew     .s4p -> skew profile, delta-tau profile and resonance tables
  ispg     config -> analytic skew profile (+ optional DOT graph export)
  compare  config -> analytic profile vs exact cascade oracle + error metrics
  fit      .s4p + template config -> fitted stage parameters
  graph    config -> DOT graph export only

Exit codes: 0 ok (compare: within tolerance), 2 config error, 3 I/O error,
4 numeric/data error, 5 compare outside tolerance. Human diagnostics go to
stderr; '-o -' streams the JSON envelope to stdout. Output tables are in
ps/GHz unless --si is given. ISPG_THREADS caps the worker threads used for
the oracle evaluation (the rest of the library is vectorized, single thread).
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .cascade import compare_profiles, oracle_skew
from .config import dump_config, load_config, load_template
from .core import FrequencyGrid, SkewProfile, make_grid
from .errors import ConfigError, PairskewError
from .ispg import evaluate_profile, export_graph, fit_parameters
from .skew import delta_tau_from_mixed, extract_skew, resonance_freqs
from .sparam import synth_params_for_segment, synth_segment, to_mixed_mode
from .touchstone import (
    PortMap,
    delta_tau_table,
    export_csv,
    export_json,
    read_touchstone,
    resonance_table,
    skew_profile_table,
    to_four_port,
    write_touchstone,
)

N_RESONANCES = 10


def _read_text(path: str) -> str:
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        return fh.read()


def _write_text(path: str, text: str):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _parse_grid_flag(text: str) -> FrequencyGrid:
    parts = text.split(":")
    if len(parts) not in (3, 4):
        raise ConfigError("--grid must be START_HZ:STOP_HZ:POINTS[:log]")
    try:
        start, stop = float(parts[0]), float(parts[1])
        points = int(parts[2])
    except ValueError:
        raise ConfigError(f"bad --grid value {text!r}") from None
    spacing = parts[3] if len(parts) == 4 else "linear"
    return make_grid(start, stop, points, spacing)


def _grid_from(args, cfg_grid) -> FrequencyGrid:
    if getattr(args, "grid", None):
        return _parse_grid_flag(args.grid)
    if cfg_grid is None:
        raise ConfigError("no grid: give one in the config or via --grid")
    return cfg_grid


def _emit_tables(args, tables):
    """tables: list of (name, columns, rows). '-o -' => one JSON envelope."""
    meta = {"tool": "pairskew", "version": __version__,
            "units": "si" if args.si else "ps_ghz"}
    if args.output == "-":
        doc = [{"name": name, "columns": list(cols), "rows": [list(r) for r in rows]}
               for name, cols, rows in tables]
        import json
        sys.stdout.write(json.dumps({"meta": meta, "tables": doc},
                                    sort_keys=True, separators=(",", ":")) + "\n")
        return
    if args.format == "json":
        for name, cols, rows in tables:
            path = f"{args.output}_{name}.json" if len(tables) > 1 else f"{args.output}"
            _write_text(path, export_json({**meta, "table": name}, cols, rows))
    else:
        for name, cols, rows in tables:
            path = f"{args.output}_{name}.csv" if len(tables) > 1 else f"{args.output}"
            _write_text(path, export_csv(cols, rows))


def _oracle_profile(graph, grid) -> SkewProfile:
    """Oracle evaluation, chunked across ISPG_THREADS workers when set > 1."""
    threads = int(os.environ.get("ISPG_THREADS", "1") or "1")
    n = len(grid)
    if threads <= 1 or n < 4 * threads:
        return oracle_skew(graph, grid)
    bounds = np.linspace(0, n, threads + 1).astype(int)
    # chunks overlap by one point so each piece anchors its own unwrap;
    # skew values are pointwise, so stitching is exact.
    pieces = []
    for a, b in zip(bounds[:-1], bounds[1:]):
        lo = max(0, a - 1)
        pieces.append((lo, a, b, FrequencyGrid(grid.points[lo:b])))
    with ThreadPoolExecutor(max_workers=threads) as pool:
        profs = list(pool.map(lambda p: oracle_skew(graph, p[3]), pieces))
    s21 = np.concatenate([pr.skew_21[a - lo:] for (lo, a, b, _), pr in zip(pieces, profs)])
    s12 = np.concatenate([pr.skew_12[a - lo:] for (lo, a, b, _), pr in zip(pieces, profs)])
    return SkewProfile(grid=grid, skew_21=s21, skew_12=s12)


def cmd_synth(args) -> int:
    cfg = load_config(_read_text(args.config))
    grid = _grid_from(args, cfg.grid)
    from .cascade import cascade

    responses = [synth_segment(synth_params_for_segment(s), grid)
                 for s in cfg.graph.nodes]
    resp = cascade(responses).response
    text = write_touchstone(resp, fmt=args.touchstone_format)
    if args.output == "-":
        sys.stdout.write(text)
    else:
        _write_text(args.output, text)
    return 0


def cmd_skew(args) -> int:
    doc = read_touchstone(_read_text(args.s4p), n_ports=4,
                          column_major=args.column_major)
    resp = to_four_port(doc, PortMap.parse(args.portmap))
    profile = extract_skew(resp)
    mm = to_mixed_mode(resp)
    dtau = delta_tau_from_mixed(mm)
    dtau_med = float(np.median(dtau))
    res = resonance_freqs(dtau_med, N_RESONANCES)
    name_cols_rows = [
        ("skew",) + skew_profile_table(profile, si=args.si),
        ("dtau",) + delta_tau_table(resp.grid, dtau, si=args.si),
        ("resonances",) + resonance_table(res, si=args.si),
    ]
    _emit_tables(args, name_cols_rows)
    if not resp.reciprocal:
        print("note: measured data is not reciprocal; directions differ",
              file=sys.stderr)
    return 0


def cmd_ispg(args) -> int:
    cfg = load_config(_read_text(args.config))
    grid = _grid_from(args, cfg.grid)
    profile = evaluate_profile(cfg.graph, grid)
    _emit_tables(args, [("skew",) + skew_profile_table(profile, si=args.si)])
    if args.dot:
        _write_text(args.dot, export_graph(cfg.graph))
    return 0


def cmd_compare(args) -> int:
    cfg = load_config(_read_text(args.config))
    grid = _grid_from(args, cfg.grid)
    analytic = evaluate_profile(cfg.graph, grid)
    oracle = _oracle_profile(cfg.graph, grid)
    metrics = compare_profiles(analytic, oracle)
    rel = metrics.rms / metrics.peak_to_peak_ref if metrics.peak_to_peak_ref else 0.0
    cols = ["freq_ghz", "analytic21_ps", "analytic12_ps", "oracle21_ps",
            "oracle12_ps"] if not args.si else \
           ["freq_hz", "analytic21_s", "analytic12_s", "oracle21_s", "oracle12_s"]
    fs = 1.0 if args.si else 1e-9
    ts = 1.0 if args.si else 1e12
    rows = [(float(f * fs), float(a * ts), float(b * ts), float(c * ts),
             float(d * ts))
            for f, a, b, c, d in zip(grid.points, analytic.skew_21,
                                     analytic.skew_12, oracle.skew_21,
                                     oracle.skew_12)]
    met_rows = [("rms_ps", metrics.rms * 1e12),
                ("max_abs_ps", metrics.max_abs * 1e12),
                ("peak_to_peak_ref_ps", metrics.peak_to_peak_ref * 1e12),
                ("rms_over_ptp", rel)]
    _emit_tables(args, [("profiles", cols, rows),
                        ("metrics", ["metric", "value"], met_rows)])
    print(f"rms/ptp = {rel:.4%} (tolerance {args.tolerance:.4%})",
          file=sys.stderr)
    return 0 if rel <= args.tolerance else 5


def cmd_fit(args) -> int:
    template, hint, _ = load_template(_read_text(args.template))
    doc = read_touchstone(_read_text(args.s4p), n_ports=4,
                          column_major=args.column_major)
    resp = to_four_port(doc, PortMap.parse(args.portmap))
    profile = extract_skew(resp)
    result = fit_parameters(profile, template, delta_tau_hint=hint)
    rows = []
    for i, node in enumerate(result.graph.nodes, start=1):
        if node.kind == "LC":
            rows.append((i, "LC", "t_l_ps", node.t_l * 1e12))
        else:
            rows.append((i, "SC", "delta_tau_ps", node.delta_tau * 1e12))
            rows.append((i, "SC", "t_s_ps", node.t_s * 1e12))
    rows.append((0, "fit", "residual_rms_ps", result.residual_rms * 1e12))
    _emit_tables(args, [("fit", ["node", "kind", "parameter", "value"], rows)])
    return 0


def cmd_graph(args) -> int:
    cfg = load_config(_read_text(args.config))
    text = export_graph(cfg.graph)
    if args.output == "-":
        sys.stdout.write(text)
    else:
        _write_text(args.output, text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="pairskew",
        description="Intra-pair skew analysis for coupled-line channels")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="verb", required=True)

    def common(p, output_default="-"):
        p.add_argument("-o", "--output", default=output_default,
                       help="output path or prefix; '-' = JSON to stdout")
        p.add_argument("--format", choices=("csv", "json"), default="csv",
                       help="table format for file outputs")
        p.add_argument("--si", action="store_true",
                       help="emit seconds/Hz instead of ps/GHz")
        p.add_argument("--grid", default=None,
                       help="grid override START_HZ:STOP_HZ:POINTS[:log]")

    p = sub.add_parser("synth", help="synthesize a configured channel to .s4p")
    p.add_argument("--config", required=True)
    p.add_argument("--touchstone-format", choices=("RI", "MA", "DB"),
                   default="RI")
    common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("skew", help="extract skew tables from an .s4p file")
    p.add_argument("s4p")
    p.add_argument("--portmap", default="1,2,3,4",
                   help="file ports for P-left,P-right,N-left,N-right")
    p.add_argument("--column-major", action="store_true",
                   help="4-port file data is column-major (instrument quirk)")
    common(p, output_default="-")
    p.set_defaults(func=cmd_skew)

    p = sub.add_parser("ispg", help="analytic skew profile of a config")
    p.add_argument("--config", required=True)
    p.add_argument("--dot", default=None, help="also write a DOT graph here")
    common(p)
    p.set_defaults(func=cmd_ispg)

    p = sub.add_parser("compare", help="analytic profile vs exact cascade oracle")
    p.add_argument("--config", required=True)
    p.add_argument("--tolerance", type=float, default=0.05,
                   help="max rms/peak-to-peak ratio for exit code 0")
    common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("fit", help="fit template parameters to measured skew")
    p.add_argument("s4p")
    p.add_argument("--template", required=True,
                   help="config with null-marked unknowns")
    p.add_argument("--portmap", default="1,2,3,4")
    p.add_argument("--column-major", action="store_true")
    common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("graph", help="export the channel graph as DOT")
    p.add_argument("--config", required=True)
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_graph)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return 3
    except PairskewError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
