"""Touchstone v1.x reading/writing and CSV/JSON result tables.

Reader scope: 2- and 4-port S-parameter files, formats RI/MA/DB, frequency
units Hz/kHz/MHz/GHz, arbitrary comments/blank lines/line wrapping. The v1
quirk that 2-port data is ordered S11 S21 S12 S22 is honored; 4-port data is
row-major S11 S12 S13 S14 / S21 ... (a column-major override exists for
nonconforming instruments). Touchstone v2 documents ([Version] etc.) are
rejected outright. 2-port noise-parameter sections (recognizable by the
frequency restarting) are ignored.

The parser is total: any text input either yields a TouchstoneDocument or
raises a TouchstoneError subclass carrying a line number; it never escapes
with a stray ValueError/IndexError.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import FourPortResponse, FrequencyGrid, SkewProfile
from .errors import (
    BadPortMap,
    NonMonotoneFrequency,
    TouchstoneSyntaxError,
    UnsupportedParameter,
)

__all__ = [
    "OptionLine",
    "TouchstoneDocument",
    "PortMap",
    "read_touchstone",
    "write_touchstone",
    "to_four_port",
    "export_csv",
    "export_json",
    "skew_profile_table",
    "delta_tau_table",
    "resonance_table",
]

log = logging.getLogger(__name__)

_FREQ_UNITS = {"HZ": 1.0, "KHZ": 1e3, "MHZ": 1e6, "GHZ": 1e9}
_FORMATS = ("RI", "MA", "DB")
_V2_MARKERS = ("[version]", "[number of ports]", "[network data]",
               "[reference]", "[end]")


@dataclass(frozen=True)
class OptionLine:
    freq_unit: str = "GHZ"
    parameter: str = "S"
    fmt: str = "MA"
    reference_ohms: float = 50.0


@dataclass(frozen=True, eq=False)
class TouchstoneDocument:
    """Parsed network-parameter file: full n x n complex matrices per point."""

    option_line: OptionLine
    n_ports: int
    frequencies_hz: np.ndarray
    data: np.ndarray              # (n_points, n_ports, n_ports) complex
    comments: tuple = field(default_factory=tuple)

    def __post_init__(self):
        freqs = np.asarray(self.frequencies_hz, dtype=float)
        data = np.asarray(self.data, dtype=complex)
        object.__setattr__(self, "frequencies_hz", freqs)
        object.__setattr__(self, "data", data)


def _parse_option_line(line: str, lineno: int) -> OptionLine:
    tokens = line[1:].upper().split()
    freq_unit, parameter, fmt, ref = "GHZ", "S", "MA", 50.0
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if tok in _FREQ_UNITS:
            freq_unit = tok
        elif tok in ("S", "Y", "Z", "G", "H"):
            parameter = tok
        elif tok in _FORMATS:
            fmt = tok
        elif tok == "R":
            if i + 1 >= len(tokens):
                raise TouchstoneSyntaxError(lineno, "option 'R' without a value")
            try:
                ref = float(tokens[i + 1])
            except ValueError:
                raise TouchstoneSyntaxError(
                    lineno, f"bad reference impedance {tokens[i + 1]!r}") from None
            i += 1
        else:
            raise TouchstoneSyntaxError(lineno, f"unknown option token {tok!r}")
        i += 1
    if parameter != "S":
        raise UnsupportedParameter(
            f"only S-parameters are supported, file declares {parameter!r}")
    return OptionLine(freq_unit=freq_unit, parameter=parameter, fmt=fmt,
                      reference_ohms=ref)


def _pairs_to_complex(first: np.ndarray, second: np.ndarray, fmt: str) -> np.ndarray:
    if fmt == "RI":
        return first + 1j * second
    ang = np.deg2rad(second)
    mag = first if fmt == "MA" else 10.0 ** (first / 20.0)
    return mag * np.exp(1j * ang)


def read_touchstone(text: str, n_ports: Optional[int] = None,
                    column_major: bool = False) -> TouchstoneDocument:
    """Parse Touchstone v1.x text into full complex matrices.

    Parameters
    ----------
    text : str
        File content.
    n_ports : int, optional
        2 or 4. When omitted, inferred by trying 4 then 2 and keeping the
        chunking whose frequency column strictly increases.
    column_major : bool
        Interpret 4-port matrix entries column-major (instrument quirk
        override). The standard layout is row-major.
    """
    if n_ports not in (None, 2, 4):
        raise BadPortMap(f"n_ports must be 2 or 4, got {n_ports}")
    option: Optional[OptionLine] = None
    comments: list = []
    values: list = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        bang = line.find("!")
        if bang >= 0:
            comment = line[bang + 1:].strip()
            if comment:
                comments.append(comment)
            line = line[:bang]
        stripped = line.strip()
        if not stripped:
            continue
        low = stripped.lower()
        if low.startswith("["):
            if any(low.startswith(m) for m in _V2_MARKERS):
                raise TouchstoneSyntaxError(
                    lineno, "Touchstone v2 sections are not supported; "
                            "export the file as v1.x")
            raise TouchstoneSyntaxError(lineno, f"unexpected section {stripped!r}")
        if stripped.startswith("#"):
            if option is not None:
                raise TouchstoneSyntaxError(lineno, "duplicate option line")
            option = _parse_option_line(stripped, lineno)
            continue
        for tok in stripped.split():
            try:
                values.append(float(tok))
            except ValueError:
                raise TouchstoneSyntaxError(
                    lineno, f"expected a number, got {tok!r}") from None
    if option is None:
        option = OptionLine()
    if not values:
        raise TouchstoneSyntaxError(0, "no numeric data in file")

    stream = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(stream)):
        raise TouchstoneSyntaxError(0, "non-finite numeric data in file")

    candidates = (4, 2) if n_ports is None else (n_ports,)
    last_error: Optional[Exception] = None
    for n in candidates:
        per_point = 1 + 2 * n * n
        n_full = stream.size // per_point
        if n_full == 0:
            last_error = TouchstoneSyntaxError(
                0, f"not enough values for a single {n}-port point "
                   f"(need {per_point}, have {stream.size})")
            continue
        chunks = stream[:n_full * per_point].reshape(-1, per_point)
        trailing = stream.size - n_full * per_point
        freqs_raw = chunks[:, 0]
        resets = np.where(np.diff(freqs_raw) <= 0)[0]
        if resets.size:
            if n != 2:
                last_error = NonMonotoneFrequency(
                    "frequencies must strictly increase")
                continue
            # A frequency restart in a 2-port file marks the noise-parameter
            # section; keep the network section, ignore the rest.
            n_net = int(resets[0]) + 1
            chunks = chunks[:n_net]
            freqs_raw = freqs_raw[:n_net]
            if np.any(np.diff(freqs_raw) <= 0):
                last_error = NonMonotoneFrequency(
                    "frequencies must strictly increase")
                continue
        elif trailing:
            last_error = TouchstoneSyntaxError(
                0, f"{trailing} trailing values do not fit the {n}-port layout")
            continue
        body = chunks[:, 1:]
        mats = _pairs_to_complex(body[:, 0::2], body[:, 1::2],
                                 option.fmt).reshape(-1, n, n)
        if n == 2 or column_major:
            # v1 2-port data order is S11 S21 S12 S22 (column-major quirk);
            # 4-port stays row-major unless explicitly overridden.
            mats = np.swapaxes(mats, 1, 2)
        freqs = freqs_raw * _FREQ_UNITS[option.freq_unit]
        return TouchstoneDocument(option_line=option, n_ports=n,
                                  frequencies_hz=freqs, data=mats,
                                  comments=tuple(comments))
    if last_error is None:  # unreachable: every candidate sets it or returns
        last_error = TouchstoneSyntaxError(0, "no usable network data")
    raise last_error


@dataclass(frozen=True)
class PortMap:
    """File port numbers playing the library roles.

    Library convention: 1 = P-left, 2 = P-right, 3 = N-left, 4 = N-right.
    ``PortMap(p_left=a, p_right=b, n_left=c, n_right=d)`` says file port a is
    the left P conductor, and so on. Must be a permutation of {1,2,3,4}.
    """

    p_left: int = 1
    p_right: int = 2
    n_left: int = 3
    n_right: int = 4

    def __post_init__(self):
        ports = (self.p_left, self.p_right, self.n_left, self.n_right)
        if sorted(ports) != [1, 2, 3, 4]:
            raise BadPortMap(f"port map {ports} is not a permutation of 1..4")

    @classmethod
    def parse(cls, text: str) -> "PortMap":
        try:
            a, b, c, d = (int(t) for t in text.split(","))
        except ValueError:
            raise BadPortMap(
                f"port map must be 4 comma-separated integers, got {text!r}"
            ) from None
        return cls(p_left=a, p_right=b, n_left=c, n_right=d)


def to_four_port(doc: TouchstoneDocument, port_map: PortMap) -> FourPortResponse:
    """Extract forward/reverse transmission blocks from a measured 4-port.

    Reflection and near-end entries are discarded; their per-frequency
    summed |S|^2 is logged and retained on the response. The ``reciprocal``
    flag is set from max |S_ij - S_ji| against a 1e-9 threshold.
    """
    if doc.n_ports != 4:
        raise BadPortMap(f"need 4-port data, file has {doc.n_ports} ports")
    pl, pr = port_map.p_left - 1, port_map.p_right - 1
    nl, nr = port_map.n_left - 1, port_map.n_right - 1
    s = doc.data
    freqs = doc.frequencies_hz
    keep = freqs > 0.0
    if not np.all(keep):
        # grids exclude DC by design; measured files sometimes include it
        log.warning("dropping %d non-positive frequency point(s) on import",
                    int(np.sum(~keep)))
        s = s[keep]
        freqs = freqs[keep]
    fwd = np.empty((s.shape[0], 2, 2), dtype=complex)
    fwd[:, 0, 0] = s[:, pr, pl]   # S21: into P-left, out P-right
    fwd[:, 0, 1] = s[:, pr, nl]   # S23
    fwd[:, 1, 0] = s[:, nr, pl]   # S41
    fwd[:, 1, 1] = s[:, nr, nl]   # S43
    rev = np.empty_like(fwd)
    rev[:, 0, 0] = s[:, pl, pr]   # S12
    rev[:, 0, 1] = s[:, pl, nr]   # S14
    rev[:, 1, 0] = s[:, nl, pr]   # S32
    rev[:, 1, 1] = s[:, nl, nr]   # S34

    kept = np.zeros(s.shape, dtype=bool)
    for i, j in ((pr, pl), (pr, nl), (nr, pl), (nr, nl),
                 (pl, pr), (pl, nr), (nl, pr), (nl, nr)):
        kept[:, i, j] = True
    discarded = np.sum(np.abs(np.where(kept, 0.0, s)) ** 2, axis=(1, 2))
    log.info("touchstone import: discarded reflection/near-end energy "
             "max=%.3e mean=%.3e per frequency", discarded.max(),
             discarded.mean())
    asym = float(np.max(np.abs(s - np.swapaxes(s, 1, 2))))
    grid = FrequencyGrid(freqs)
    return FourPortResponse(grid=grid, forward=fwd, reverse=rev,
                            reciprocal=asym <= 1e-9,
                            discarded_energy=discarded)


def write_touchstone(resp: FourPortResponse, fmt: str = "RI",
                     freq_unit: str = "HZ") -> str:
    """Serialize a response as a Touchstone v1.1 4-port file.

    Reflection and near-end entries are written as exact zeros (the model is
    matched). RI format with 17 significant digits round-trips bit-clean.
    """
    fmt = fmt.upper()
    if fmt not in _FORMATS:
        raise ValueError(f"format must be one of {_FORMATS}, got {fmt!r}")
    freq_unit = freq_unit.upper()
    if freq_unit not in _FREQ_UNITS:
        raise ValueError(f"bad frequency unit {freq_unit!r}")
    scale = _FREQ_UNITS[freq_unit]
    s = np.zeros((len(resp.grid), 4, 4), dtype=complex)
    s[:, 1, 0] = resp.s21
    s[:, 1, 2] = resp.s23
    s[:, 3, 0] = resp.s41
    s[:, 3, 2] = resp.s43
    s[:, 0, 1] = resp.s12
    s[:, 0, 3] = resp.s14
    s[:, 2, 1] = resp.s32
    s[:, 2, 3] = resp.s34

    def pair(z: complex) -> str:
        if fmt == "RI":
            return f"{z.real:.17e} {z.imag:.17e}"
        mag = abs(z)
        ang = np.degrees(np.angle(z)) if mag else 0.0
        if fmt == "MA":
            return f"{mag:.17e} {ang:.17e}"
        db = 20.0 * np.log10(mag) if mag > 0.0 else -400.0
        return f"{db:.17e} {ang:.17e}"

    out = ["! 4-port S-parameters (matched model: reflections are exact zeros)",
           f"# {freq_unit} S {fmt} R 50"]
    for k, f in enumerate(resp.grid.points):
        lead = f"{f / scale:.17e}"
        for row in range(4):
            cells = " ".join(pair(s[k, row, col]) for col in range(4))
            out.append(f"{lead} {cells}" if row == 0 else f"{' ' * len(lead)} {cells}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Result tables

def export_csv(columns: Sequence[str], rows) -> str:
    """RFC-4180-style CSV (comma separated, LF line endings, '.' decimals).

    Floats are written with repr (shortest round-trip form, full double
    precision, locale independent).
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(columns))
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def export_json(meta: dict, columns: Sequence[str], rows) -> str:
    """Deterministic JSON result envelope {meta, columns, rows}."""
    doc = {"meta": meta, "columns": list(columns),
           "rows": [list(r) for r in rows]}
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def skew_profile_table(profile: SkewProfile, si: bool = False):
    """(columns, rows) for a skew profile; ps/GHz scaling unless si=True."""
    if si:
        cols = ["freq_hz", "skew21_s", "skew12_s"]
        rows = [(float(f), float(a), float(b))
                for f, a, b in zip(profile.grid.points, profile.skew_21,
                                   profile.skew_12)]
    else:
        cols = ["freq_ghz", "skew21_ps", "skew12_ps"]
        rows = [(float(f / 1e9), float(a * 1e12), float(b * 1e12))
                for f, a, b in zip(profile.grid.points, profile.skew_21,
                                   profile.skew_12)]
    return cols, rows


def delta_tau_table(grid: FrequencyGrid, dtau: np.ndarray, si: bool = False):
    if si:
        cols = ["freq_hz", "delta_tau_s"]
        rows = [(float(f), float(d)) for f, d in zip(grid.points, dtau)]
    else:
        cols = ["freq_ghz", "delta_tau_ps"]
        rows = [(float(f / 1e9), float(d * 1e12))
                for f, d in zip(grid.points, dtau)]
    return cols, rows


def resonance_table(freqs: np.ndarray, si: bool = False):
    if si:
        cols = ["order", "resonance_hz"]
        rows = [(n + 1, float(f)) for n, f in enumerate(freqs)]
    else:
        cols = ["order", "resonance_ghz"]
        rows = [(n + 1, float(f / 1e9)) for n, f in enumerate(freqs)]
    return cols, rows
