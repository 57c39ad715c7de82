"""Fixed-precision text serialization of trajectories and exact parsing back.

The wire format is a bracketed list of coordinate pairs,

    [(1.25,-0.50), (2.50,-1.00), ...]

with every coordinate printed at a fixed number of fractional digits. A
value like 23.17 therefore splits on the decimal point into an integer-meter
part and a fractional centimeter part, which is exactly the decomposition a
standard subword tokenizer produces. Serialization and parsing round-trip
bitwise on quantized values.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

DEFAULT_DECIMALS = 2

# Trajectory type lives in scenario.py; imported late to avoid a cycle
# (scenario quantizes on ingest via this module).


@dataclass(frozen=True)
class CodecConfig:
    """Delimiters and precision of the trajectory wire format."""

    decimals: int = DEFAULT_DECIMALS
    pair_open: str = "("
    pair_close: str = ")"
    pair_sep: str = ","
    list_sep: str = ", "

    def __post_init__(self):
        if self.decimals < 0:
            raise ValueError("decimals must be >= 0")
        delims = (self.pair_open, self.pair_close, self.pair_sep, self.list_sep)
        if any(not d for d in delims):
            raise ValueError("delimiters must be non-empty")
        if len(set(delims)) != len(delims):
            raise ValueError("delimiters must be mutually distinct")


class TrajectoryParseError(ValueError):
    """Raised when text does not contain the expected coordinate pairs."""

    def __init__(self, message: str, found: int | None = None, expected: int | None = None):
        self.found = found
        self.expected = expected
        super().__init__(message)


def quantize(v: float, decimals: int = DEFAULT_DECIMALS) -> float:
    """Round half away from zero to `decimals` fractional digits.

    Ties are resolved on the shortest decimal representation of the double
    (so quantize(2.675, 2) == 2.68, matching what a reader of the printed
    value expects). Negative zero normalizes to 0.0.
    """
    if not math.isfinite(v):
        raise ValueError(f"cannot quantize non-finite value {v!r}")
    exp = Decimal(1).scaleb(-decimals)
    q = float(Decimal(repr(float(v))).quantize(exp, rounding=ROUND_HALF_UP))
    return 0.0 if q == 0.0 else q


def format_number(v: float, cfg: CodecConfig = CodecConfig()) -> str:
    """Quantize and render with exactly cfg.decimals fractional digits."""
    return f"{quantize(v, cfg.decimals):.{cfg.decimals}f}"


def format_pair(x: float, y: float, cfg: CodecConfig = CodecConfig()) -> str:
    return (
        f"{cfg.pair_open}{format_number(x, cfg)}"
        f"{cfg.pair_sep}{format_number(y, cfg)}{cfg.pair_close}"
    )


def serialize_trajectory(t, cfg: CodecConfig = CodecConfig()) -> str:
    """Canonical text for a trajectory: deterministic, no whitespace variance."""
    pairs = (format_pair(w.x, w.y, cfg) for w in t.waypoints)
    return "[" + cfg.list_sep.join(pairs) + "]"


_NUMBER = r"[-+]?(?:\d+\.?\d*|\.\d+)"


def _pair_pattern(cfg: CodecConfig) -> re.Pattern:
    return re.compile(
        re.escape(cfg.pair_open)
        + r"\s*(" + _NUMBER + r")\s*"
        + re.escape(cfg.pair_sep)
        + r"\s*(" + _NUMBER + r")\s*"
        + re.escape(cfg.pair_close)
    )


def extract_pairs(text: str, cfg: CodecConfig = CodecConfig()) -> list[tuple[float, float]]:
    """All quantized coordinate pairs found anywhere in the text, in order."""
    out = []
    for mx, my in _pair_pattern(cfg).findall(text):
        try:
            out.append((quantize(float(mx), cfg.decimals), quantize(float(my), cfg.decimals)))
        except (ValueError, OverflowError):
            continue  # e.g. a run of digits parsing to inf
    return out


def parse_trajectory(
    text: str,
    expected_len: int,
    cfg: CodecConfig = CodecConfig(),
    dt: float | None = None,
):
    """Parse exactly expected_len coordinate pairs out of arbitrary text.

    Grammar first: bracketed pair lists are located and the last one of the
    expected length wins (prose before or after is ignored). If no bracketed
    list exists the whole text is scanned for pairs as a fallback. Raises
    TrajectoryParseError on empty input, an unparseable payload, or a pair
    count other than expected_len (reporting the found count).
    """
    from .scenario import DEFAULT_DT, Trajectory, Waypoint

    if dt is None:
        dt = DEFAULT_DT
    if not text or not text.strip():
        raise TrajectoryParseError("empty input", found=0, expected=expected_len)

    candidates = [
        extract_pairs(m.group(1), cfg)
        for m in re.finditer(r"\[([^\[\]]*)\]", text)
    ]
    candidates = [c for c in candidates if c]

    chosen = None
    for c in candidates:
        if len(c) == expected_len:
            chosen = c  # keep the last match of the right length
    if chosen is None:
        if candidates:
            n = len(candidates[-1])
            raise TrajectoryParseError(
                f"trajectory length mismatch: found {n}, expected {expected_len}",
                found=n,
                expected=expected_len,
            )
        loose = extract_pairs(text, cfg)
        if len(loose) != expected_len:
            raise TrajectoryParseError(
                f"trajectory length mismatch: found {len(loose)}, expected {expected_len}",
                found=len(loose),
                expected=expected_len,
            )
        chosen = loose

    return Trajectory(tuple(Waypoint(x, y) for x, y in chosen), dt)
