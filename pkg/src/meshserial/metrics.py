"""Compression ratio, relative L2 error, and the evaluation report."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

REPORT_COLUMNS = (
    "variable", "strategy", "codec", "tau_rel", "eb_abs", "orig_bytes",
    "comp_bytes", "cr", "epsilon", "minla_cost", "ms",
)
SUMMARY_COLUMNS = ("variable", "strategy", "codec", "tau_rel", "cr", "cr_baseline", "improvement")
TOTAL = "total"

_SPLIT = 134217729.0  # 2**27 + 1


def _l2_norm(a: np.ndarray) -> float:
    """Order-independent L2 norm.

    Squares are split exactly into two doubles (Dekker) after power-of-two
    scaling, then summed with ``math.fsum``, so the result is the correctly
    rounded sum of exact squares and does not depend on element order.
    """
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    if a.size == 0:
        return 0.0
    peak = float(np.max(np.abs(a)))
    if peak == 0.0:
        return 0.0
    _, exp = math.frexp(peak)
    s = np.ldexp(a, -exp)
    c = _SPLIT * s
    hi_part = c - (c - s)
    lo_part = s - hi_part
    sq = s * s
    err = ((hi_part * hi_part - sq) + 2.0 * hi_part * lo_part) + lo_part * lo_part
    total = math.fsum(np.concatenate([sq, err]).tolist())
    return math.ldexp(math.sqrt(total), exp)


def l2_error_info(x, x_prime) -> tuple[float, bool]:
    """Return ``(epsilon, zero_norm)``; see :func:`relative_l2_error`."""
    x = np.asarray(getattr(x, "values", x), dtype=np.float64).reshape(-1)
    xp = np.asarray(getattr(x_prime, "values", x_prime), dtype=np.float64).reshape(-1)
    if x.shape != xp.shape:
        raise ValueError(f"length mismatch: {x.shape[0]} vs {xp.shape[0]}")
    denom = _l2_norm(x)
    if denom == 0.0:
        return _l2_norm(xp), True
    return _l2_norm(x - xp) / denom, False


def relative_l2_error(x, x_prime) -> float:
    """``||x - x'||_2 / ||x||_2``.

    For an all-zero ``x`` the absolute norm ``||x'||_2`` is returned instead;
    :func:`l2_error_info` reports when that happened.
    """
    return l2_error_info(x, x_prime)[0]


def compression_ratio(original_bytes: int, compressed_bytes: int) -> float:
    if original_bytes <= 0 or compressed_bytes <= 0:
        raise ValueError("byte counts must be positive")
    return original_bytes / compressed_bytes


def improvement(cr_ordered: float, cr_default: float) -> float:
    if not (cr_ordered > 0 and cr_default > 0):
        raise ValueError("compression ratios must be positive")
    return cr_ordered / cr_default


def raw_size(n_values: int) -> int:
    """Bytes of ``n_values`` binary64 values."""
    return 8 * n_values


@dataclass
class EvalRow:
    variable: str
    strategy: str
    codec: str
    tau_rel: float
    eb_abs: float
    orig_bytes: int
    comp_bytes: int
    cr: float
    epsilon: float
    minla_cost: int
    ms: float = 0.0
    # not part of the emitted schema
    meta_bytes: int = 0
    zero_norm: bool = False

    def __post_init__(self):
        if self.cr <= 0:
            raise ValueError("CR must be positive")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")

    @property
    def cr_with_meta(self) -> float:
        """CR charging this row's share of the permutation file."""
        return compression_ratio(self.orig_bytes, self.comp_bytes + self.meta_bytes)

    def sort_key(self):
        return (self.variable, self.strategy, self.codec, self.tau_rel)


@dataclass
class EvalReport:
    rows: list = field(default_factory=list)

    def sorted(self) -> "EvalReport":
        return EvalReport(sorted(self.rows, key=EvalRow.sort_key))


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _row_values(row: EvalRow) -> list:
    return [_fmt(getattr(row, c)) for c in REPORT_COLUMNS]


def emit_report(report: EvalReport, fmt: str = "csv") -> str:
    """Render as CSV (fixed header) or a JSON array with the same keys.

    Real-valued columns carry 6 significant digits in both formats.
    """
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for row in report.rows:
            w.writerow(_row_values(row))
        return buf.getvalue()
    if fmt == "json":
        out = []
        for row in report.rows:
            obj = {}
            for c in REPORT_COLUMNS:
                v = getattr(row, c)
                obj[c] = float(_fmt(v)) if isinstance(v, float) else v
            out.append(obj)
        return json.dumps(out, indent=1) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")


_INT_COLUMNS = {"orig_bytes", "comp_bytes", "minla_cost"}
_STR_COLUMNS = {"variable", "strategy", "codec"}


def parse_report_csv(text: str) -> EvalReport:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if tuple(header or ()) != REPORT_COLUMNS:
        raise ValueError(f"unexpected report header {header!r}")
    rows = []
    for rec in reader:
        kw = {}
        for c, v in zip(REPORT_COLUMNS, rec):
            kw[c] = v if c in _STR_COLUMNS else int(v) if c in _INT_COLUMNS else float(v)
        rows.append(EvalRow(**kw))
    return EvalReport(rows)


def total_compression_ratio(rows) -> float:
    """Dataset-level CR: summed original bytes over summed compressed bytes."""
    rows = list(rows)
    return compression_ratio(sum(r.orig_bytes for r in rows), sum(r.comp_bytes for r in rows))


def improvement_table(report: EvalReport, baseline: str = "identity") -> list:
    """Per-variable and total CR improvements of each strategy over ``baseline``.

    One dict per (variable, strategy, codec, tau) with keys
    :data:`SUMMARY_COLUMNS`; ``variable == "total"`` rows pool all variables.
    """
    cells: dict = {}
    for r in report.rows:
        cells.setdefault((r.strategy, r.codec, r.tau_rel), []).append(r)
    out = []
    for (strategy, codec, tau), rows in cells.items():
        if strategy == baseline:
            continue
        base = {b.variable: b for b in cells.get((baseline, codec, tau), [])}
        matched = [r for r in rows if r.variable in base]
        for r in matched:
            b = base[r.variable]
            out.append(dict(variable=r.variable, strategy=strategy, codec=codec, tau_rel=tau,
                            cr=r.cr, cr_baseline=b.cr, improvement=improvement(r.cr, b.cr)))
        if len(matched) > 1:
            cr = total_compression_ratio(matched)
            cr_b = total_compression_ratio(base[r.variable] for r in matched)
            out.append(dict(variable=TOTAL, strategy=strategy, codec=codec, tau_rel=tau,
                            cr=cr, cr_baseline=cr_b, improvement=improvement(cr, cr_b)))
    out.sort(key=lambda d: (d["variable"], d["strategy"], d["codec"], d["tau_rel"]))
    return out


def emit_summary(table: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for d in table:
        w.writerow([_fmt(d[c]) for c in SUMMARY_COLUMNS])
    return buf.getvalue()
