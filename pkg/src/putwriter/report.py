"""Result tables and heatmap pivots for grid runs.

A grid produces one row per configuration (axes plus performance
metrics). Rows pivot into a rectangular heatmap: estimator-or-VIX
parameterization down the side, horizon and moneyness across the top,
one metric in the cells. Emission is CSV (lossless, full precision) and
a dependency-free SVG with a documented color scale; cells without a
finished run render as hatched gaps.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .backtester import GridRunRecord

STAR_THRESHOLDS = ((0.99, "***"), (0.95, "**"), (0.90, "*"))

GRID_COLUMNS = (
    "sizing", "dte", "otm_pct", "vix_source", "vix_memory",
    "estimator", "estimator_memory",
    "arc_pct", "asd_pct", "md_pct", "mld_years", "ir",
    "var_pct", "cvar_pct", "n_positions", "psr", "stars", "error",
)

PIVOT_METRICS = ("ir", "arc_pct")


def significance_stars(psr: Optional[float]) -> str:
    """Confidence marker: one star per conventional significance level."""
    if psr is None or not math.isfinite(psr):
        return ""
    for threshold, stars in STAR_THRESHOLDS:
        if psr >= threshold:
            return stars
    return ""


def record_row(record: GridRunRecord) -> Dict[str, object]:
    """One result-table row for a finished (or failed) grid run."""
    cfg = record.config
    row: Dict[str, object] = {
        "sizing": cfg.sizing,
        "dte": cfg.target_dte,
        "otm_pct": cfg.otm_pct,
        "vix_source": cfg.vix_source or "",
        "vix_memory": cfg.vix_memory if cfg.vix_memory is not None else "",
        "estimator": cfg.estimator_kind or "",
        "estimator_memory": (cfg.estimator_memory
                             if cfg.estimator_memory is not None else ""),
        "error": record.error or "",
    }
    rep = record.report
    if rep is None:
        for col in ("arc_pct", "asd_pct", "md_pct", "mld_years", "ir",
                    "var_pct", "cvar_pct", "psr"):
            row[col] = math.nan
        row["n_positions"] = ""
        row["stars"] = ""
        return row
    row.update({
        "arc_pct": rep.ann_return * 100.0,
        "asd_pct": rep.ann_stdev * 100.0,
        "md_pct": rep.max_drawdown * 100.0,
        "mld_years": rep.max_loss_duration_years,
        "ir": rep.information_ratio,
        "var_pct": rep.var_95 * 100.0,
        "cvar_pct": rep.cvar_95 * 100.0,
        "n_positions": record.result.n_positions,
        "psr": rep.psr if rep.psr is not None else math.nan,
        "stars": significance_stars(rep.psr),
    })
    return row


def grid_table(records: Sequence[GridRunRecord]) -> pd.DataFrame:
    """Consolidated results table, one row per configuration."""
    if not records:
        raise ValueError("no grid records")
    frame = pd.DataFrame([record_row(r) for r in records])
    return frame[list(GRID_COLUMNS)]


_METRIC_COLUMNS = ("arc_pct", "asd_pct", "md_pct", "mld_years", "ir",
                   "var_pct", "cvar_pct", "psr")


def load_results_table(path: Union[str, Path]) -> pd.DataFrame:
    """Read a consolidated results CSV back to a pivotable table.

    Values parse at full precision; blank metric cells (failed runs)
    come back as NaN, blank axis cells stay empty strings.
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except FileNotFoundError as exc:
        raise ValueError(f"missing results file: {path}") from exc
    missing = sorted(set(GRID_COLUMNS) - set(frame.columns))
    if missing:
        raise ValueError(f"{path}: not a results table (missing {missing})")
    frame["dte"] = frame["dte"].astype(int)
    frame["otm_pct"] = frame["otm_pct"].astype(float)
    for col in _METRIC_COLUMNS:
        frame[col] = frame[col].replace("", "nan").astype(float)
    return frame


# ---------------------------------------------------------------------------
# Pivots


ROW_AXIS_ESTIMATOR = "estimator"
ROW_AXIS_VIX = "vix"


@dataclass
class HeatmapPivot:
    """Rectangular metric grid; NaN cells are explicit gaps."""
    metric: str
    row_labels: List[str]
    col_labels: List[str]
    values: np.ndarray          # shape (rows, cols), NaN for gaps
    stars: List[List[str]]

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.row_labels), len(self.col_labels)):
            raise ValueError("pivot shape does not match labels")

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape


def _row_key(frame_row: pd.Series, axis: str) -> Tuple[str, int]:
    if axis == ROW_AXIS_ESTIMATOR:
        return (str(frame_row["estimator"]), int(frame_row["estimator_memory"]))
    return (str(frame_row["vix_source"]), int(frame_row["vix_memory"]))


def infer_row_axis(table: pd.DataFrame) -> str:
    """Pick the pivot row axis the table actually parameterizes."""
    if (table["estimator"].astype(str) != "").any():
        return ROW_AXIS_ESTIMATOR
    if (table["vix_source"].astype(str) != "").any():
        return ROW_AXIS_VIX
    raise ValueError("table has neither estimator nor vix parameters to pivot on")


def pivot_table(table: pd.DataFrame, metric: str = "ir",
                row_axis: Optional[str] = None) -> HeatmapPivot:
    """Pivot a results table into (parameterization) x (DTE, %OTM) cells.

    The grid is the full cross product of observed row and column keys;
    combinations without a successful run stay NaN. Duplicate cells are
    rejected rather than aggregated.
    """
    if metric not in PIVOT_METRICS:
        raise ValueError(f"metric must be one of {PIVOT_METRICS}")
    if len(table) == 0:
        raise ValueError("empty results table")
    sizings = sorted(set(table["sizing"].astype(str)))
    if len(sizings) > 1:
        raise ValueError(f"mixed sizing methods {sizings}; filter to one family")
    axis = row_axis or infer_row_axis(table)
    if axis not in (ROW_AXIS_ESTIMATOR, ROW_AXIS_VIX):
        raise ValueError(f"unknown row axis {axis!r}")

    row_keys = sorted({_row_key(r, axis) for _, r in table.iterrows()})
    col_keys = sorted({(int(r["dte"]), float(r["otm_pct"]))
                       for _, r in table.iterrows()})
    values = np.full((len(row_keys), len(col_keys)), np.nan)
    stars = [["" for _ in col_keys] for _ in row_keys]
    filled = np.zeros_like(values, dtype=bool)
    for _, row in table.iterrows():
        i = row_keys.index(_row_key(row, axis))
        j = col_keys.index((int(row["dte"]), float(row["otm_pct"])))
        if filled[i, j]:
            raise ValueError(f"duplicate pivot cell {row_keys[i]} x {col_keys[j]}")
        filled[i, j] = True
        if str(row.get("error", "")) == "":
            values[i, j] = float(row[metric])
            stars[i][j] = str(row.get("stars", "") or "")
    return HeatmapPivot(
        metric=metric,
        row_labels=[f"{kind} ({mem}d)" for kind, mem in row_keys],
        col_labels=[f"N={dte} {otm:g}%OTM" for dte, otm in col_keys],
        values=values,
        stars=stars,
    )


def pivot_to_csv(pivot: HeatmapPivot, path: Union[str, Path]) -> None:
    """Write the pivot losslessly; gaps become empty fields."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([pivot.metric] + pivot.col_labels)
        for label, row in zip(pivot.row_labels, pivot.values):
            writer.writerow([label] + [("" if math.isnan(v) else repr(float(v)))
                                       for v in row])


def read_pivot_csv(path: Union[str, Path]) -> HeatmapPivot:
    """Parse a pivot CSV back; inverse of pivot_to_csv up to stars."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or len(rows) < 2:
        raise ValueError(f"{path}: not a pivot CSV")
    metric, col_labels = rows[0][0], rows[0][1:]
    row_labels = [r[0] for r in rows[1:]]
    values = np.array([[math.nan if cell == "" else float(cell)
                        for cell in r[1:]] for r in rows[1:]])
    stars = [["" for _ in col_labels] for _ in row_labels]
    return HeatmapPivot(metric=metric, row_labels=row_labels,
                        col_labels=col_labels, values=values, stars=stars)


# ---------------------------------------------------------------------------
# SVG heatmap


CELL_W, CELL_H = 96, 34
LEFT_MARGIN, TOP_MARGIN = 150, 96
LEGEND_H = 54

# diverging scale: low -> blue, midpoint -> near-white, high -> red
_SCALE_LOW = (59, 76, 192)
_SCALE_MID = (247, 247, 247)
_SCALE_HIGH = (180, 4, 38)


def _lerp(a: Tuple[int, int, int], b: Tuple[int, int, int], t: float) -> str:
    rgb = tuple(round(x + (y - x) * t) for x, y in zip(a, b))
    return f"rgb({rgb[0]},{rgb[1]},{rgb[2]})"


def color_for(value: float, lo: float, hi: float) -> str:
    """Two-segment linear blend over [lo, hi]; mid-range is near-white."""
    if hi <= lo:
        t = 0.5
    else:
        t = (value - lo) / (hi - lo)
    t = min(1.0, max(0.0, t))
    if t < 0.5:
        return _lerp(_SCALE_LOW, _SCALE_MID, t * 2.0)
    return _lerp(_SCALE_MID, _SCALE_HIGH, (t - 0.5) * 2.0)


def _esc(text: str) -> str:
    return (text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;"))


def pivot_to_svg(pivot: HeatmapPivot, path: Union[str, Path],
                 title: str = "") -> None:
    """Render the pivot as a standalone SVG heatmap.

    Cell color blends blue (grid minimum) through near-white to red
    (grid maximum), scaled per emitted pivot; the legend prints the
    endpoints so the scale is self-documenting. Gap cells are hatched.
    Labels show value to 2 decimals plus significance stars.
    """
    n_rows, n_cols = pivot.shape
    if n_rows == 0 or n_cols == 0:
        raise ValueError("empty pivot")
    finite = pivot.values[np.isfinite(pivot.values)]
    lo = float(finite.min()) if len(finite) else 0.0
    hi = float(finite.max()) if len(finite) else 1.0
    width = LEFT_MARGIN + n_cols * CELL_W + 20
    height = TOP_MARGIN + n_rows * CELL_H + LEGEND_H
    parts: List[str] = []
    parts.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}" '
        f'font-family="monospace" font-size="11">')
    parts.append(
        '<defs><pattern id="gap" width="8" height="8" '
        'patternUnits="userSpaceOnUse">'
        '<rect width="8" height="8" fill="#eeeeee"/>'
        '<path d="M0 8 L8 0" stroke="#999999" stroke-width="1"/>'
        "</pattern></defs>")
    parts.append(f'<rect width="{width}" height="{height}" fill="white"/>')
    if title:
        parts.append(f'<text x="{LEFT_MARGIN}" y="20" font-size="14">'
                     f"{_esc(title)}</text>")
    parts.append(f'<text x="{LEFT_MARGIN}" y="38" fill="#555555">'
                 f"metric: {_esc(pivot.metric)}</text>")
    for j, label in enumerate(pivot.col_labels):
        x = LEFT_MARGIN + j * CELL_W + CELL_W // 2
        parts.append(f'<text x="{x}" y="{TOP_MARGIN - 8}" text-anchor="middle" '
                     f'transform="rotate(-30 {x} {TOP_MARGIN - 8})">'
                     f"{_esc(label)}</text>")
    for i, label in enumerate(pivot.row_labels):
        y = TOP_MARGIN + i * CELL_H + CELL_H // 2 + 4
        parts.append(f'<text x="{LEFT_MARGIN - 8}" y="{y}" text-anchor="end">'
                     f"{_esc(label)}</text>")
    for i in range(n_rows):
        for j in range(n_cols):
            x, y = LEFT_MARGIN + j * CELL_W, TOP_MARGIN + i * CELL_H
            v = pivot.values[i, j]
            if math.isnan(v):
                fill = "url(#gap)"
                label = ""
            else:
                fill = color_for(v, lo, hi)
                label = f"{v:.2f}{pivot.stars[i][j]}"
            parts.append(f'<rect x="{x}" y="{y}" width="{CELL_W}" '
                         f'height="{CELL_H}" fill="{fill}" stroke="#ffffff"/>')
            if label:
                parts.append(f'<text x="{x + CELL_W // 2}" y="{y + CELL_H // 2 + 4}" '
                             f'text-anchor="middle">{_esc(label)}</text>')
    ly = TOP_MARGIN + n_rows * CELL_H + 24
    for k in range(24):
        t = k / 23.0
        parts.append(f'<rect x="{LEFT_MARGIN + k * 8}" y="{ly}" width="8" '
                     f'height="12" fill="{color_for(lo + t * (hi - lo), lo, hi)}"/>')
    parts.append(f'<text x="{LEFT_MARGIN}" y="{ly + 26}" fill="#555555">'
                 f"{lo:.2f}</text>")
    parts.append(f'<text x="{LEFT_MARGIN + 192}" y="{ly + 26}" fill="#555555" '
                 f'text-anchor="end">{hi:.2f}</text>')
    parts.append(f'<text x="{LEFT_MARGIN + 210}" y="{ly + 26}" fill="#555555">'
                 "blue=min white=mid red=max; hatched=no run; "
                 "stars: *&#8805;0.90 **&#8805;0.95 ***&#8805;0.99 PSR</text>")
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")


def emit_heatmap(pivot: HeatmapPivot, out_dir: Union[str, Path],
                 name: str, title: str = "") -> Tuple[Path, Path]:
    """Write the pivot as both CSV (lossless) and SVG (rendered)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{name}.csv"
    svg_path = out / f"{name}.svg"
    pivot_to_csv(pivot, csv_path)
    pivot_to_svg(pivot, svg_path, title=title)
    return csv_path, svg_path
