"""Tables and figures as CSV, JSON and SVG files.

Output directory layout::

    inertia.csv
    extremes.csv
    var_dim_corr.csv
    strong_correlations.csv
    factor_map_D{a}D{b}[_by_{label}].svg
    corr_circle_D{a}D{b}.svg
    permtest_{grouping}.csv
    bootreg_{response}_{design}.svg / .json / _fits.csv
    manifest.json
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import quoteattr
from typing import Optional, Sequence

import numpy as np

from deflect_stats.bootreg import QUANTILES, BootstrapRegressionSummary, Histogram
from deflect_stats.errors import DataError, ValidationError
from deflect_stats.pca import PcaModel
from deflect_stats.permtest import PermutationTestReport
from deflect_stats.svg import PALETTE, Axes, Svg, fmt, padded_range

PCT_DIGITS = 2
MEDIAN_DIGITS = 4
CORR_DIGITS = 2
Z_DIGITS = 2


@dataclass(frozen=True)
class Artifact:
    name: str
    kind: str  # csv | json | svg
    path: Path


@dataclass
class ReportBundle:
    output_dir: Path
    artifacts: list = field(default_factory=list)

    def add(self, artifact: Artifact) -> Artifact:
        if any(a.name == artifact.name for a in self.artifacts):
            raise ValidationError(f"duplicate artifact name {artifact.name!r}")
        self.artifacts.append(artifact)
        return artifact

    def names(self) -> list:
        return [a.name for a in self.artifacts]


def _write(output_dir, name, text):
    path = Path(output_dir) / name
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc.strerror or exc}") from None
    return path


def _csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _emit(output_dir, name, kind, text):
    return Artifact(name, kind, _write(output_dir, name, text))


def _json_num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def _check_dims(model, dims):
    a, b = dims
    k = model.n_dims
    if not (1 <= a <= k and 1 <= b <= k):
        raise ValidationError(f"dimensions {dims} outside 1..{k}")
    if a == b:
        raise ValidationError(f"degenerate plane ({a}, {b})")
    return a, b


# --- tables -----------------------------------------------------------------


def emit_inertia_table(model: PcaModel, output_dir) -> Artifact:
    rows = [
        (s + 1, fmt(model.inertia_pct[s], PCT_DIGITS), fmt(model.cumulative_pct[s], PCT_DIGITS))
        for s in range(model.n_dims)
    ]
    return _emit(output_dir, "inertia.csv", "csv", _csv_text(["dimension", "pct", "cumulative_pct"], rows))


def emit_extremes_table(flags, output_dir) -> Artifact:
    rows = [(f.row_index, f.column, fmt(f.z_value, Z_DIGITS)) for f in flags]
    return _emit(output_dir, "extremes.csv", "csv", _csv_text(["row_index", "column", "z_value"], rows))


def emit_correlation_table(model: PcaModel, output_dir) -> Artifact:
    header = ["variable", "kind"] + [f"D{s + 1}" for s in range(model.n_dims)]
    rows = [
        [name, "active"] + [fmt(c, CORR_DIGITS) for c in model.var_dim_corr[k]]
        for k, name in enumerate(model.variable_names)
    ]
    rows += [
        [name, "supplementary"] + [fmt(c, CORR_DIGITS) for c in corr]
        for name, corr in model.supp_corr.items()
    ]
    return _emit(output_dir, "var_dim_corr.csv", "csv", _csv_text(header, rows))


def emit_strong_correlations(strong, output_dir) -> Artifact:
    rows = [(v, d, fmt(c, CORR_DIGITS)) for v, d, c in strong]
    return _emit(
        output_dir, "strong_correlations.csv", "csv", _csv_text(["variable", "dimension", "corr"], rows)
    )


def emit_permtest_table(report: PermutationTestReport, output_dir, grouping: str) -> Artifact:
    if not report.results:
        raise ValidationError("empty permutation-test report")
    order = {g: i for i, g in enumerate(report.groups)}
    results = sorted(report.results, key=lambda r: (order[r.group], r.dimension))
    rows = [
        (
            r.group,
            r.dimension,
            fmt(r.lower_bound, MEDIAN_DIGITS),
            fmt(r.upper_bound, MEDIAN_DIGITS),
            fmt(r.observed_median, MEDIAN_DIGITS),
            "true" if r.inside else "false",
        )
        for r in results
    ]
    header = ["group", "dimension", "lower", "upper", "observed", "inside"]
    return _emit(output_dir, f"permtest_{grouping}.csv", "csv", _csv_text(header, rows))


# --- figures ----------------------------------------------------------------


def label_colors(labels) -> dict:
    """Palette colour and marker index per label, assigned in sorted order."""
    out = {}
    for i, lab in enumerate(sorted(set(labels))):
        out[lab] = (PALETTE[i % len(PALETTE)], i // len(PALETTE))
    return out


def _marker(svg, x, y, color, shape):
    if shape % 3 == 0:
        svg.circle(x, y, 2.5, fill=color, fill_opacity="0.8")
    elif shape % 3 == 1:
        svg.rect(x - 2.5, y - 2.5, 5, 5, fill=color, fill_opacity="0.8")
    else:
        pts = f"{fmt(x)},{fmt(y - 3)} {fmt(x - 3)},{fmt(y + 2.5)} {fmt(x + 3)},{fmt(y + 2.5)}"
        svg.add("polygon", points=pts, fill=color, fill_opacity="0.8")


def _frame(svg, ax, xlabel, ylabel):
    svg.rect(ax.x0, ax.y0, ax.width, ax.height, fill="none", stroke="#333333")
    svg.text(ax.x0, ax.y0 + ax.height + 14, fmt(ax.xlim[0]), text_anchor="start")
    svg.text(ax.x0 + ax.width, ax.y0 + ax.height + 14, fmt(ax.xlim[1]), text_anchor="end")
    svg.text(ax.x0 - 4, ax.y0 + ax.height, fmt(ax.ylim[0]), text_anchor="end")
    svg.text(ax.x0 - 4, ax.y0 + 10, fmt(ax.ylim[1]), text_anchor="end")
    svg.text(ax.x0 + ax.width / 2, ax.y0 + ax.height + 30, xlabel, text_anchor="middle", class_="xlabel")
    cx, cy = ax.x0 - 40, ax.y0 + ax.height / 2
    svg.text(cx, cy, ylabel, text_anchor="middle", transform=f"rotate(-90 {fmt(cx)} {fmt(cy)})", class_="ylabel")


def _dim_label(model, d):
    return f"D{d} ({fmt(model.inertia_pct[d - 1], PCT_DIGITS)}%)"


def emit_factor_map(
    model: PcaModel,
    dims: Sequence[int],
    output_dir,
    labels: Optional[Sequence[str]] = None,
    label_name: Optional[str] = None,
) -> Artifact:
    """Scatter of individual coordinates on the plane ``(D_a, D_b)``."""
    a, b = _check_dims(model, dims)
    coords = model.individual_coords
    if labels is not None and len(labels) != coords.shape[0]:
        raise ValidationError(f"{len(labels)} labels for {coords.shape[0]} individuals")
    x = coords[:, a - 1]
    y = coords[:, b - 1]
    legend_w = 110 if labels is not None else 0
    svg = Svg(560 + legend_w, 520, title=f"Individuals factor map D{a}-D{b}")
    ax = Axes(70, 20, 460, 440, padded_range(x), padded_range(y))
    _frame(svg, ax, _dim_label(model, a), _dim_label(model, b))
    if ax.xlim[0] < 0 < ax.xlim[1]:
        svg.line(ax.px(0), ax.y0, ax.px(0), ax.y0 + ax.height, stroke="#999999", stroke_dasharray="4 3")
    if ax.ylim[0] < 0 < ax.ylim[1]:
        svg.line(ax.x0, ax.py(0), ax.x0 + ax.width, ax.py(0), stroke="#999999", stroke_dasharray="4 3")

    if labels is None:
        svg.raw('<g class="points">')
        for xi, yi in zip(x, y):
            svg.circle(ax.px(xi), ax.py(yi), 2.5, fill="#1f77b4", fill_opacity="0.7")
        svg.raw("</g>")
        name = f"factor_map_D{a}D{b}.svg"
    else:
        colors = label_colors(labels)
        svg.raw('<g class="points">')
        for xi, yi, lab in zip(x, y, labels):
            color, shape = colors[lab]
            _marker(svg, ax.px(xi), ax.py(yi), color, shape)
        svg.raw("</g>")
        svg.raw('<g class="legend">')
        lx = ax.x0 + ax.width + 20
        step = min(16.0, 440.0 / max(len(colors), 1))
        for i, (lab, (color, shape)) in enumerate(sorted(colors.items())):
            ly = ax.y0 + 6 + i * step
            _marker(svg, lx, ly, color, shape)
            svg.text(lx + 8, ly + 4, lab, font_size="9" if step < 12 else None)
        svg.raw("</g>")
        name = f"factor_map_D{a}D{b}_by_{label_name or 'label'}.svg"
    return _emit(output_dir, name, "svg", svg.render())


def emit_correlation_circle(
    model: PcaModel, dims: Sequence[int], output_dir, include_supplementary: bool = True
) -> Artifact:
    """Unit circle with one arrow per variable at ``(corr_a, corr_b)``."""
    a, b = _check_dims(model, dims)
    svg = Svg(520, 520, title=f"Correlation circle D{a}-D{b}")
    svg.defs.append(
        '<marker id="arrow" viewBox="0 0 10 10" refX="9" refY="5" markerWidth="6" markerHeight="6" '
        'orient="auto-start-reverse"><path d="M0,0 L10,5 L0,10 z" fill="context-stroke"/></marker>'
    )
    ax = Axes(60, 30, 420, 420, (-1.05, 1.05), (-1.05, 1.05))
    radius = ax.px(1.0) - ax.px(0.0)
    svg.circle(ax.px(0), ax.py(0), radius, fill="none", stroke="#333333")
    svg.line(ax.px(-1), ax.py(0), ax.px(1), ax.py(0), stroke="#999999", stroke_dasharray="4 3")
    svg.line(ax.px(0), ax.py(-1), ax.px(0), ax.py(1), stroke="#999999", stroke_dasharray="4 3")
    svg.text(ax.x0 + ax.width / 2, ax.y0 + ax.height + 26, _dim_label(model, a), text_anchor="middle", class_="xlabel")
    cx, cy = ax.x0 - 30, ax.y0 + ax.height / 2
    svg.text(cx, cy, _dim_label(model, b), text_anchor="middle", transform=f"rotate(-90 {fmt(cx)} {fmt(cy)})", class_="ylabel")

    def arrow(name, ca, cb, css, color, dash=None):
        svg.add(
            "line",
            x1=float(ax.px(0)),
            y1=float(ax.py(0)),
            x2=float(ax.px(ca)),
            y2=float(ax.py(cb)),
            stroke=color,
            stroke_width="1.5",
            stroke_dasharray=dash,
            marker_end="url(#arrow)",
            class_=css,
            data_variable=name,
            data_corr_x=repr(float(ca)),
            data_corr_y=repr(float(cb)),
        )
        svg.text(ax.px(ca * 1.08), ax.py(cb * 1.08) + 4, name, text_anchor="middle", fill=color)

    for k, name in enumerate(model.variable_names):
        arrow(name, model.var_dim_corr[k, a - 1], model.var_dim_corr[k, b - 1], "active", "#1f4e79")
    if include_supplementary:
        for name, corr in model.supp_corr.items():
            arrow(name, corr[a - 1], corr[b - 1], "supplementary", "#c0392b", dash="5 3")
    return _emit(output_dir, f"corr_circle_D{a}D{b}.svg", "svg", svg.render())


def _hist_panel(svg, x0, y0, w, h, title, hist: Histogram, unit_range=False):
    counts = hist.counts
    edges = hist.edges
    top = max(int(counts.max()), 1)
    ax = Axes(x0, y0, w, h, (float(edges[0]), float(edges[-1])), (0.0, float(top)))
    svg.rect(x0, y0, w, h, fill="none", stroke="#333333")
    bw = w / len(counts)
    for i, c in enumerate(counts):
        if c:
            bh = c / top * h
            svg.rect(x0 + i * bw, y0 + h - bh, bw, bh, fill="#4c72b0", stroke="#ffffff", data_count=str(int(c)))
    svg.text(x0 + w / 2, y0 - 6, title, text_anchor="middle", font_weight="bold")
    digits = 2 if unit_range else 3
    svg.text(x0, y0 + h + 12, fmt(edges[0], digits), text_anchor="start", font_size="9")
    svg.text(x0 + w, y0 + h + 12, fmt(edges[-1], digits), text_anchor="end", font_size="9")
    svg.text(x0 - 3, y0 + 8, str(top), text_anchor="end", font_size="9")


def _hist_json(hist: Histogram):
    return {"bin_edges": [float(e) for e in hist.edges], "counts": [int(c) for c in hist.counts]}


def emit_bootstrap_histograms(summary: BootstrapRegressionSummary, output_dir) -> list:
    """One SVG panel per coefficient plus R^2 and p-value, a JSON sidecar and a CSV of fits."""
    if not summary.fits:
        raise ValidationError("empty bootstrap summary")
    stem = f"bootreg_{summary.response}_{summary.design}"
    panels = [(c.name, c.histogram, False) for c in summary.per_coefficient]
    panels += [("R²", summary.r2_histogram, True), ("F-test p-value", summary.pvalue_histogram, True)]
    ncols = 4
    pw, ph, gap_x, gap_y = 180, 110, 40, 50
    nrows = math.ceil(len(panels) / ncols)
    width = ncols * (pw + gap_x) + gap_x
    height = nrows * (ph + gap_y) + gap_y
    svg = Svg(width, height, title=f"Bootstrap distributions: {summary.response} ({summary.design} design)")
    for i, (title, hist, unit) in enumerate(panels):
        r, c = divmod(i, ncols)
        svg.raw(f'<g class="panel" data-name={quoteattr(title)}>')
        _hist_panel(svg, gap_x + c * (pw + gap_x), gap_y + r * (ph + gap_y) - 10, pw, ph, title, hist, unit)
        svg.raw("</g>")

    r2 = np.array([f.r_squared for f in summary.fits])
    pv = np.array([f.p_value for f in summary.fits])
    doc = {
        "response": summary.response,
        "design": summary.design,
        "seed": summary.seed,
        "replicates": summary.replicates,
        "accepted": len(summary.fits),
        "redraw_count": summary.redraw_count,
        "failed_replicates": list(summary.failed_replicates),
        "standardized_response": summary.standardized_response,
        "quantile_levels": list(QUANTILES),
        "coefficients": [
            {
                "name": c.name,
                "quantiles": list(c.quantiles),
                "mean": c.mean,
                "skewness": _json_num(c.skewness),
                **_hist_json(c.histogram),
            }
            for c in summary.per_coefficient
        ],
        "r_squared": {
            "quantiles": [float(v) for v in np.quantile(r2, QUANTILES)],
            "mean": float(r2.mean()),
            **_hist_json(summary.r2_histogram),
        },
        "p_value": {
            "quantiles": [float(v) for v in np.quantile(pv, QUANTILES)],
            "mean": float(pv.mean()),
            "fraction_below_0.05": float(np.mean(pv < 0.05)),
            **_hist_json(summary.pvalue_histogram),
        },
    }
    header = ["replicate"] + list(summary.coefficient_names) + ["r_squared", "f_statistic", "p_value", "rows"]
    rows = []
    for i, (f, used) in enumerate(zip(summary.fits, summary.rows)):
        rows.append(
            [i, repr(f.intercept)]
            + [repr(float(c)) for c in f.coefficients]
            + [repr(f.r_squared), repr(f.f_statistic), repr(f.p_value), " ".join(map(str, used))]
        )
    return [
        _emit(output_dir, f"{stem}.svg", "svg", svg.render()),
        _emit(output_dir, f"{stem}.json", "json", json.dumps(doc, indent=2, ensure_ascii=False) + "\n"),
        _emit(output_dir, f"{stem}_fits.csv", "csv", _csv_text(header, rows)),
    ]


def write_manifest(bundle: ReportBundle) -> Artifact:
    """``manifest.json`` listing every artifact with a content hash; paths are relative."""
    entries = []
    for art in bundle.artifacts:
        with open(art.path, "rb") as fh:
            digest = hashlib.sha256(fh.read()).hexdigest()
        entries.append(
            {
                "name": art.name,
                "kind": art.kind,
                "path": os.path.relpath(art.path, bundle.output_dir).replace(os.sep, "/"),
                "sha256": digest,
            }
        )
    text = json.dumps({"artifacts": entries}, indent=2) + "\n"
    art = _emit(bundle.output_dir, "manifest.json", "json", text)
    bundle.artifacts.append(art)
    return art
