"""Minimal SVG document builder.

Coordinates are printed with a fixed number of decimals so identical input
always produces identical bytes.
"""

from xml.sax.saxutils import escape, quoteattr

PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#ad494a",
)


def fmt(x, digits=2):
    s = f"{x:.{digits}f}"
    return "0" if s.strip("-0.") == "" else s


class Svg:
    def __init__(self, width, height, title=None):
        self.width = width
        self.height = height
        self.parts = []
        self.defs = []
        if title:
            self.parts.append(f"<title>{escape(title)}</title>")

    def _attrs(self, attrs):
        out = []
        for key, value in attrs.items():
            if value is None:
                continue
            key = key.rstrip("_").replace("_", "-")
            if isinstance(value, float):
                value = fmt(value)
            out.append(f" {key}={quoteattr(str(value))}")
        return "".join(out)

    def add(self, tag, text=None, **attrs):
        if text is None:
            self.parts.append(f"<{tag}{self._attrs(attrs)}/>")
        else:
            self.parts.append(f"<{tag}{self._attrs(attrs)}>{escape(text)}</{tag}>")

    def raw(self, markup):
        self.parts.append(markup)

    def line(self, x1, y1, x2, y2, **attrs):
        self.add("line", x1=float(x1), y1=float(y1), x2=float(x2), y2=float(y2), **attrs)

    def rect(self, x, y, w, h, **attrs):
        self.add("rect", x=float(x), y=float(y), width=float(w), height=float(h), **attrs)

    def circle(self, cx, cy, r, **attrs):
        self.add("circle", cx=float(cx), cy=float(cy), r=float(r), **attrs)

    def text(self, x, y, content, **attrs):
        self.add("text", content, x=float(x), y=float(y), **attrs)

    def render(self):
        head = (
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
            f'viewBox="0 0 {self.width} {self.height}" font-family="sans-serif" font-size="11">\n'
        )
        defs = "<defs>" + "".join(self.defs) + "</defs>\n" if self.defs else ""
        return head + defs + "\n".join(self.parts) + "\n</svg>\n"


class Axes:
    """Linear map from a data window onto a pixel box (y grows upward)."""

    def __init__(self, x0, y0, width, height, xlim, ylim):
        self.x0, self.y0, self.width, self.height = x0, y0, width, height
        self.xlim = xlim
        self.ylim = ylim

    def px(self, x):
        lo, hi = self.xlim
        return self.x0 + (x - lo) / (hi - lo) * self.width

    def py(self, y):
        lo, hi = self.ylim
        return self.y0 + self.height - (y - lo) / (hi - lo) * self.height


def padded_range(values, pad=0.05):
    lo = float(min(values))
    hi = float(max(values))
    if hi == lo:
        return lo - 0.5, hi + 0.5
    span = hi - lo
    return lo - pad * span, hi + pad * span
