"""CSV reports and minimal SVG charts.

CSV is the normative output; the SVG charts are a convenience for a quick
look and are emitted by hand.
"""

import collections
import csv
import io
import math

import numpy as np

from gaitprior import utils
from gaitprior.ppo import LOG_FIELDS

FLOAT_FORMAT = '%.10g'

SUMMARY_FIELDS = ['label', 'n', 'mean', 'std', 'median', 'iqr']
PCA_FIELDS = ['component', 'explained_variance_ratio', 'cumulative']

SVG_WIDTH = 640
SVG_HEIGHT = 400
SVG_MARGIN = 50
SVG_COLORS = ['#1f77b4', '#ff7f0e', '#2ca02c', '#d62728', '#9467bd',
              '#8c564b', '#e377c2', '#7f7f7f', '#bcbd22', '#17becf']


def _format(value):
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % (value)
    return str(value)


def write_csv(path, fields, rows):
    """Write dict rows with a header line; floats use ``FLOAT_FORMAT``."""
    with io.open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(fields)
        for row in rows:
            writer.writerow([_format(row[k]) for k in fields])


def read_csv(path):
    """Rows of a CSV file as OrderedDicts of floats where possible."""
    rows = []
    with io.open(path, 'r', encoding='utf-8', newline='') as f:
        for row in csv.DictReader(f):
            parsed = collections.OrderedDict()
            for k, v in row.items():
                try:
                    parsed[k] = float(v)
                except ValueError:
                    parsed[k] = v
            rows.append(parsed)
    return rows


def write_training_log(path, log):
    write_csv(path, LOG_FIELDS, log)


def summarize(values):
    """Mean, std, median and interquartile range of per-seed results.

    >>> s = summarize([1.0, 2.0, 3.0, 4.0, 5.0])
    >>> s['mean'], s['median'], s['iqr']
    (3.0, 3.0, 2.0)
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        nan = float('nan')
        return collections.OrderedDict(
            [('n', 0), ('mean', nan), ('std', nan), ('median', nan),
             ('iqr', nan)])
    return collections.OrderedDict([
        ('n', int(values.size)),
        ('mean', float(np.mean(values))),
        ('std', float(np.std(values))),
        ('median', float(np.median(values))),
        ('iqr', utils.interquartile_range(values)),
    ])


def summary_rows(groups):
    """One summary row per ``(label, values)`` pair, in the given order."""
    rows = []
    for label, values in groups:
        row = collections.OrderedDict([('label', label)])
        row.update(summarize(values))
        rows.append(row)
    return rows


def pca_rows(pca):
    return [collections.OrderedDict([
        ('component', i + 1),
        ('explained_variance_ratio', float(r)),
        ('cumulative', float(c))])
        for i, (r, c) in enumerate(zip(pca.explained_variance_ratio,
                                       pca.cumulative))]


def _finite_range(values, pad=0.05):
    finite = [v for v in values if math.isfinite(v)]
    if len(finite) == 0:
        return 0.0, 1.0
    lo, hi = min(finite), max(finite)
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    span = hi - lo
    return lo - pad * span, hi + pad * span


class _Canvas(object):

    def __init__(self, x_range, y_range, title, x_label, y_label):
        self.x_lo, self.x_hi = x_range
        self.y_lo, self.y_hi = y_range
        self.parts = [
            '<svg xmlns="http://www.w3.org/2000/svg" width="%d" height="%d">'
            % (SVG_WIDTH, SVG_HEIGHT),
            '<rect width="100%" height="100%" fill="white"/>',
            '<text x="%d" y="20" text-anchor="middle" font-size="14">%s</text>'
            % (SVG_WIDTH // 2, _escape(title)),
            '<text x="%d" y="%d" text-anchor="middle" font-size="12">%s'
            '</text>' % (SVG_WIDTH // 2, SVG_HEIGHT - 10, _escape(x_label)),
            '<text x="14" y="%d" text-anchor="middle" font-size="12" '
            'transform="rotate(-90 14 %d)">%s</text>' %
            (SVG_HEIGHT // 2, SVG_HEIGHT // 2, _escape(y_label)),
        ]
        x0, y0 = self.px(self.x_lo, self.y_lo)
        x1, y1 = self.px(self.x_hi, self.y_hi)
        self.parts.append('<rect x="%.1f" y="%.1f" width="%.1f" height="%.1f" '
                          'fill="none" stroke="black"/>' %
                          (x0, y1, x1 - x0, y0 - y1))
        for v, anchor in [(self.y_lo, y0), (self.y_hi, y1)]:
            self.parts.append('<text x="%.1f" y="%.1f" text-anchor="end" '
                              'font-size="10">%s</text>' %
                              (x0 - 4, anchor + 4, '%.3g' % (v)))
        for v, anchor in [(self.x_lo, x0), (self.x_hi, x1)]:
            self.parts.append('<text x="%.1f" y="%.1f" text-anchor="middle" '
                              'font-size="10">%s</text>' %
                              (anchor, y0 + 14, '%.3g' % (v)))

    def px(self, x, y):
        w = SVG_WIDTH - 2 * SVG_MARGIN
        h = SVG_HEIGHT - 2 * SVG_MARGIN
        fx = (x - self.x_lo) / (self.x_hi - self.x_lo)
        fy = (y - self.y_lo) / (self.y_hi - self.y_lo)
        return SVG_MARGIN + fx * w, SVG_HEIGHT - SVG_MARGIN - fy * h

    def legend(self, i, label, color):
        self.parts.append('<text x="%d" y="%d" font-size="11" fill="%s">%s'
                          '</text>' % (SVG_WIDTH - SVG_MARGIN - 120,
                                       SVG_MARGIN + 14 * (i + 1), color,
                                       _escape(label)))

    def render(self):
        return '\n'.join(self.parts + ['</svg>']) + '\n'


def _escape(text):
    return str(text).replace('&', '&amp;').replace('<', '&lt;') \
        .replace('>', '&gt;')


def line_chart(series, title='', x_label='', y_label=''):
    """SVG line chart.

    Args:
        series (list): ``(label, xs, ys)`` triples; non-finite points are
          skipped.

    Returns:
        str: the SVG document.
    """
    xs_all = [x for _, xs, _ in series for x in xs]
    ys_all = [y for _, _, ys in series for y in ys]
    canvas = _Canvas(_finite_range(xs_all, 0.0), _finite_range(ys_all),
                     title, x_label, y_label)
    for i, (label, xs, ys) in enumerate(series):
        color = SVG_COLORS[i % len(SVG_COLORS)]
        points = ['%.1f,%.1f' % canvas.px(x, y) for x, y in zip(xs, ys)
                  if math.isfinite(x) and math.isfinite(y)]
        if len(points) > 0:
            canvas.parts.append('<polyline fill="none" stroke="%s" '
                                'stroke-width="1.5" points="%s"/>' %
                                (color, ' '.join(points)))
        canvas.legend(i, label, color)
    return canvas.render()


def bar_chart(labels, values, errors=None, title='', y_label=''):
    """SVG bar chart with optional symmetric error bars."""
    errors = errors if errors is not None else [0.0] * len(values)
    lows = [v - e for v, e in zip(values, errors)] + [0.0]
    highs = [v + e for v, e in zip(values, errors)] + [0.0]
    canvas = _Canvas((0.0, float(max(len(values), 1))),
                     _finite_range(lows + highs), title, '', y_label)
    for i, (label, v, e) in enumerate(zip(labels, values, errors)):
        if not math.isfinite(v):
            continue
        color = SVG_COLORS[i % len(SVG_COLORS)]
        x0, y_base = canvas.px(i + 0.15, 0.0)
        x1, y_top = canvas.px(i + 0.85, v)
        canvas.parts.append('<rect x="%.1f" y="%.1f" width="%.1f" '
                            'height="%.1f" fill="%s"/>' %
                            (x0, min(y_base, y_top), x1 - x0,
                             abs(y_base - y_top), color))
        if e > 0 and math.isfinite(e):
            xm, y_lo = canvas.px(i + 0.5, v - e)
            _, y_hi = canvas.px(i + 0.5, v + e)
            canvas.parts.append('<line x1="%.1f" y1="%.1f" x2="%.1f" '
                                'y2="%.1f" stroke="black"/>' %
                                (xm, y_lo, xm, y_hi))
        xm, _ = canvas.px(i + 0.5, 0.0)
        canvas.parts.append('<text x="%.1f" y="%d" text-anchor="middle" '
                            'font-size="10">%s</text>' %
                            (xm, SVG_HEIGHT - SVG_MARGIN + 28,
                             _escape(label)))
    return canvas.render()


def write_svg(path, text):
    with io.open(path, 'w', encoding='utf-8') as f:
        f.write(text)
