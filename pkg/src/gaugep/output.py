"""CSV time series and JSON summaries.

CSV files start with a comment line carrying the schema version and run
metadata, e.g.::

    # gaugep-csv v1 kind=simulate system=absorber/circular figure_scale=2

followed by a header row.  Numbers are written in their shortest
round-trip form, so identical runs produce identical bytes.
"""

import csv
import io
import json
import math

import numpy as np

from .errors import ConfigurationError
from .estimator import MomentSeries

SCHEMA = "gaugep-csv"
VERSION = "v1"
WEIGHT_COLUMNS = ("mean_re_omega", "var_re_omega", "var_im_omega", "diverged_count")


def moment_column(n, m, mode=0):
    return f"n{n}m{m}" + (f"_mode{mode}" if mode else "")


def _num(v):
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def write_series(path, times, moments, weights=None, diverged=None, meta=None,
                 figure_scale=1.0):
    """Write moment series to ``path``.

    Parameters
    ----------
    times : array
        Native-unit record times.
    moments : dict
        ``column name -> MomentSeries``.
    weights : WeightDiagnostics, optional
        Oracle output passes ``None``; weight columns are then ``1, 0, 0``.
    diverged : array of int, optional
        Diverged-trajectory count per record.
    meta : dict
        Extra ``key=value`` pairs for the comment line (no spaces in values).
    """
    meta = dict(meta or {})
    meta.setdefault("figure_scale", _num(figure_scale))
    buf = io.StringIO()
    head = " ".join(f"{k}={str(v).replace(' ', '_')}" for k, v in meta.items())
    buf.write(f"# {SCHEMA} {VERSION} {head}\n")
    w = csv.writer(buf, lineterminator="\n")
    cols = ["time", "figure_time"]
    for name in moments:
        cols += [f"{name}_re", f"{name}_im", f"{name}_err"]
    cols += list(WEIGHT_COLUMNS)
    w.writerow(cols)
    n = len(times)
    for r in range(n):
        row = [_num(times[r]), _num(times[r] * figure_scale)]
        for s in moments.values():
            v = complex(s.value[r])
            row += [_num(v.real), _num(v.imag), _num(s.std_err[r])]
        if weights is None:
            row += ["1.0", "0.0", "0.0"]
        else:
            row += [_num(weights.mean_re_omega[r]), _num(weights.var_re_omega[r]),
                    _num(weights.var_im_omega[r])]
        row.append(str(int(diverged[r])) if diverged is not None else "0")
        w.writerow(row)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


class SeriesFile:
    """Parsed CSV: ``meta`` from the comment line, ``columns`` as float arrays."""

    def __init__(self, meta, columns):
        self.meta = meta
        self.columns = columns

    @property
    def times(self):
        return self.columns["time"]

    def moment_names(self):
        return [c[:-3] for c in self.columns if c.endswith("_re")
                and c[:-3] + "_err" in self.columns]

    def series(self, name):
        c = self.columns
        v = c[f"{name}_re"] + 1j * c[f"{name}_im"]
        n = len(v)
        return MomentSeries(self.times, v, c[f"{name}_err"], v.copy(), np.ones(n),
                            np.isfinite(v), c.get("diverged_count", np.zeros(n)).astype(int), 0,
                            name, float(self.meta.get("figure_scale", 1.0)))


def read_series(path):
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        parts = first.strip().lstrip("#").split()
        if len(parts) < 2 or parts[0] != SCHEMA:
            raise ConfigurationError(f"{path}: not a {SCHEMA} file")
        if parts[1] != VERSION:
            raise ConfigurationError(f"{path}: schema {parts[1]} is not {VERSION}")
        meta = dict(p.split("=", 1) for p in parts[2:] if "=" in p)
        rows = list(csv.reader(fh))
    if not rows:
        raise ConfigurationError(f"{path}: missing header")
    header, body = rows[0], rows[1:]
    if header[:2] != ["time", "figure_time"]:
        raise ConfigurationError(f"{path}: unexpected columns")
    cols = {h: np.array([float(r[i]) for r in body]) for i, h in enumerate(header)}
    return SeriesFile(meta, cols)


def _jsonable(v):
    if isinstance(v, complex):
        return {"re": v.real, "im": v.imag}
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def write_summary(path, summary):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(summary), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_table(path, header, rows, meta=None):
    """Generic CSV with the versioned comment line (used by sweeps)."""
    meta = meta or {}
    head = " ".join(f"{k}={str(v).replace(' ', '_')}" for k, v in meta.items())
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# {SCHEMA} {VERSION} {head}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_num(x) if isinstance(x, (float, np.floating)) else x for x in r])
