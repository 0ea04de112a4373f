"""Plain-text instance files and versioned CSV output.

Hypergraph file::

    m n variant
    v_1 ... v_n  x_1 ... x_k        (one line per hyperedge)

where the measurement is n-1 group elements (one angle each for SO2, nine
row-major entries each for SO3) relative to the listed vertex order.
Vertex labels may be arbitrary tokens; they are mapped to ids 0..m-1.
Lines starting with ``#`` are ignored.

Ground-truth file::

    m H variant
    <m lines, one vertex element each>
    good|bad s_star                 (one line per hyperedge)
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
from pathlib import Path

import numpy as np

from .group import Variant, VertexPotential, normalize_angle
from .hypergraph import UniformHypergraph, induced_measurements
from .model import GroundTruth

CSV_VERSION = 1
CSV_VERSION_PREFIX = "# hypersync-csv-version:"


class FormatError(ValueError):
    """Malformed instance or CSV file."""


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _element_tokens(variant: Variant, value) -> list:
    if variant is Variant.SO2:
        return [_fmt(value)]
    return [_fmt(x) for x in np.asarray(value).reshape(9)]


def _content_lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if line and not line.startswith("#"):
                yield lineno, line.split()


def write_hypergraph(H: UniformHypergraph, path) -> None:
    lines = [f"{H.m} {H.n} {H.variant.value}"]
    for row, meas in zip(H.edges, H.measurements):
        tokens = [str(int(v)) for v in row]
        for comp in meas:
            tokens += _element_tokens(H.variant, comp)
        lines.append(" ".join(tokens))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _parse_header(tokens, lineno):
    if len(tokens) != 3:
        raise FormatError(f"line {lineno}: header must be 'm n variant'")
    try:
        a, b = int(tokens[0]), int(tokens[1])
        variant = Variant.parse(tokens[2])
    except ValueError as exc:
        raise FormatError(f"line {lineno}: bad header ({exc})") from exc
    return a, b, variant


def read_hypergraph(path) -> tuple:
    """Parse a hypergraph file.

    Returns:
        ``(H, labels)`` where ``labels[i]`` is the original label of vertex ``i``.
    """
    lines = _content_lines(path)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise FormatError("empty hypergraph file") from None
    m, n, variant = _parse_header(header, lineno)
    width = 1 if variant is Variant.SO2 else 9
    expected = n + (n - 1) * width
    raw_labels, values = [], []
    for lineno, tokens in lines:
        if len(tokens) != expected:
            raise FormatError(f"line {lineno}: expected {expected} fields, found {len(tokens)}")
        raw_labels.append(tokens[:n])
        try:
            values.append([float(x) for x in tokens[n:]])
        except ValueError as exc:
            raise FormatError(f"line {lineno}: {exc}") from exc
    labels = _label_map(raw_labels, m)
    index = {lab: i for i, lab in enumerate(labels)}
    vertex_lists = [[index[lab] for lab in row] for row in raw_labels]
    if any(len(set(vs)) != n for vs in vertex_lists):
        raise FormatError("a hyperedge repeats a vertex")
    meas = np.asarray(values, dtype=float)
    if variant is Variant.SO2:
        meas = meas.reshape(-1, n - 1)
    else:
        meas = meas.reshape(-1, n - 1, 3, 3)
    try:
        H = UniformHypergraph.from_unsorted(m, variant, vertex_lists, meas) if vertex_lists else UniformHypergraph(
            m, n, variant, np.empty((0, n), np.int64), meas
        )
    except ValueError as exc:
        raise FormatError(str(exc)) from exc
    return H, labels


def _label_map(raw_labels, m: int) -> list:
    """Integer labels in [0, m) are kept; otherwise labels are numbered by first appearance."""
    flat = [lab for row in raw_labels for lab in row]
    try:
        ints = [int(lab) for lab in flat]
        if all(0 <= x < m for x in ints):
            return [str(i) for i in range(m)]
    except ValueError:
        pass
    seen = list(dict.fromkeys(flat))
    if len(seen) > m:
        raise FormatError(f"{len(seen)} distinct vertex labels but m = {m}")
    return seen + [f"_unused{i}" for i in range(m - len(seen))]


def write_ground_truth(gt: GroundTruth, path) -> None:
    pot = gt.vertex_potential
    lines = [f"{len(pot)} {gt.s_star.size} {pot.variant.value}"]
    lines += [" ".join(_element_tokens(pot.variant, v)) for v in pot.values]
    lines += [f"{'bad' if b else 'good'} {_fmt(s)}" for b, s in zip(gt.bad, gt.s_star)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_ground_truth(path, H: UniformHypergraph | None = None) -> GroundTruth:
    """Parse a ground-truth file; true measurements are recomputed when ``H`` is given."""
    lines = list(_content_lines(path))
    if not lines:
        raise FormatError("empty ground-truth file")
    lineno, header = lines[0]
    m, count, variant = _parse_header(header, lineno)
    body = lines[1:]
    if len(body) != m + count:
        raise FormatError(f"expected {m + count} records, found {len(body)}")
    try:
        vals = np.array([[float(x) for x in toks] for _, toks in body[:m]], dtype=float)
        if variant is Variant.SO2:
            vals = normalize_angle(vals.reshape(m))
        else:
            vals = vals.reshape(m, 3, 3)
        flags = [toks[0] for _, toks in body[m:]]
        s_star = np.array([float(toks[1]) for _, toks in body[m:]])
    except (ValueError, IndexError) as exc:
        raise FormatError(f"bad ground-truth record ({exc})") from exc
    if any(f not in ("good", "bad") for f in flags):
        raise FormatError("hyperedge status must be 'good' or 'bad'")
    pot = VertexPotential(variant, vals)
    true = induced_measurements(H, pot) if H is not None else None
    return GroundTruth(pot, true, np.array([f == "bad" for f in flags]), s_star)


def csv_text(header, rows, timestamp: bool = True, notes=()) -> str:
    """Render a versioned CSV document."""
    buf = io.StringIO()
    buf.write(f"{CSV_VERSION_PREFIX} {CSV_VERSION}\n")
    if timestamp:
        buf.write(f"# generated: {_dt.datetime.now(_dt.timezone.utc).isoformat(timespec='seconds')}\n")
    for note in notes:
        buf.write(f"# {note}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


def write_csv(path, header, rows, timestamp: bool = True, notes=()) -> None:
    Path(path).write_text(csv_text(header, rows, timestamp, notes), encoding="utf-8")


def read_csv(path) -> list:
    """Rows of a versioned CSV as dicts; rejects missing or unknown versions."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().strip()
        if not first.startswith(CSV_VERSION_PREFIX):
            raise FormatError("missing CSV schema-version header")
        version = first[len(CSV_VERSION_PREFIX):].strip()
        if version != str(CSV_VERSION):
            raise FormatError(f"unsupported CSV schema version {version!r}")
        body = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(body))
