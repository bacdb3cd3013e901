"""Run configuration: chart files, built-in charts and structure specs.

A chart file is INI-style text::

    [chart]
    names = u1, u2
    domain = (-2, 2), (-2, 2)
    # embedding = ...            optional, comma separated

    [metric]
    row1 = 1, 0
    row2 = 0, 1

    [metric.inverse]
    row1 = 1, 0
    row2 = 0, 1

    [endo.J]
    row1 = 0, 1
    row2 = -1, 0
    # or: construction = octonion
    #     table = 123 145 176 247 265 364 375

    [structure]
    kind = lambda
    lambda = -1

``[endo.A]`` .. ``[endo.D]`` give the blocks for ``kind = blocks``.  Every
entry is an expression in the chart coordinates.
"""
from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .chart import Chart, EndoField, MatrixField, MetricField
from .exprcore import ParseError, evaluate, parse
from .genbundle import (BlockEndo, make_J_g, make_J_lambda, make_J_omega,
                        spherical_combination, weak_example)

__all__ = ["ConfigError", "RunConfig", "Setup", "load_chart_file", "builtin", "load_chart",
           "parse_structure", "build_structure", "export_sphere6", "BUILTINS"]

BUILTINS = ("s6", "r2", "r4")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    chart: str = "s6"
    structure: str | None = None
    seed: int = 0
    points: int = 100
    tol_vanish: float = 1e-9
    tol_nonvanish: float = 1e-3
    out: str | None = None
    directions: str | None = None

    def __post_init__(self):
        if not 0 < self.tol_vanish < self.tol_nonvanish:
            raise ConfigError("tolerances must satisfy 0 < tol-vanish < tol-nonvanish")
        if self.points < 1:
            raise ConfigError("--points must be positive")


@dataclass
class Setup:
    """Everything a command needs from a chart source."""
    chart: Chart
    metric: MetricField | None = None
    J: EndoField | None = None
    blocks: dict = field(default_factory=dict)
    structure: str | None = None
    table: object = None
    source: str = ""

    def sample(self, count: int, seed: int) -> np.ndarray:
        width = min(hi - lo for lo, hi in self.chart.domain)
        return self.chart.sample(count, seed=seed, margin=min(0.3, 0.25 * width))


# ---------------------------------------------------------------------------
# files
# ---------------------------------------------------------------------------

def _split(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _const(text: str) -> float:
    try:
        return float(evaluate(parse(text, ()), []))
    except ParseError as exc:
        raise ConfigError(f"bad constant {text!r}: {exc}") from exc


def _domain(text: str) -> list[tuple[float, float]]:
    pairs = re.findall(r"\(([^()]*(?:\([^()]*\)[^()]*)*)\)", text)
    out = []
    for p in pairs:
        parts = _split(p)
        if len(parts) != 2:
            raise ConfigError(f"domain interval needs two bounds: ({p})")
        out.append((_const(parts[0]), _const(parts[1])))
    if not out:
        raise ConfigError("domain must list intervals like (0, pi), (0, 2*pi)")
    return out


def _rows(cp: configparser.ConfigParser, section: str, n: int) -> list[list[str]]:
    sec = cp[section]
    keys = sorted((k for k in sec if re.fullmatch(r"row\d+", k)), key=lambda k: int(k[3:]))
    if [int(k[3:]) for k in keys] != list(range(1, n + 1)):
        raise ConfigError(f"[{section}] needs keys row1 .. row{n}")
    rows = [_split(sec[k]) for k in keys]
    for r, row in enumerate(rows, 1):
        if len(row) != n:
            raise ConfigError(f"[{section}] row{r} has {len(row)} entries, expected {n}")
    return rows


def _matrix(cp, section: str, chart: Chart, cls=MatrixField):
    rows = _rows(cp, section, chart.dim)
    try:
        return cls.from_strings(chart, rows)
    except ParseError as exc:
        raise ConfigError(f"[{section}] {exc}") from exc


def load_chart_file(path: str | Path) -> Setup:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if "chart" not in cp:
        raise ConfigError("missing [chart] section")
    sec = cp["chart"]
    names = tuple(_split(sec.get("names", "")))
    if not names:
        raise ConfigError("[chart] names is empty")
    try:
        emb = tuple(parse(s, names) for s in _split(sec["embedding"])) if "embedding" in sec else None
        chart = Chart(names, _domain(sec.get("domain", "")), emb, label=Path(path).stem)
    except ParseError as exc:
        raise ConfigError(f"[chart] embedding: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    metric = None
    if "metric" in cp:
        g = _matrix(cp, "metric", chart)
        if "metric.inverse" not in cp:
            raise ConfigError("[metric.inverse] is required alongside [metric]")
        metric = MetricField(g, _matrix(cp, "metric.inverse", chart))

    J, table = None, None
    if "endo.J" in cp:
        jsec = cp["endo.J"]
        if jsec.get("construction"):
            J, table = _constructed_J(chart, jsec)
        else:
            J = _matrix(cp, "endo.J", chart, EndoField)
    blocks = {b: _matrix(cp, f"endo.{b}", chart) for b in "ABCD" if f"endo.{b}" in cp}

    structure = None
    if "structure" in cp:
        s = dict(cp["structure"])
        kind = s.pop("kind", None)
        if not kind:
            raise ConfigError("[structure] needs a kind")
        structure = kind + (":" + ",".join(f"{k}={v}" for k, v in s.items()) if s else "")
    return Setup(chart, metric, J, blocks, structure, table, source=str(path))


def _constructed_J(chart: Chart, sec):
    from .sphere6 import CrossTable, build_J, calibrate_table

    if sec["construction"].strip() != "octonion":
        raise ConfigError(f"unknown construction {sec['construction']!r}")
    if chart.embedding is None or len(chart.embedding) != 7 or chart.dim != 6:
        raise ConfigError("octonion construction needs a 6-dimensional chart embedded in R^7")
    spec = sec.get("table", "calibrate").strip()
    if spec == "calibrate":
        table = calibrate_table(chart=chart)
    else:
        try:
            triples = [tuple(int(ch) for ch in t) for t in spec.split()]
            if any(len(t) != 3 for t in triples):
                raise ValueError
        except ValueError:
            raise ConfigError(f"table must list oriented triples like '123 145': {spec!r}") from None
        table = CrossTable.from_triples(triples, label=spec)
    return build_J(chart, table), table


# ---------------------------------------------------------------------------
# built-in charts
# ---------------------------------------------------------------------------

def _flat_r2() -> Setup:
    chart = Chart(("u1", "u2"), [(-2.0, 2.0)] * 2, label="r2")
    ident = [["1", "0"], ["0", "1"]]
    metric = MetricField(MatrixField.from_strings(chart, ident), MatrixField.from_strings(chart, ident))
    J = EndoField.from_strings(chart, [["0", "1"], ["-1", "0"]])
    return Setup(chart, metric, J, structure="lambda:-1", source="r2")


def _curved_r4() -> Setup:
    """R^4 with a rotated standard J and a conformal metric; J is not integrable."""
    chart = Chart(tuple(f"u{i}" for i in range(1, 5)), [(-1.0, 1.0)] * 4, label="r4")
    th = "(u2 + sin(u4))"
    R = MatrixField.from_strings(chart, [[f"cos{th}", "0", f"sin{th}", "0"], ["0", "1", "0", "0"],
                                         [f"-sin{th}", "0", f"cos{th}", "0"], ["0", "0", "0", "1"]])
    J0 = MatrixField.from_strings(chart, [["0", "1", "0", "0"], ["-1", "0", "0", "0"],
                                          ["0", "0", "0", "1"], ["0", "0", "-1", "0"]])
    Jm = R @ J0 @ R.transpose()
    J = EndoField(chart, Jm.fn, (4, 4))
    f = "(1 + u1^2 + 0.5*sin(u3))"
    diag = lambda s: [[s if a == b else "0" for b in range(4)] for a in range(4)]
    metric = MetricField(MatrixField.from_strings(chart, diag(f)),
                         MatrixField.from_strings(chart, diag(f"1/{f}")))
    return Setup(chart, metric, J, structure="omega", source="r4")


def _sphere6(table=None) -> Setup:
    from .sphere6 import sphere6

    s6 = sphere6(table)
    return Setup(s6.chart, s6.metric, s6.J, structure="omega", table=s6.table, source="s6")


def builtin(name: str, table=None) -> Setup:
    if name == "s6":
        return _sphere6(table)
    if name == "r2":
        return _flat_r2()
    if name == "r4":
        return _curved_r4()
    raise ConfigError(f"unknown built-in chart {name!r}; choose from {', '.join(BUILTINS)}")


def load_chart(source: str, table=None) -> Setup:
    if source in BUILTINS:
        return builtin(source, table)
    if not Path(source).exists():
        raise ConfigError(f"chart {source!r} is neither built in nor an existing file")
    return load_chart_file(source)


# ---------------------------------------------------------------------------
# structures
# ---------------------------------------------------------------------------

def parse_structure(spec: str) -> tuple[str, dict[str, str]]:
    """``"spherical:a=0,b=0,c=1"`` -> ``("spherical", {"a": "0", ...})``."""
    kind, _, rest = spec.strip().partition(":")
    kind = kind.strip().lower()
    params: dict[str, str] = {}
    for item in _split(rest):
        key, eq, val = item.partition("=")
        if not eq:
            if kind == "lambda" and "lambda" not in params:
                params["lambda"] = key.strip()
                continue
            raise ConfigError(f"structure parameter {item!r} is not key=value")
        params[key.strip().lower()] = val.strip()
    if kind not in ("lambda", "omega", "g", "weak", "spherical", "blocks"):
        raise ConfigError(f"unknown structure kind {kind!r}")
    return kind, params


def build_structure(setup: Setup, spec: str | None, points) -> BlockEndo:
    spec = spec or setup.structure
    if not spec:
        raise ConfigError("no structure given")
    kind, params = parse_structure(spec)
    need_J = kind in ("lambda", "omega", "weak", "spherical")
    need_g = kind in ("omega", "g", "weak", "spherical")
    if need_J and setup.J is None:
        raise ConfigError(f"structure {kind!r} needs an almost complex structure [endo.J]")
    if need_g and setup.metric is None:
        raise ConfigError(f"structure {kind!r} needs a metric")
    chart = setup.chart
    try:
        if kind == "lambda":
            lam = _const(params.get("lambda", "-1"))
            if lam not in (1.0, -1.0):
                raise ConfigError("lambda must be 1 or -1")
            return make_J_lambda(setup.J, int(lam), points)
        if kind == "omega":
            return make_J_omega(setup.metric, setup.J, 1, points)
        if kind == "g":
            return make_J_g(setup.metric, points)
        if kind == "weak":
            return weak_example(setup.J, setup.metric)
        if kind == "spherical":
            coeffs = [chart.parse(params.get(k, "0")) for k in "abc"]
            return spherical_combination(*coeffs, setup.J, setup.metric, points)
        if not setup.blocks:
            raise ConfigError("kind = blocks needs [endo.A] .. [endo.D]")
        T = BlockEndo.from_blocks(*(setup.blocks.get(b) for b in "ABCD"), chart=chart,
                                  name="blocks")
        T.check_square(points)
        return T
    except ParseError as exc:
        raise ConfigError(f"structure coefficient: {exc}") from exc


def export_sphere6(table=None) -> str:
    """The S^6 chart in the file format above, with ``J`` given by construction."""
    from .sphere6 import _embedding_strings, _metric_strings, calibrate_table

    table = table or calibrate_table()
    g, ginv = _metric_strings()
    lines = ["[chart]", "names = " + ", ".join(f"u{i}" for i in range(1, 7)),
             "domain = " + ", ".join(["(0, pi)"] * 5 + ["(0, 2*pi)"]),
             "embedding = " + ", ".join(_embedding_strings()), "", "[metric]"]
    lines += [f"row{r + 1} = " + ", ".join(row) for r, row in enumerate(g)]
    lines += ["", "[metric.inverse]"]
    lines += [f"row{r + 1} = " + ", ".join(row) for r, row in enumerate(ginv)]
    lines += ["", "[endo.J]", "construction = octonion", f"table = {table.describe()}",
              "", "[structure]", "kind = omega", ""]
    return "\n".join(lines)
