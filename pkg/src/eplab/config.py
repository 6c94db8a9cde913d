"""JSON run configuration: parsing, validation, overrides and echo.

Complex numbers travel as ``[re, im]``. Every object rejects unknown keys and
errors name the dotted path of the offending entry, e.g.
``spec.channels[0].w[1]``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import ConfigError
from .model import (
    Channel,
    Conventions,
    Level,
    ParameterPath,
    ParameterPoint,
    SystemSpec,
    WIDTH_SIGNS,
    validate_spec,
)
from .observables import Thresholds


@dataclass(frozen=True)
class PathDef:
    """A path given either by explicit points or as ``start -> stop`` in ``num`` steps."""

    points: tuple = ()
    start: ParameterPoint | None = None
    stop: ParameterPoint | None = None
    num: int = 0
    closed: bool = False

    def materialize(self) -> ParameterPath:
        if self.points:
            return ParameterPath(self.points, self.closed)
        return ParameterPath(ParameterPath.linear(self.start, self.stop, self.num).points, self.closed)


@dataclass(frozen=True)
class LoopDef:
    unknowns: tuple = ("a", "omega[0].re")
    center: tuple | None = None
    radius: float = 0.1
    steps: int = 400
    turns: int = 1


@dataclass(frozen=True)
class SearchDef:
    unknowns: tuple = ("a", "omega[0].re")
    seed: tuple | None = None
    method: str = "auto"
    pair: tuple | None = None
    max_iter: int = 50


@dataclass(frozen=True)
class Tolerances:
    t_orth: float = 1e-3
    t_prob: float = 0.05
    t_ent: float = 0.05
    t_gap: float | None = None
    gap_factor: float = 0.1
    so_tol: float = 1e-10
    ep_gap_tol: float = 1e-7
    ep_so_tol: float = 1e-6
    match_tol: float = 1.0
    max_refine: int = 12
    w_steps: int = 5
    plateau_window: int = 10
    plateau_delta: float = 0.01

    def equilibrium(self) -> Thresholds:
        return Thresholds(self.t_orth, self.t_prob, self.t_ent, self.t_gap, self.gap_factor)


@dataclass(frozen=True)
class Outputs:
    csv: str = "sweep.csv"
    json: str = "summary.json"
    plot_data: str = "plot"
    precision: int = 12


@dataclass(frozen=True)
class Execution:
    parallel: bool = False
    workers: int | None = None


@dataclass(frozen=True)
class RunConfig:
    spec: SystemSpec
    point: ParameterPoint | None = None
    path: PathDef | None = None
    loop: LoopDef | None = None
    search: SearchDef | None = None
    thresholds: Tolerances = field(default_factory=Tolerances)
    outputs: Outputs = field(default_factory=Outputs)
    execution: Execution = field(default_factory=Execution)

    def evaluation_point(self) -> ParameterPoint:
        if self.point is not None:
            return self.point
        if self.path is not None:
            return self.path.materialize().points[0]
        return ParameterPoint(0.0, (0j,) * self.spec.n_channels)


# -- low-level readers --------------------------------------------------------


def _obj(d, where, allowed, required=()):
    if not isinstance(d, dict):
        raise ConfigError("expected an object", where)
    for k in d:
        if k not in allowed:
            raise ConfigError(f"unknown key {k!r}", f"{where}.{k}" if where else k)
    for k in required:
        if k not in d:
            raise ConfigError("missing required key", f"{where}.{k}" if where else k)
    return d


def _real(v, where):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError("expected a number", where)
    if not np.isfinite(v):
        raise ConfigError("expected a finite number", where)
    return float(v)


def _int(v, where, lo=None, hi=None):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError("expected an integer", where)
    if lo is not None and v < lo:
        raise ConfigError(f"must be ≥ {lo}", where)
    if hi is not None and v > hi:
        raise ConfigError(f"must be ≤ {hi}", where)
    return v


def _complex(v, where):
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(_real(v, where))
    if not isinstance(v, list) or len(v) != 2:
        raise ConfigError("complex needs [re, im]", where)
    return complex(_real(v[0], f"{where}[0]"), _real(v[1], f"{where}[1]"))


def _list(v, where):
    if not isinstance(v, list):
        raise ConfigError("expected a list", where)
    return v


def _str(v, where, choices=None):
    if not isinstance(v, str):
        raise ConfigError("expected a string", where)
    if choices is not None and v not in choices:
        raise ConfigError(f"must be one of {list(choices)}", where)
    return v


def _bool(v, where):
    if not isinstance(v, bool):
        raise ConfigError("expected true or false", where)
    return v


# -- section parsers ------------------------------------------------------------


def _parse_spec(d, where="spec"):
    _obj(d, where, ("n_states", "diag_energies", "channels", "conventions"),
         ("n_states", "diag_energies", "channels"))
    n = _int(d["n_states"], f"{where}.n_states")
    if n < 2:
        raise ConfigError("n_states must be ≥ 2", f"{where}.n_states")
    levels = []
    for k, lev in enumerate(_list(d["diag_energies"], f"{where}.diag_energies")):
        w = f"{where}.diag_energies[{k}]"
        _obj(lev, w, ("e0", "e1", "gamma0"), ("e0",))
        levels.append(Level(
            _real(lev["e0"], f"{w}.e0"),
            _real(lev.get("e1", 0.0), f"{w}.e1"),
            _real(lev.get("gamma0", 0.0), f"{w}.gamma0"),
        ))
    chans = []
    for c, ch in enumerate(_list(d["channels"], f"{where}.channels")):
        w = f"{where}.channels[{c}]"
        _obj(ch, w, ("w", "label"), ("w",))
        vec = tuple(_complex(x, f"{w}.w[{j}]") for j, x in enumerate(_list(ch["w"], f"{w}.w")))
        chans.append(Channel(vec, _str(ch.get("label", f"c{c}"), f"{w}.label")))
    conv = Conventions()
    if "conventions" in d:
        _obj(d["conventions"], f"{where}.conventions", ("width_sign",))
        conv = Conventions(_str(d["conventions"].get("width_sign", "physical_minus"),
                                f"{where}.conventions.width_sign", WIDTH_SIGNS))
    spec = SystemSpec(n, tuple(levels), tuple(chans), conv)
    problems = validate_spec(spec)
    if problems:
        raise ConfigError("; ".join(problems), where)
    return spec


def _parse_point(d, where, n_channels):
    _obj(d, where, ("a", "omegas"), ("a", "omegas"))
    om = _list(d["omegas"], f"{where}.omegas")
    if len(om) != n_channels:
        raise ConfigError(f"expected {n_channels} couplings", f"{where}.omegas")
    return ParameterPoint(
        _real(d["a"], f"{where}.a"),
        tuple(_complex(x, f"{where}.omegas[{c}]") for c, x in enumerate(om)),
    )


def _parse_path(d, where, C):
    _obj(d, where, ("points", "start", "stop", "num", "closed"))
    closed = _bool(d.get("closed", False), f"{where}.closed")
    if "points" in d:
        if any(k in d for k in ("start", "stop", "num")):
            raise ConfigError("give either points or start/stop/num", where)
        pts = tuple(_parse_point(p, f"{where}.points[{k}]", C)
                    for k, p in enumerate(_list(d["points"], f"{where}.points")))
        if len(pts) < 2:
            raise ConfigError("path needs at least 2 points", f"{where}.points")
        out = PathDef(points=pts, closed=closed)
    else:
        for k in ("start", "stop", "num"):
            if k not in d:
                raise ConfigError("missing required key", f"{where}.{k}")
        out = PathDef(
            start=_parse_point(d["start"], f"{where}.start", C),
            stop=_parse_point(d["stop"], f"{where}.stop", C),
            num=_int(d["num"], f"{where}.num", lo=2),
            closed=closed,
        )
    try:
        out.materialize()
    except Exception as exc:
        raise ConfigError(str(exc), where) from None
    return out


def _pair2(v, where, conv):
    v = _list(v, where)
    if len(v) != 2:
        raise ConfigError("expected two entries", where)
    return tuple(conv(x, f"{where}[{k}]") for k, x in enumerate(v))


def _parse_loop(d, where):
    _obj(d, where, ("unknowns", "center", "radius", "steps", "turns"))
    base = LoopDef()
    radius = _real(d.get("radius", base.radius), f"{where}.radius")
    if radius <= 0:
        raise ConfigError("must be > 0", f"{where}.radius")
    return LoopDef(
        _pair2(d.get("unknowns", list(base.unknowns)), f"{where}.unknowns", _str),
        None if d.get("center") is None else _pair2(d["center"], f"{where}.center", _real),
        radius,
        _int(d.get("steps", base.steps), f"{where}.steps", lo=16),
        _int(d.get("turns", base.turns), f"{where}.turns", lo=1),
    )


def _parse_search(d, where):
    _obj(d, where, ("unknowns", "seed", "method", "pair", "max_iter"))
    base = SearchDef()
    return SearchDef(
        _pair2(d.get("unknowns", list(base.unknowns)), f"{where}.unknowns", _str),
        None if d.get("seed") is None else _pair2(d["seed"], f"{where}.seed", _real),
        _str(d.get("method", base.method), f"{where}.method", ("auto", "2x2", "nd")),
        None if d.get("pair") is None else _pair2(d["pair"], f"{where}.pair", lambda x, w: _int(x, w, lo=0)),
        _int(d.get("max_iter", base.max_iter), f"{where}.max_iter", lo=1),
    )


def _parse_dataclass(cls, d, where):
    names = [f.name for f in fields(cls)]
    _obj(d, where, names)
    base = cls()
    kw = {}
    for f in fields(cls):
        if f.name not in d:
            continue
        v, w = d[f.name], f"{where}.{f.name}"
        default = getattr(base, f.name)
        if f.name in ("t_gap", "workers") and v is None:
            kw[f.name] = None
        elif isinstance(default, bool):
            kw[f.name] = _bool(v, w)
        elif isinstance(default, int) or f.name == "workers":
            kw[f.name] = _int(v, w, lo=1 if f.name != "precision" else 6,
                              hi=17 if f.name == "precision" else None)
        elif isinstance(default, float) or f.name == "t_gap":
            kw[f.name] = _real(v, w)
            if kw[f.name] < 0:
                raise ConfigError("must be ≥ 0", w)
        else:
            kw[f.name] = _str(v, w)
    return cls(**kw)


def config_from_dict(doc) -> RunConfig:
    _obj(doc, "", ("spec", "point", "path", "loop", "search", "thresholds", "outputs", "execution"),
         ("spec",))
    spec = _parse_spec(doc["spec"])
    C = spec.n_channels
    return RunConfig(
        spec=spec,
        point=None if doc.get("point") is None else _parse_point(doc["point"], "point", C),
        path=None if doc.get("path") is None else _parse_path(doc["path"], "path", C),
        loop=None if doc.get("loop") is None else _parse_loop(doc["loop"], "loop"),
        search=None if doc.get("search") is None else _parse_search(doc["search"], "search"),
        thresholds=_parse_dataclass(Tolerances, doc.get("thresholds", {}), "thresholds"),
        outputs=_parse_dataclass(Outputs, doc.get("outputs", {}), "outputs"),
        execution=_parse_dataclass(Execution, doc.get("execution", {}), "execution"),
    )


def load_document(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def parse_config(text: str, overrides=()) -> RunConfig:
    """Parse and validate a JSON run configuration, applying ``KEY=VALUE`` overrides."""
    doc = load_document(text)
    for item in overrides:
        apply_override(doc, item)
    return config_from_dict(doc)


def apply_override(doc, item: str):
    """Set a dotted key (list indices as integers) to a JSON-parsed value."""
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not KEY=VALUE")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    parts = key.strip().split(".")
    cur = doc
    for k, part in enumerate(parts):
        last = k == len(parts) - 1
        if isinstance(cur, list):
            try:
                idx = int(part)
                cur[idx]
            except (ValueError, IndexError):
                raise ConfigError(f"bad list index {part!r}", ".".join(parts[: k + 1])) from None
            if last:
                cur[idx] = value
            else:
                cur = cur[idx]
        elif isinstance(cur, dict):
            if last:
                cur[part] = value
            else:
                cur = cur.setdefault(part, {})
        else:
            raise ConfigError("cannot descend into a scalar", ".".join(parts[: k + 1]))


# -- echo -----------------------------------------------------------------------


def _cx(z):
    return [float(z.real), float(z.imag)]


def _point_dict(p):
    return {"a": p.a, "omegas": [_cx(w) for w in p.omegas]}


def config_to_dict(cfg: RunConfig) -> dict:
    s = cfg.spec
    out = {
        "spec": {
            "n_states": s.n_states,
            "diag_energies": [{"e0": l.e0, "e1": l.e1, "gamma0": l.gamma0} for l in s.diag_energies],
            "channels": [{"w": [_cx(x) for x in ch.w], "label": ch.label} for ch in s.channels],
            "conventions": {"width_sign": s.conventions.width_sign},
        }
    }
    if cfg.point is not None:
        out["point"] = _point_dict(cfg.point)
    if cfg.path is not None:
        pd = cfg.path
        if pd.points:
            out["path"] = {"points": [_point_dict(p) for p in pd.points], "closed": pd.closed}
        else:
            out["path"] = {"start": _point_dict(pd.start), "stop": _point_dict(pd.stop),
                           "num": pd.num, "closed": pd.closed}
    if cfg.loop is not None:
        lp = cfg.loop
        out["loop"] = {"unknowns": list(lp.unknowns),
                       "center": None if lp.center is None else list(lp.center),
                       "radius": lp.radius, "steps": lp.steps, "turns": lp.turns}
    if cfg.search is not None:
        sd = cfg.search
        out["search"] = {"unknowns": list(sd.unknowns),
                         "seed": None if sd.seed is None else list(sd.seed),
                         "method": sd.method,
                         "pair": None if sd.pair is None else list(sd.pair),
                         "max_iter": sd.max_iter}
    for name in ("thresholds", "outputs", "execution"):
        obj = getattr(cfg, name)
        out[name] = {f.name: getattr(obj, f.name) for f in fields(obj)}
    return out


def dump_config(cfg: RunConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2, sort_keys=False)
