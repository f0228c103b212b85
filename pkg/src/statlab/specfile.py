"""Structure-spec files: JSON documents describing a statistical structure.

Schema::

    {
      "dimension": 4,
      "domain": [[-1, 1], [-1, 1], [-1, 1], [-1, 1]],   # optional for fixtures
      "grid": 3,                                        # int or per-axis list
      "fixture": {"name": "constant_distinct", "params": {"c": 1}},
      "alpha": 2.0                                      # optional
    }

or, instead of ``fixture``::

      "explicit": {"g": {"1,1": "1/x2^2", ...}, "A": {"1,2,3": "x1 + x4", ...}}

Index keys are 1-based, comma separated and order-insensitive.  A spec may
also be given inline as ``name:key=value,...`` (e.g. ``constant_distinct:n=4,c=1``).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import exprlang as el
from .chart import Chart, ChartError, StatStructure
from .gallery import FIXTURES, FixtureSpec, InvalidSpec, alpha_transform, build

__all__ = ["SpecError", "StructureSpecFile", "load_spec", "parse_spec_text", "parse_shorthand", "resolve"]


class SpecError(ValueError):
    """Malformed spec; the message carries the source location."""


@dataclass(frozen=True)
class StructureSpecFile:
    dimension: int
    domain: tuple[tuple[float, float], ...] | None = None
    grid: int | tuple[int, ...] | None = None
    fixture: dict[str, Any] | None = None
    explicit: dict[str, dict[str, str]] | None = None
    alpha: float | None = None
    source: str = "<spec>"
    text: str = field(default="", repr=False, compare=False)

    def build(self, grid_override: int | None = None) -> StatStructure:
        return _build(self, grid_override)


def _line_col(text: str, pos: int) -> tuple[int, int]:
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, col


def _where(spec: StructureSpecFile, needle: str | None) -> str:
    if needle and spec.text:
        pos = spec.text.find(needle)
        if pos >= 0:
            line, col = _line_col(spec.text, pos)
            return f"{spec.source}:{line}:{col}"
    return spec.source


def parse_spec_text(text: str, source: str = "<spec>") -> StructureSpecFile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{source}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise SpecError(f"{source}:1:1: top level must be an object")

    def need(cond: bool, msg: str, key: str | None = None):
        if not cond:
            loc = source
            if key is not None:
                pos = text.find(f'"{key}"')
                if pos >= 0:
                    loc = "%s:%d:%d" % ((source,) + _line_col(text, pos))
            raise SpecError(f"{loc}: {msg}")

    unknown = set(doc) - {"dimension", "domain", "grid", "fixture", "explicit", "alpha"}
    need(not unknown, f"unknown keys: {', '.join(sorted(unknown))}", next(iter(sorted(unknown)), None))
    need("dimension" in doc, "missing 'dimension'")
    n = doc["dimension"]
    need(isinstance(n, int) and not isinstance(n, bool) and n >= 2, "dimension must be an integer >= 2", "dimension")
    need(("fixture" in doc) != ("explicit" in doc), "give exactly one of 'fixture' or 'explicit'")

    domain = doc.get("domain")
    if domain is not None:
        ok = (
            isinstance(domain, list)
            and len(domain) == n
            and all(isinstance(b, list) and len(b) == 2 and all(_is_num(x) for x in b) for b in domain)
        )
        need(ok, f"domain must be a list of {n} [lo, hi] pairs", "domain")
        domain = tuple((float(a), float(b)) for a, b in domain)
    grid = doc.get("grid")
    if grid is not None:
        ok = (isinstance(grid, int) and not isinstance(grid, bool)) or (
            isinstance(grid, list) and len(grid) == n and all(isinstance(x, int) for x in grid)
        )
        need(ok, "grid must be an integer or a per-axis list of integers", "grid")
        grid = grid if isinstance(grid, int) else tuple(grid)
    alpha = doc.get("alpha")
    need(alpha is None or _is_num(alpha), "alpha must be a number", "alpha")

    fixture = explicit = None
    if "fixture" in doc:
        fx = doc["fixture"]
        need(isinstance(fx, dict) and isinstance(fx.get("name"), str), "fixture needs a 'name'", "fixture")
        need(fx["name"] in FIXTURES, f"unknown fixture {fx['name']!r}", "name")
        params = fx.get("params", {})
        need(isinstance(params, dict), "fixture params must be an object", "params")
        fixture = {"name": fx["name"], "params": dict(params)}
    else:
        ex = doc["explicit"]
        need(isinstance(ex, dict) and set(ex) <= {"g", "A"}, "explicit must have keys 'g' and/or 'A'", "explicit")
        explicit = {}
        for part, rank in (("g", 2), ("A", 3)):
            comp = ex.get(part, {})
            need(isinstance(comp, dict), f"explicit.{part} must be an object", part)
            for key, val in comp.items():
                need(isinstance(val, (str, int, float)) and not isinstance(val, bool),
                     f"{part}[{key}] must be an expression string", key)
            explicit[part] = {k: str(v) if not isinstance(v, str) else v for k, v in comp.items()}
    return StructureSpecFile(n, domain, grid, fixture, explicit,
                             None if alpha is None else float(alpha), source, text)


def _is_num(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


_SHORTHAND = re.compile(r"^([a-z_]+)(?::(.*))?$")


def parse_shorthand(arg: str) -> StructureSpecFile:
    """``name:key=value,...``; ``n`` sets the dimension, ``alpha`` the deformation."""
    m = _SHORTHAND.match(arg)
    if not m or m.group(1) not in FIXTURES:
        raise SpecError(f"{arg}: not a spec file or fixture shorthand")
    name, rest = m.group(1), m.group(2) or ""
    params: dict[str, Any] = {}
    for item in filter(None, rest.split(",")):
        if "=" not in item:
            raise SpecError(f"{arg}: expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        try:
            params[k.strip()] = int(v) if re.fullmatch(r"[+-]?\d+", v.strip()) else float(v)
        except ValueError:
            raise SpecError(f"{arg}: value of {k!r} is not a number") from None
    n = int(params.pop("n", 2 if name == "hyperbolic_plane" else 3))
    alpha = params.pop("alpha", None)
    grid = params.pop("grid", None)
    return StructureSpecFile(n, None, grid, {"name": name, "params": params},
                             None, None if alpha is None else float(alpha), arg, "")


def load_spec(arg: str | Path) -> StructureSpecFile:
    path = Path(arg)
    if path.is_file():
        return parse_spec_text(path.read_text(encoding="utf-8"), str(path))
    return parse_shorthand(str(arg))


def _canon_key(spec: StructureSpecFile, part: str, key: str, rank: int) -> tuple[int, ...]:
    where = _where(spec, f'"{key}"')
    try:
        idx = tuple(int(t) for t in key.split(","))
    except ValueError:
        raise SpecError(f"{where}: bad index key {key!r}") from None
    if len(idx) != rank:
        raise SpecError(f"{where}: {part} keys need {rank} indices, got {key!r}")
    if any(not 1 <= i <= spec.dimension for i in idx):
        raise SpecError(f"{where}: index out of range 1..{spec.dimension} in {key!r}")
    return tuple(sorted(i - 1 for i in idx))


def _build(spec: StructureSpecFile, grid_override: int | None = None) -> StatStructure:
    n = spec.dimension
    grid = grid_override if grid_override is not None else spec.grid
    try:
        if spec.fixture is not None:
            params = dict(spec.fixture["params"])
            if grid is not None:
                params["grid"] = grid
            if spec.domain is not None:
                params["box"] = spec.domain
            s = build(FixtureSpec(spec.fixture["name"], n, params))
        else:
            if spec.domain is None:
                loc = _where(spec, '"explicit"')
                raise SpecError(f"{loc}: explicit structures need a 'domain'")
            grid = 3 if grid is None else grid
            chart = Chart(n, spec.domain, (grid,) * n if isinstance(grid, int) else tuple(grid))
            comps: dict[str, dict[tuple[int, ...], el.Expr]] = {}
            for part, rank in (("g", 2), ("A", 3)):
                out: dict[tuple[int, ...], el.Expr] = {}
                for key, src in spec.explicit.get(part, {}).items():
                    k = _canon_key(spec, part, key, rank)
                    if k in out:
                        loc = _where(spec, '"%s"' % key)
                        raise SpecError(f"{loc}: {part} component {key!r} duplicates an earlier key")
                    try:
                        out[k] = el.parse(src, n)
                    except el.ExprError as exc:
                        base = _where(spec, json.dumps(src))
                        if base != spec.source and exc.offset is not None:
                            # point at the offending character inside the string literal
                            file, line, col = base.rsplit(":", 2)
                            base = f"{file}:{line}:{int(col) + 1 + exc.offset}"
                        raise SpecError(f"{base}: {part}[{key}]: {exc}") from None
                comps[part] = out
            s = StatStructure(chart, comps["g"], comps["A"], name=Path(spec.source).stem)
    except (InvalidSpec, ChartError) as exc:
        raise SpecError(f"{spec.source}: {exc}") from None
    if spec.alpha is not None:
        s = alpha_transform(s, spec.alpha)
    return s


def resolve(arg: str | Path, grid_override: int | None = None) -> StatStructure:
    return load_spec(arg).build(grid_override)
