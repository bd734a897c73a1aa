"""JSON scenarios and the bundled verification suite.

A scenario file looks like::

    {
      "name": "identity_a2",
      "u": "const(1)", "v": "const(0)", "phi": "z",
      "m": 4, "alpha": 2,
      "precision": "double",
      "grid": {"floor": 1e-6},
      "tail": {"n_max": 16},
      "a_floor": 1e-5,
      "expect": {"bounded": "bounded", "compact": "non-compact"}
    }

``m`` and ``alpha`` are required.  Missing symbols default to the identity
operator (``u = const(1)``, ``v = const(0)``, ``phi = z``); every other key is
optional.  ``expect``
is informational and never influences a computation.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

from .criteria import AnalysisConfig, TailConfig
from .errors import DomainError, ParseError
from .funcspace.grid import GridConfig
from .funcspace.parse import parse_fn
from .operator import OperatorSpec
from .precision import PRECISIONS

__all__ = ["Scenario", "parse_scenario", "load_scenario", "bundled_suite", "SUITE_PACKAGE"]

SUITE_PACKAGE = "oplab.scenarios"

_KEYS = {"name", "u", "v", "phi", "m", "alpha", "precision", "grid", "tail", "a_floor", "expect", "description"}
_DEFAULT_EXPR = {"u": "const(1)", "v": "const(0)", "phi": "z"}
_VERDICTS = {"bounded": {"bounded", "unbounded"}, "compact": {"compact", "non-compact"}}


@dataclass(frozen=True)
class Scenario:
    """A parsed, validated scenario.

    Attributes:
        name: Label used for output file names.
        u: Expression text for ``u``.
        v: Expression text for ``v``.
        phi: Expression text for ``phi``.
        m: Differentiation order.
        alpha: Target weight exponent.
        precision: ``"double"`` or ``"extended"``.
        grid: Overrides for :class:`~oplab.funcspace.grid.GridConfig`.
        tail: Overrides for :class:`~oplab.criteria.TailConfig`.
        a_floor: Optional override of the test-function grid floor.
        expect: Expected verdicts, used by tests.
        description: Free text.
    """

    name: str
    u: str
    v: str
    phi: str
    m: int
    alpha: float
    precision: str = "double"
    grid: dict = field(default_factory=dict)
    tail: dict = field(default_factory=dict)
    a_floor: float | None = None
    expect: dict = field(default_factory=dict)
    description: str = ""

    def operator(self) -> OperatorSpec:
        return OperatorSpec(parse_fn(self.u), parse_fn(self.v), parse_fn(self.phi), self.m, self.alpha, self.name)

    def config(
        self, precision: str | None = None, grid_depth: int | None = None, tail_depth: int | None = None
    ) -> AnalysisConfig:
        """Analysis configuration with command-line overrides applied last.

        Args:
            precision: Overrides the scenario's precision.
            grid_depth: Sets the grid floor to ``10^{-grid_depth}``.
            tail_depth: Sets the deepest tail index ``n_max``.
        """
        prec = precision or self.precision
        base = AnalysisConfig.for_precision(prec)
        grid = replace(base.grid, **self.grid)
        tail = replace(base.tail, **self.tail)
        if grid_depth is not None:
            grid = replace(grid, floor=10.0 ** (-int(grid_depth)))
        if tail_depth is not None:
            tail = replace(tail, n_max=int(tail_depth))
        extra = {} if self.a_floor is None else {"a_floor": float(self.a_floor)}
        return replace(base, grid=grid, tail=tail, **extra)

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "u": self.u,
            "v": self.v,
            "phi": self.phi,
            "m": self.m,
            "alpha": self.alpha,
            "precision": self.precision,
        }
        for key in ("grid", "tail", "expect"):
            if getattr(self, key):
                d[key] = dict(getattr(self, key))
        if self.a_floor is not None:
            d["a_floor"] = self.a_floor
        if self.description:
            d["description"] = self.description
        return d


def _line_of(text: str, key: str) -> int | None:
    m = re.search(r'"' + re.escape(key) + r'"\s*:', text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _field_error(text: str, source: str, key: str, msg: str) -> ParseError:
    line = _line_of(text, key)
    where = f"{source}, line {line}" if line else source
    return ParseError(f"{where}: field {key!r}: {msg}")


def _check_overrides(text, source, key, value, cls) -> dict:
    if not isinstance(value, dict):
        raise _field_error(text, source, key, "must be an object")
    allowed = {f.name for f in fields(cls)}
    unknown = sorted(set(value) - allowed)
    if unknown:
        raise _field_error(text, source, key, f"unknown keys {unknown}; allowed: {sorted(allowed)}")
    try:
        cls(**value)
    except (TypeError, ValueError) as exc:
        raise _field_error(text, source, key, str(exc)) from exc
    return dict(value)


def parse_scenario(text: str, source: str = "<scenario>", default_name: str = "scenario") -> Scenario:
    """Validate scenario JSON and return a :class:`Scenario`.

    Args:
        text: File contents.
        source: Name used in error messages.
        default_name: Name when the file has no ``"name"`` key.

    Raises:
        ParseError: the JSON is malformed or a field is missing, unknown or
            unparsable (atoms outside the disk count as unparsable).  Messages carry the source,
            the line and the field name.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}, line {exc.lineno} column {exc.colno}: invalid JSON: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ParseError(f"{source}: a scenario must be a JSON object")
    unknown = sorted(set(raw) - _KEYS)
    if unknown:
        raise _field_error(text, source, unknown[0], f"unknown field; allowed fields: {sorted(_KEYS)}")
    for key in ("m", "alpha"):
        if key not in raw:
            raise ParseError(f"{source}: missing required field {key!r}")

    exprs = {}
    for key, default in _DEFAULT_EXPR.items():
        val = raw.get(key, default)
        if not isinstance(val, str):
            raise _field_error(text, source, key, "must be an expression string")
        try:
            parse_fn(val)
        except (ParseError, DomainError) as exc:
            raise _field_error(text, source, key, str(exc)) from exc
        exprs[key] = val

    m = raw["m"]
    if isinstance(m, bool) or not isinstance(m, int) or m < 1:
        raise _field_error(text, source, "m", f"must be a positive integer, got {m!r}")
    alpha = raw["alpha"]
    if isinstance(alpha, bool) or not isinstance(alpha, (int, float)) or not alpha > 0:
        raise _field_error(text, source, "alpha", f"must be a positive number, got {alpha!r}")
    precision = raw.get("precision", "double")
    if precision not in PRECISIONS:
        raise _field_error(text, source, "precision", f"must be one of {PRECISIONS}, got {precision!r}")
    name = raw.get("name", default_name)
    if not isinstance(name, str) or not re.fullmatch(r"[A-Za-z0-9_.-]+", name):
        raise _field_error(text, source, "name", "must be a non-empty string of letters, digits, '_', '.', '-'")
    grid = _check_overrides(text, source, "grid", raw.get("grid", {}), GridConfig)
    tail = _check_overrides(text, source, "tail", raw.get("tail", {}), TailConfig)
    a_floor = raw.get("a_floor")
    if a_floor is not None and not (isinstance(a_floor, (int, float)) and 0 < a_floor < 1):
        raise _field_error(text, source, "a_floor", f"must lie in (0, 1), got {a_floor!r}")
    expect = raw.get("expect", {})
    if not isinstance(expect, dict) or any(k not in _VERDICTS or v not in _VERDICTS[k] for k, v in expect.items()):
        raise _field_error(text, source, "expect", f"allowed: {{key: values}} = {_VERDICTS}")
    scenario = Scenario(
        name=name,
        m=m,
        alpha=float(alpha),
        precision=precision,
        grid=grid,
        tail=tail,
        a_floor=None if a_floor is None else float(a_floor),
        expect=dict(expect),
        description=str(raw.get("description", "")),
        **exprs,
    )
    try:
        scenario.operator()
    except (DomainError, ValueError) as exc:
        raise ParseError(f"{source}: invalid operator: {exc}") from exc
    return scenario


def load_scenario(path: str | Path) -> Scenario:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read scenario {str(p)!r}: {exc.strerror}") from exc
    return parse_scenario(text, source=str(p), default_name=p.stem)


def bundled_suite() -> list[Scenario]:
    """The scenarios shipped with the package, ordered by file name."""
    root = resources.files(SUITE_PACKAGE)
    out = []
    for entry in sorted(root.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".json"):
            out.append(parse_scenario(entry.read_text(encoding="utf-8"), source=entry.name, default_name=entry.name[:-5]))
    return out
