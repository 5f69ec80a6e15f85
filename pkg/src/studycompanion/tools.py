"""Built-in study tools behind a bounded registry.

Four tools ship: the safe calculator, a curated knowledge lookup, a
unit converter, and a times-table drill. Every output is clipped to
the registry's length bound, and dispatch only ever calls registered
handlers; there is no dynamic loading and no way to reach the shell,
the filesystem, or the network from here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable

from .calculator import eval_expression

DEFAULT_OUTPUT_LIMIT = 2000

_TRUNCATION_MARK = " ...[truncated]"


class ToolError(ValueError):
    pass


@dataclass(frozen=True)
class ToolSpec:
    name: str
    description: str
    parameters: dict[str, str]
    handler: Callable[..., str]
    optional: tuple[str, ...] = ()


@dataclass
class ToolRegistry:
    output_limit: int = DEFAULT_OUTPUT_LIMIT
    _tools: dict[str, ToolSpec] = field(default_factory=dict)

    def register(self, spec: ToolSpec) -> None:
        if spec.name in self._tools:
            raise ToolError(f"tool {spec.name!r} is already registered")
        self._tools[spec.name] = spec

    def names(self) -> list[str]:
        return sorted(self._tools)

    def describe(self) -> list[dict[str, Any]]:
        return [
            {
                "name": spec.name,
                "description": spec.description,
                "parameters": dict(spec.parameters),
            }
            for _, spec in sorted(self._tools.items())
        ]

    def dispatch(self, tool_name: str, args: dict[str, Any]) -> str:
        spec = self._tools.get(tool_name)
        if spec is None:
            raise ToolError(f"unknown tool {tool_name!r}; available: {', '.join(self.names())}")
        missing = [
            name for name in spec.parameters if name not in spec.optional and name not in args
        ]
        if missing:
            raise ToolError(f"tool {tool_name!r} missing arguments: {', '.join(missing)}")
        unknown = [name for name in args if name not in spec.parameters]
        if unknown:
            raise ToolError(f"tool {tool_name!r} got unknown arguments: {', '.join(unknown)}")
        output = spec.handler(**args)
        if len(output) > self.output_limit:
            keep = self.output_limit - len(_TRUNCATION_MARK)
            output = output[:keep] + _TRUNCATION_MARK
        return output


def _format_number(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def _calculator_tool(expression: str) -> str:
    return _format_number(eval_expression(str(expression)))


def load_knowledge_base(path: str | Path | None = None) -> list[dict[str, Any]]:
    if path is not None:
        raw = Path(path).read_text(encoding="utf-8")
    else:
        raw = (resources.files("studycompanion") / "data" / "knowledge_base.jsonl").read_text(
            encoding="utf-8"
        )
    entries = []
    for line in raw.splitlines():
        if line.strip():
            entries.append(json.loads(line))
    return entries


def lookup_knowledge(
    query: str, grade: int, entries: list[dict[str, Any]] | None = None
) -> list[dict[str, Any]]:
    """Entries whose keywords match the query and whose band covers the grade.

    The corpus is static and curated; an empty result just means the
    companion has nothing age-appropriate on file for that query.
    """
    if not isinstance(grade, int) or not 1 <= grade <= 12:
        raise ToolError(f"grade must be an integer in 1..12, got {grade!r}")
    if entries is None:
        entries = load_knowledge_base()
    text = query.casefold().strip()
    if not text:
        return []
    matches = []
    for entry in entries:
        low, high = entry["grade_band"]
        if not low <= grade <= high:
            continue
        if any(keyword in text or text in keyword for keyword in entry["keywords"]):
            matches.append(entry)
    return matches


_LENGTH_METERS = {"mm": 0.001, "cm": 0.01, "m": 1.0, "km": 1000.0}
_MASS_GRAMS = {"g": 1.0, "kg": 1000.0}
_TIME_SECONDS = {"s": 1.0, "min": 60.0, "h": 3600.0}


def _convert_units(value: float, from_unit: str, to_unit: str) -> str:
    value = float(value)
    for table in (_LENGTH_METERS, _MASS_GRAMS, _TIME_SECONDS):
        if from_unit in table and to_unit in table:
            converted = value * table[from_unit] / table[to_unit]
            return f"{_format_number(value)} {from_unit} = {_format_number(round(converted, 9))} {to_unit}"
    known = sorted({*(_LENGTH_METERS), *(_MASS_GRAMS), *(_TIME_SECONDS)})
    raise ToolError(
        f"cannot convert {from_unit!r} to {to_unit!r}; units must share a kind"
        f" and be among: {', '.join(known)}"
    )


def _times_table(n: int, upto: int = 10) -> str:
    n = int(n)
    upto = int(upto)
    if not 1 <= n <= 12 or not 1 <= upto <= 12:
        raise ToolError("times table covers 1..12 only")
    return "\n".join(f"{n} x {k} = {n * k}" for k in range(1, upto + 1))


def default_registry(
    knowledge_path: str | Path | None = None,
    output_limit: int = DEFAULT_OUTPUT_LIMIT,
) -> ToolRegistry:
    """The four shipped tools over the bundled (or given) knowledge corpus."""
    entries = load_knowledge_base(knowledge_path)

    def knowledge_tool(query: str, grade: int) -> str:
        found = lookup_knowledge(query, int(grade), entries)
        if not found:
            return "no entries found"
        return "\n\n".join(entry["text"] for entry in found)

    registry = ToolRegistry(output_limit=output_limit)
    registry.register(
        ToolSpec(
            name="calculator",
            description="Evaluate an arithmetic expression (numbers, + - * /, parentheses).",
            parameters={"expression": "the expression to evaluate"},
            handler=_calculator_tool,
        )
    )
    registry.register(
        ToolSpec(
            name="knowledge_lookup",
            description="Look up age-appropriate explanations from the bundled corpus.",
            parameters={"query": "topic or question keywords", "grade": "learner grade, 1-12"},
            handler=knowledge_tool,
        )
    )
    registry.register(
        ToolSpec(
            name="unit_converter",
            description="Convert between metric length, mass, and time units.",
            parameters={
                "value": "the number to convert",
                "from_unit": "source unit (mm, cm, m, km, g, kg, s, min, h)",
                "to_unit": "target unit of the same kind",
            },
            handler=_convert_units,
        )
    )
    registry.register(
        ToolSpec(
            name="times_table",
            description="Print one multiplication table for drilling.",
            parameters={"n": "which table, 1-12", "upto": "last multiplier, 1-12 (default 10)"},
            handler=_times_table,
            optional=("upto",),
        )
    )
    return registry
