"""Model configuration files.

A config is a YAML mapping with blocks ``coeff``, ``noise`` and ``root`` and an
optional ``run`` block of defaults that command-line flags override::

    coeff:
      shared: {family: normal, mean: 0.5, variance: 0.4}
      left:   {family: normal, mean: 0.0, variance: 0.3}
      right:  {family: normal, mean: -0.2, variance: 0.4}
    noise:
      shared: {family: exponential, rate: 1}
      left:   {family: exponential, rate: 2}
      right:  {family: exponential, rate: 3}
    root: {family: constant, value: 1.0}
    run: {seed: 2024, gens: 13, reps: 4000, samples: 1000000, workers: 1}

Families and their parameters: ``normal`` (mean, variance), ``exponential``
(rate), ``constant`` (value). The normal's second parameter is a variance.
Numbers are parsed from their source text with ``float``, so decimal
literals round-trip exactly.
"""
from __future__ import annotations

from pathlib import Path

import yaml

from .model import Constant, Exponential, ModelSpec, Normal, PairSpec

FAMILIES = {
    "normal": (Normal, ("mean", "variance")),
    "exponential": (Exponential, ("rate",)),
    "constant": (Constant, ("value",)),
}
RUN_KEYS = {"seed": int, "gens": int, "reps": int, "samples": int, "workers": int,
            "target_bias": float}


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None,
                 source: str = "<config>"):
        self.line, self.column, self.source = line, column, source
        where = f"{source}:{line}:{column}: " if line is not None else f"{source}: "
        super().__init__(where + message)


class _Parser:
    def __init__(self, source: str):
        self.source = source

    def fail(self, node, message):
        mark = getattr(node, "start_mark", None)
        if mark is None:
            raise ConfigError(message, source=self.source)
        raise ConfigError(message, mark.line + 1, mark.column + 1, self.source)

    def mapping(self, node, what, required=(), optional=()):
        if not isinstance(node, yaml.MappingNode):
            self.fail(node, f"{what} must be a mapping")
        out = {}
        for k, v in node.value:
            if not isinstance(k, yaml.ScalarNode):
                self.fail(k, f"{what}: keys must be plain names")
            if k.value in out:
                self.fail(k, f"{what}: duplicate key {k.value!r}")
            if k.value not in required and k.value not in optional:
                allowed = ", ".join((*required, *optional))
                self.fail(k, f"{what}: unknown key {k.value!r} (expected one of {allowed})")
            out[k.value] = v
        for key in required:
            if key not in out:
                self.fail(node, f"{what}: missing key {key!r}")
        return out

    def number(self, node, what, kind=float):
        if not isinstance(node, yaml.ScalarNode) or node.tag not in (
                "tag:yaml.org,2002:int", "tag:yaml.org,2002:float", "tag:yaml.org,2002:str"):
            self.fail(node, f"{what} must be a number")
        text = node.value.strip()
        try:
            if kind is int:
                return int(text)
            return float(text)
        except ValueError:
            self.fail(node, f"{what}: cannot parse {text!r} as {kind.__name__}")

    def component(self, node, what):
        fields = self.mapping(node, what, required=("family",),
                              optional=("mean", "variance", "rate", "value"))
        fam_node = fields.pop("family")
        family = fam_node.value if isinstance(fam_node, yaml.ScalarNode) else None
        if family not in FAMILIES:
            self.fail(fam_node, f"{what}: unknown family {family!r} "
                                f"(expected {', '.join(FAMILIES)})")
        cls, params = FAMILIES[family]
        for key, v in fields.items():
            if key not in params:
                self.fail(v, f"{what}: {family} takes {', '.join(params)}, not {key!r}")
        missing = [p for p in params if p not in fields]
        if missing:
            self.fail(node, f"{what}: {family} needs {', '.join(missing)}")
        values = [self.number(fields[p], f"{what}.{p}") for p in params]
        try:
            return cls(*values)
        except ValueError as exc:
            self.fail(node, f"{what}: {exc}")

    def pair(self, node, what):
        f = self.mapping(node, what, required=("shared", "left", "right"))
        return PairSpec(self.component(f["shared"], f"{what}.shared"),
                        self.component(f["left"], f"{what}.left"),
                        self.component(f["right"], f"{what}.right"))

    def document(self, node):
        if node is None:
            raise ConfigError("empty config", source=self.source)
        top = self.mapping(node, "config", required=("coeff", "noise", "root"), optional=("run",))
        spec = ModelSpec(self.pair(top["coeff"], "coeff"), self.pair(top["noise"], "noise"),
                         self.component(top["root"], "root"))
        run = {}
        if "run" in top:
            for key, v in self.mapping(top["run"], "run", optional=tuple(RUN_KEYS)).items():
                run[key] = self.number(v, f"run.{key}", RUN_KEYS[key])
        return spec, run


def parse_config(text: str, source: str = "<config>") -> tuple[ModelSpec, dict]:
    """Parse config text into a model and the ``run`` defaults."""
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        msg = exc.problem or str(exc)
        if mark is None:
            raise ConfigError(msg, source=source) from None
        raise ConfigError(msg, mark.line + 1, mark.column + 1, source) from None
    except yaml.YAMLError as exc:
        raise ConfigError(str(exc), source=source) from None
    return _Parser(source).document(node)


def load_config(path) -> tuple[ModelSpec, dict]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", source=str(path)) from None
    return parse_config(text, str(path))


def _component_yaml(c) -> str:
    if isinstance(c, Normal):
        return f"{{family: normal, mean: {c.mean!r}, variance: {c.variance!r}}}"
    if isinstance(c, Exponential):
        return f"{{family: exponential, rate: {c.rate!r}}}"
    return f"{{family: constant, value: {float(c.value)!r}}}"


def dump_config(spec: ModelSpec, run: dict | None = None) -> str:
    lines = []
    for name, pair in (("coeff", spec.coeff), ("noise", spec.noise)):
        lines.append(f"{name}:")
        for key, comp in zip(("shared", "left", "right"), pair.components()):
            lines.append(f"  {key}: {_component_yaml(comp)}")
    lines.append(f"root: {_component_yaml(spec.root)}")
    if run:
        lines.append("run: {" + ", ".join(f"{k}: {v!r}" for k, v in run.items()) + "}")
    return "\n".join(lines) + "\n"
