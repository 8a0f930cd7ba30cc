"""Run configuration documents (YAML or JSON) and their validation.

Complex numbers are written either as plain reals or as ``[re, im]`` pairs.
Unknown keys are rejected; errors carry the dotted key path and, when the
document came from text, the line it sits on.
"""
from __future__ import annotations

from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from . import fock
from .integrator import IntegratorConfig
from .model import BHParams, HoppingMatrix, build_ring_hopping


class ConfigError(ValueError):
    """Schema violation; ``key`` is the dotted path of the offending entry."""

    def __init__(self, key: str, message: str, line: int | None = None):
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{key or '<root>'}: {message}{where}")
        self.key = key
        self.line = line


ComplexLike = Union[float, tuple[float, float]]


def to_complex(values) -> np.ndarray:
    out = []
    for v in values:
        if isinstance(v, (tuple, list)):
            out.append(complex(v[0], v[1]))
        else:
            out.append(complex(v))
    return np.asarray(out, dtype=complex)


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ModelSpec(_Strict):
    M: int = Field(ge=1)
    U: float
    T: float = 1.0
    periodic: bool = True
    hopping: Optional[list[list[float]]] = None

    def params(self) -> BHParams:
        if self.hopping is not None:
            hop = HoppingMatrix(np.asarray(self.hopping, dtype=float))
            if hop.M != self.M:
                raise ConfigError("model.hopping", f"matrix is {hop.M}x{hop.M}, M={self.M}")
        else:
            hop = build_ring_hopping(self.M, self.T, self.periodic)
        return BHParams(U=self.U, hopping=hop)


class PlaneWavePreset(_Strict):
    name: Literal["plane_wave"]
    k: int
    A: Optional[ComplexLike] = None


class LocalizedPreset(_Strict):
    name: Literal["localized"]
    site: int = Field(default=1, ge=1)
    amplitude: ComplexLike = 1.0


class InitialSpec(_Strict):
    z: Optional[list[ComplexLike]] = None
    xi: Optional[list[ComplexLike]] = None
    N: Optional[int] = Field(default=None, ge=0)
    f: Optional[list[list[ComplexLike]]] = None
    occupation: Optional[list[int]] = None
    preset: Optional[Union[PlaneWavePreset, LocalizedPreset]] = Field(default=None, discriminator="name")
    n_max: Optional[int] = Field(default=None, ge=1)

    def kinds(self) -> list[str]:
        return [k for k in ("z", "xi", "f", "occupation", "preset") if getattr(self, k) is not None]


class IntegratorSpec(_Strict):
    method: Literal["rk4", "midpoint"] = "rk4"
    dt: float = Field(default=1e-3, gt=0)
    t_end: float = Field(default=10.0, ge=0)
    record_every: int = Field(default=1, ge=1)

    def build(self) -> IntegratorConfig:
        return IntegratorConfig(self.method, self.dt, self.t_end, self.record_every)


class OutputSpec(_Strict):
    dir: str = "bhvar_out"
    csv: str = "trajectory.csv"
    summary: str = "summary.json"
    snapshots: Optional[str] = None

    def path(self, name: str) -> Path:
        return Path(self.dir) / name


_ALLOWED = {
    "dnls": {"z", "preset"},
    "sum": {"xi", "preset"},
    "gutzwiller": {"z", "f", "occupation", "preset"},
    "exact": {"xi", "occupation", "preset"},
}


class RunConfig(_Strict):
    model: ModelSpec
    scheme: Literal["gutzwiller", "dnls", "sum", "exact"]
    initial: InitialSpec
    integrator: IntegratorSpec = IntegratorSpec()
    outputs: OutputSpec = OutputSpec()

    @property
    def params(self) -> BHParams:
        return self.model.params()


class CatSpec(_Strict):
    M: int = Field(ge=1)
    N: int = Field(ge=0)
    epsilon: float = Field(default=0.0, ge=0)
    seed: int = 0
    k: Optional[list[int]] = None


class CatConfig(_Strict):
    cat: CatSpec
    output: str = "cat_report.json"


class WeightsSpec(_Strict):
    z: list[ComplexLike]
    zeta: Optional[list[ComplexLike]] = None
    S_max: Optional[int] = Field(default=None, ge=0)


class WeightsConfig(_Strict):
    weights: WeightsSpec
    output: str = "weights.json"


class DualSpec(_Strict):
    z: Optional[list[ComplexLike]] = None
    xi: Optional[list[ComplexLike]] = None
    N: Optional[int] = Field(default=None, ge=0)

    @field_validator("xi")
    @classmethod
    def _nonempty(cls, v):
        if v is not None and len(v) == 0:
            raise ValueError("xi must not be empty")
        return v


class DualConfig(_Strict):
    dual: DualSpec
    output: str = "dual.json"


SCHEMAS = {"evolve": RunConfig, "cat": CatConfig, "weights": WeightsConfig, "dual": DualConfig}


# ---------------------------------------------------------------------------
# parsing with line diagnostics


def _line_of(node, loc) -> int | None:
    """Walk a composed YAML node along a pydantic error location."""
    line = node.start_mark.line + 1 if node is not None else None
    for part in loc:
        if node is None:
            break
        if isinstance(node, yaml.MappingNode) and isinstance(part, str):
            match = [(k, v) for k, v in node.value if getattr(k, "value", None) == part]
            if not match:
                break
            key, node = match[0]
            line = key.start_mark.line + 1
        elif isinstance(node, yaml.SequenceNode) and isinstance(part, int):
            if part >= len(node.value):
                break
            node = node.value[part]
            line = node.start_mark.line + 1
        else:
            # discriminator tags and union branch names are not in the document
            continue
    return line


def _dotted(loc) -> str:
    parts = []
    for p in loc:
        if isinstance(p, int):
            parts.append(f"[{p}]")
        elif p in ("tuple[float, float]", "float", "plane_wave", "localized"):
            continue
        else:
            parts.append(("." if parts else "") + str(p))
    return "".join(parts)


def parse_config(text: str, kind: str = "evolve"):
    """Parse and validate a config document; returns the schema instance for ``kind``."""
    if kind not in SCHEMAS:
        raise ValueError(f"unknown config kind {kind!r}")
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as err:
        mark = getattr(err, "problem_mark", None)
        raise ConfigError("", f"malformed document: {getattr(err, 'problem', err)}",
                          mark.line + 1 if mark else None) from None
    if not isinstance(data, dict):
        raise ConfigError("", "document must be a mapping", 1)
    try:
        cfg = SCHEMAS[kind].model_validate(data)
    except ValidationError as err:
        first = err.errors()[0]
        loc = first["loc"]
        raise ConfigError(_dotted(loc), first["msg"], _line_of(node, loc)) from None
    if kind == "evolve":
        _check_run(cfg, node)
    return cfg


def load_config(path, kind: str = "evolve"):
    return parse_config(Path(path).read_text(), kind)


def _check_run(cfg: RunConfig, node) -> None:
    init = cfg.initial
    line = _line_of(node, ("initial",))
    kinds = init.kinds()
    if len(kinds) != 1:
        raise ConfigError("initial", f"exactly one of z, xi, f, occupation, preset is required, got {kinds or 'none'}", line)
    kind = kinds[0]
    if kind not in _ALLOWED[cfg.scheme]:
        raise ConfigError(f"initial.{kind}", f"not usable with scheme '{cfg.scheme}'", _line_of(node, ("initial", kind)))
    M = cfg.model.M
    for name in ("z", "xi", "occupation"):
        vec = getattr(init, name)
        if vec is not None and len(vec) != M:
            raise ConfigError(f"initial.{name}", f"length {len(vec)} differs from M={M}", _line_of(node, ("initial", name)))
    if init.f is not None and len(init.f) != M:
        raise ConfigError("initial.f", f"table has {len(init.f)} rows, M={M}", _line_of(node, ("initial", "f")))
    needs_N = cfg.scheme in ("sum", "exact") and kind != "occupation"
    if needs_N and init.N is None:
        raise ConfigError("initial.N", f"scheme '{cfg.scheme}' needs the boson number N", line)
    if cfg.scheme == "sum" and init.N == 0:
        raise ConfigError("initial.N", "scheme 'sum' needs N >= 1", _line_of(node, ("initial", "N")))
    if cfg.scheme == "exact":
        N = sum(init.occupation) if kind == "occupation" else init.N
        fock.check_capacity(M, N)
    try:
        cfg.params
    except (ValueError, ConfigError) as err:
        if isinstance(err, ConfigError):
            raise
        raise ConfigError("model", str(err), _line_of(node, ("model",))) from None
