"""JSON run configuration for the command-line tool."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .modal_analysis import ImpedanceParams, PhysicalParams, Variant
from .param_search import Objective, SearchSpec
from .spectral_ddm import SourceSpec


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SourceConfig:
    kind: str = "decay"
    exponent: float = 2.0


@dataclass(frozen=True)
class SearchConfig:
    re_beta_I: tuple[float, float] = (-0.1, 0.0)
    im_beta_I: tuple[float, float] = (0.0, 0.0)
    re_beta_C: tuple[float, float] = (0.0, 0.2)
    im_beta_C: tuple[float, float] = (0.0, 0.0)
    resolution: int = 21
    n_range: tuple[int, int] = (1, 200)
    objective: str = "max"
    refine_rounds: int = 3


@dataclass(frozen=True)
class RunConfig:
    omega: float = math.pi / 4
    mu: float = 1.0
    sigma: float = 1.0
    R: float = 2.0
    beta_I: tuple[float, float] = (0.0, 0.0)
    beta_C: tuple[float, float] = (0.0, 0.0)
    tc_variant: str = "derived"
    n_max: int = 50
    tol: float = 1e-6
    max_iter: int = 1000
    source: SourceConfig = field(default_factory=SourceConfig)
    seed: int | None = None
    output_dir: str = "out"
    ray: tuple[float, float, float] = (1.0, 0.0, 1.0)
    compare_ddm: bool = False
    search: SearchConfig = field(default_factory=SearchConfig)

    # derived views -------------------------------------------------------
    @property
    def phys(self) -> PhysicalParams:
        return PhysicalParams(self.omega, self.mu, self.sigma, self.R)

    @property
    def imp(self) -> ImpedanceParams:
        return ImpedanceParams(complex(*self.beta_I), complex(*self.beta_C), self.tc_variant)

    @property
    def source_spec(self) -> SourceSpec:
        if self.source.kind == "zero":
            return SourceSpec.zero(self.n_max)
        return SourceSpec.decay(self.n_max, self.source.exponent)

    @property
    def search_spec(self) -> SearchSpec:
        s = self.search
        return SearchSpec(s.re_beta_I, s.im_beta_I, s.re_beta_C, s.im_beta_C,
                          s.resolution, s.n_range, s.objective, s.refine_rounds,
                          self.tc_variant)

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("beta_I", "beta_C", "ray"):
            d[key] = list(d[key])
        for key in ("re_beta_I", "im_beta_I", "re_beta_C", "im_beta_C", "n_range"):
            d["search"][key] = list(d["search"][key])
        return d

    def replace(self, **changes) -> "RunConfig":
        d = self.to_dict()
        d.update(changes)
        return from_dict(d)


def _number(name, v, *, integer=False) -> float | int:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{name} must be a number, got {v!r}")
    if integer:
        if isinstance(v, float) and not v.is_integer():
            raise ConfigError(f"{name} must be an integer, got {v!r}")
        return int(v)
    if not math.isfinite(v):
        raise ConfigError(f"{name} must be finite")
    return float(v)


def _pair(name, v, length=2, integer=False) -> tuple:
    if not isinstance(v, (list, tuple)) or len(v) != length:
        raise ConfigError(f"{name} must be a list of {length} numbers, got {v!r}")
    return tuple(_number(f"{name}[{i}]", x, integer=integer) for i, x in enumerate(v))


def _reject_unknown(section: str, data: dict, cls):
    if not isinstance(data, dict):
        raise ConfigError(f"{section or 'config'} must be an object")
    known = {f.name for f in fields(cls)}
    extra = sorted(set(data) - known)
    if extra:
        raise ConfigError(f"unknown keys in {section or 'config'}: {', '.join(extra)}")


def from_dict(data: dict) -> RunConfig:
    _reject_unknown("", data, RunConfig)
    default = RunConfig()
    kw = {}
    for name in ("omega", "mu", "sigma", "R", "tol"):
        if name in data:
            kw[name] = _number(name, data[name])
    for name in ("n_max", "max_iter"):
        if name in data:
            kw[name] = _number(name, data[name], integer=True)
    for name in ("beta_I", "beta_C"):
        if name in data:
            kw[name] = _pair(name, data[name])
    if "ray" in data:
        kw["ray"] = _pair("ray", data["ray"], 3)
    if "tc_variant" in data:
        try:
            kw["tc_variant"] = Variant(data["tc_variant"]).value
        except ValueError:
            raise ConfigError(f"tc_variant must be one of {[v.value for v in Variant]}") from None
    if "seed" in data and data["seed"] is not None:
        kw["seed"] = _number("seed", data["seed"], integer=True)
    if "output_dir" in data:
        if not isinstance(data["output_dir"], str):
            raise ConfigError("output_dir must be a string")
        kw["output_dir"] = data["output_dir"]
    if "compare_ddm" in data:
        if not isinstance(data["compare_ddm"], bool):
            raise ConfigError("compare_ddm must be true or false")
        kw["compare_ddm"] = data["compare_ddm"]
    if "source" in data:
        src = data["source"]
        _reject_unknown("source", src, SourceConfig)
        kind = src.get("kind", "decay")
        if kind not in ("zero", "decay"):
            raise ConfigError("source.kind must be 'zero' or 'decay'")
        kw["source"] = SourceConfig(kind, _number("source.exponent", src.get("exponent", 2.0)))
    if "search" in data:
        kw["search"] = _search(data["search"])

    cfg = RunConfig(**{**asdict(default), **kw,
                       "source": kw.get("source", default.source),
                       "search": kw.get("search", default.search)})
    _validate(cfg)
    return cfg


def _search(data) -> SearchConfig:
    _reject_unknown("search", data, SearchConfig)
    kw = {}
    for name in ("re_beta_I", "im_beta_I", "re_beta_C", "im_beta_C"):
        if name in data:
            kw[name] = _pair(f"search.{name}", data[name])
    if "n_range" in data:
        kw["n_range"] = _pair("search.n_range", data["n_range"], integer=True)
    for name in ("resolution", "refine_rounds"):
        if name in data:
            kw[name] = _number(f"search.{name}", data[name], integer=True)
    if "objective" in data:
        try:
            kw["objective"] = Objective(data["objective"]).value
        except ValueError:
            raise ConfigError("search.objective must be 'max' or 'mean'") from None
    return SearchConfig(**kw)


def _validate(cfg: RunConfig):
    try:
        cfg.phys
        cfg.search_spec
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if cfg.n_max < 1:
        raise ConfigError("n_max must be >= 1")
    if cfg.tol <= 0:
        raise ConfigError("tol must be positive")
    if cfg.max_iter < 1:
        raise ConfigError("max_iter must be >= 1")
    if not any(cfg.ray):
        raise ConfigError("ray direction must be nonzero")


def load(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc}") from None
    return from_dict(data)


def dumps(cfg: RunConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n"
