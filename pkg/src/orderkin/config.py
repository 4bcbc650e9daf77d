"""Scenario configuration: a flat ``key = value`` document with dotted nested keys.

Example::

    scenario = relaxation
    rule = calamitic2d
    n_particles = 10000
    seed = 7
    kernel.prefactor_kind = unit
    init.kind = bimodal

Lines starting with ``#`` or ``;`` are comments.  Unknown keys, missing
required keys and invalid values are all collected and reported together.
"""

from __future__ import annotations

import configparser
import dataclasses
import math
from dataclasses import dataclass, field
from typing import Any

from .collisions import RULE_MANIFOLD, RULES
from .errors import ConfigurationError

SCENARIOS = ("relaxation", "alignment", "stability", "invariant_fuzz", "weakform")
COLLISION_SCENARIOS = ("relaxation", "invariant_fuzz", "weakform")
INVARIANT_OBSERVABLES = {"one", "px", "py", "pz", "L", "Lx", "Ly", "Lz", "E", "energy", "volume"}


@dataclass
class PotentialConfig:
    kind: str = "quadratic"
    alpha: float = 1.0
    beta: float = 1.0
    theta_hat: float = 0.4
    theta_hat_mode: str = "fixed"
    transport_factor: float = 1.0


@dataclass
class KernelConfig:
    prefactor_kind: str = "unit"
    majorant: str = "auto"
    exchange_fraction: str = "random"
    table: str = ""


@dataclass
class InitConfig:
    kind: str = "bimodal"
    speed: float = 1.0
    noise: float = 0.3
    spin: float = 0.3
    temperature: float = 1.0
    anisotropy: float = 2.0


@dataclass
class HConfig:
    estimator: str = "auto"
    k: int = 4
    tolerance_sigma: float = 3.0


@dataclass
class WeakformConfig:
    psi: str = "one,px,py,L,E,px2"
    samples: int = 1_000_000


@dataclass
class FuzzConfig:
    events: int = 1_000_000
    per_event_tol: float = 1e-10
    cumulative_tol: float = 1e-8


@dataclass
class ScenarioConfig:
    scenario: str
    seed: int
    manifold: str = ""
    rule: str = ""
    n_particles: int = 1000
    dt: float = 0.01
    t_end: float = 30.0
    checkpoint_every: int = 10
    mass: float = 1.0
    inertia: float = 1.0 / 12.0
    output_path: str = "out.csv"
    potential: PotentialConfig = field(default_factory=PotentialConfig)
    kernel: KernelConfig = field(default_factory=KernelConfig)
    init: InitConfig = field(default_factory=InitConfig)
    h: HConfig = field(default_factory=HConfig)
    weakform: WeakformConfig = field(default_factory=WeakformConfig)
    fuzz: FuzzConfig = field(default_factory=FuzzConfig)

    # -- derived -------------------------------------------------------------
    @property
    def steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def majorant_value(self) -> float | None:
        return None if self.kernel.majorant == "auto" else float(self.kernel.majorant)

    def exchange_fraction_value(self) -> float | None:
        ef = self.kernel.exchange_fraction
        return None if ef == "random" else float(ef)

    def table_values(self) -> tuple:
        t = self.kernel.table.strip()
        return tuple(float(v) for v in t.split(",")) if t else ()

    def psi_list(self) -> list[str]:
        return [p.strip() for p in self.weakform.psi.split(",") if p.strip()]

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


REQUIRED = ("scenario", "seed")


def _flat_fields(cls, prefix=""):
    """Yield (dotted key, type) for every leaf field."""
    for f in dataclasses.fields(cls):
        t = f.type if not isinstance(f.type, str) else eval(f.type, globals())
        if dataclasses.is_dataclass(t):
            yield from _flat_fields(t, prefix + f.name + ".")
        else:
            yield prefix + f.name, t


def _leaf_type(annotation) -> type:
    text = annotation if isinstance(annotation, str) else getattr(annotation, "__name__", str(annotation))
    for name, typ in (("int", int), ("float", float), ("str", str), ("bool", bool)):
        if text == name:
            return typ
    return str


SCHEMA = {key: _leaf_type(t) for key, t in _flat_fields(ScenarioConfig)}


def _convert(key: str, raw: str, errors: list) -> Any:
    typ = SCHEMA[key]
    raw = raw.strip()
    if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in "\"'":
        raw = raw[1:-1]
    try:
        if typ is int:
            value = int(raw, 0) if raw.lower().startswith(("0x", "0o", "0b")) else int(raw)
        elif typ is float:
            value = float(raw)
            if not math.isfinite(value):
                raise ValueError("not finite")
        else:
            value = raw
    except ValueError:
        errors.append(f"{key}: cannot read {raw!r} as {typ.__name__}")
        return None
    return value


def _set(cfg_dict: dict, key: str, value) -> None:
    parts = key.split(".")
    node = cfg_dict
    for p in parts[:-1]:
        node = node.setdefault(p, {})
    node[parts[-1]] = value


def _build(data: dict) -> ScenarioConfig:
    nested = {
        "potential": PotentialConfig,
        "kernel": KernelConfig,
        "init": InitConfig,
        "h": HConfig,
        "weakform": WeakformConfig,
        "fuzz": FuzzConfig,
    }
    kwargs = {}
    for k, v in data.items():
        kwargs[k] = nested[k](**v) if k in nested else v
    return ScenarioConfig(**kwargs)


def validate(cfg: ScenarioConfig) -> list[str]:
    """Return every invariant violation (empty when valid)."""
    errs = []
    if cfg.scenario not in SCENARIOS:
        errs.append(f"scenario: must be one of {SCENARIOS}, got {cfg.scenario!r}")
    if not 0 <= cfg.seed < 2 ** 64:
        errs.append("seed: must be a 64-bit unsigned integer")
    if not cfg.dt > 0:
        errs.append("dt: must be > 0")
    if not cfg.t_end >= 0:
        errs.append("t_end: must be >= 0")
    if cfg.checkpoint_every < 1:
        errs.append("checkpoint_every: must be >= 1")
    if not cfg.mass > 0:
        errs.append("mass: must be > 0")
    if not cfg.inertia > 0:
        errs.append("inertia: must be > 0")
    manifolds = ("interval", "s1", "rp1", "s2", "none")
    if cfg.manifold and cfg.manifold not in manifolds:
        errs.append(f"manifold: must be one of {manifolds}, got {cfg.manifold!r}")
    if cfg.scenario in COLLISION_SCENARIOS:
        if cfg.rule not in RULES:
            errs.append(f"rule: must be one of {sorted(RULES)} for scenario {cfg.scenario}, got {cfg.rule!r}")
        elif cfg.manifold and RULE_MANIFOLD[cfg.rule] != cfg.manifold:
            errs.append(
                f"rule: {cfg.rule!r} is incompatible with manifold {cfg.manifold!r} "
                f"(requires {RULE_MANIFOLD[cfg.rule]!r})"
            )
        if cfg.n_particles < 2:
            errs.append("n_particles: collision scenarios need at least 2 particles")
        if cfg.kernel.prefactor_kind not in ("unit", "bubble_mean", "custom-table"):
            errs.append("kernel.prefactor_kind: must be unit, bubble_mean or custom-table")
        if cfg.kernel.majorant != "auto":
            try:
                if not float(cfg.kernel.majorant) > 0:
                    errs.append("kernel.majorant: must be 'auto' or a positive number")
            except ValueError:
                errs.append("kernel.majorant: must be 'auto' or a positive number")
        if cfg.kernel.exchange_fraction != "random":
            try:
                if not 0 <= float(cfg.kernel.exchange_fraction) <= 1:
                    errs.append("kernel.exchange_fraction: must be 'random' or in [0, 1]")
            except ValueError:
                errs.append("kernel.exchange_fraction: must be 'random' or in [0, 1]")
        if cfg.kernel.table:
            try:
                if any(v < 0 for v in cfg.table_values()):
                    errs.append("kernel.table: values must be nonnegative")
            except ValueError:
                errs.append("kernel.table: must be a comma-separated list of numbers")
        if cfg.init.kind not in ("bimodal", "maxwellian", "anisotropic"):
            errs.append("init.kind: must be bimodal, maxwellian or anisotropic")
        if not cfg.init.temperature > 0:
            errs.append("init.temperature: must be > 0")
    if cfg.scenario in ("alignment", "stability"):
        if cfg.manifold not in ("", "s1"):
            errs.append("manifold: alignment dynamics are defined on s1")
        if cfg.potential.kind not in ("quadratic", "cosine", "custom-table"):
            errs.append("potential.kind: must be quadratic, cosine or custom-table")
        if cfg.potential.theta_hat_mode not in ("fixed", "ensemble"):
            errs.append("potential.theta_hat_mode: must be fixed or ensemble")
        if cfg.scenario == "alignment" and cfg.n_particles < 1:
            errs.append("n_particles: must be >= 1")
    if cfg.scenario == "relaxation":
        if cfg.h.estimator not in ("auto", "histogram", "knn"):
            errs.append("h.estimator: must be auto, histogram or knn")
        if cfg.n_particles < 1000:
            errs.append("n_particles: H estimation needs at least 1000 particles")
    if cfg.scenario == "weakform":
        if cfg.weakform.samples < 2:
            errs.append("weakform.samples: must be >= 2")
        if not cfg.psi_list():
            errs.append("weakform.psi: at least one observable required")
    if cfg.scenario == "invariant_fuzz" and cfg.fuzz.events < 1:
        errs.append("fuzz.events: must be >= 1")
    return errs


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate; raises ConfigurationError listing every violation."""
    parser = configparser.ConfigParser(
        interpolation=None, comment_prefixes=("#", ";"), inline_comment_prefixes=None,
        delimiters=("=",), strict=True,
    )
    parser.optionxform = str
    errors: list[str] = []
    try:
        parser.read_string("[scenario]\n" + text)
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed config: {exc}".replace("[line", "[line")) from None
    section = parser["scenario"]
    data: dict = {}
    for key, raw in section.items():
        if key not in SCHEMA:
            errors.append(f"{key}: unknown key")
            continue
        value = _convert(key, raw, errors)
        if value is not None:
            _set(data, key, value)
    for key in REQUIRED:
        if key not in section:
            errors.append(f"{key}: missing required key")
    if errors:
        raise ConfigurationError("; ".join(errors))
    cfg = _build(data)
    if not cfg.manifold and cfg.rule in RULE_MANIFOLD:
        cfg.manifold = RULE_MANIFOLD[cfg.rule]
    if not cfg.manifold and cfg.scenario in ("alignment", "stability"):
        cfg.manifold = "s1"
    errors = validate(cfg)
    if errors:
        raise ConfigurationError("; ".join(errors))
    return cfg


def _format(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def to_flat(cfg: ScenarioConfig) -> list[tuple[str, str]]:
    out = []

    def walk(obj, prefix):
        for f in dataclasses.fields(obj):
            v = getattr(obj, f.name)
            if dataclasses.is_dataclass(v):
                walk(v, prefix + f.name + ".")
            else:
                out.append((prefix + f.name, _format(v)))

    walk(cfg, "")
    return out


def serialize_config(cfg: ScenarioConfig) -> str:
    return "".join(f"{k} = {v}\n" for k, v in to_flat(cfg))


def load_config(path: str) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
