"""Flat ``section.key = value`` run configuration.

Every key has a type and (usually) a default. :func:`echo_config` writes the
fully materialized configuration in canonical order, so an echoed file
parses back to an identical echo.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

from .basis import BasisSet, build_regular_basis, build_stochastic_basis, stochastic_sigma
from .model import ChainSpec, ModelSpec, PhysicalParams, PotentialKind, PotentialSpec, TimeWindow
from .sampler import BrownianBridge, Metropolis, SamplerConfig


class ConfigError(ValueError):
    pass


REQUIRED = object()
OPTIONAL = object()  # no default; only echoed when set


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.split(","))


def _ints(text: str) -> tuple:
    return tuple(int(v) for v in text.split(","))


def _words(text: str) -> tuple:
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _fmt(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(_fmt(v) for v in value)
    return str(value)


@dataclass(frozen=True)
class Key:
    parse: Callable[[str], Any]
    default: Any
    choices: tuple = ()


POTENTIALS = {
    "zero": PotentialKind.ZERO,
    "harmonic": PotentialKind.HARMONIC,
    "sech_well": PotentialKind.SECH_WELL,
    "anharmonic": PotentialKind.ANHARMONIC,
    "abs_linear": PotentialKind.ABS_LINEAR,
    "wall_linear": PotentialKind.WALL_LINEAR,
    "coupled_harmonic_2d": PotentialKind.COUPLED_HARMONIC_2D,
}

SCHEMA: dict[str, Key] = {
    "model.geometry": Key(str, "point", ("point", "chain")),
    "model.potential": Key(str, "harmonic", tuple(POTENTIALS)),
    "model.dimension": Key(int, 1),
    "model.omega": Key(float, 1.0),
    "model.v0": Key(float, 1.0),
    "model.force": Key(float, 1.0),
    "model.coupling": Key(float, 1.0),
    "model.n_osc": Key(int, 9),
    "model.omega_coupling": Key(float, 1.0),
    "model.omega_onsite": Key(float, 1.0),
    "model.mass": Key(float, 1.0),
    "model.hbar": Key(float, 1.0),
    "time.t_total": Key(float, REQUIRED),
    "time.n_slices": Key(int, 64),
    "basis.kind": Key(str, "regular", ("regular", "stochastic")),
    "basis.counts": Key(_ints, (32,)),
    "basis.low": Key(_floats, (-5.0,)),
    "basis.high": Key(_floats, (5.0,)),
    "basis.n_nodes": Key(int, 100),
    "basis.sigma_policy": Key(str, OPTIONAL, ("model", "free", "explicit")),
    "basis.sigma_width": Key(str, "sinh", ("sinh", "amplitude")),
    "basis.sigma": Key(float, OPTIONAL),
    "basis.sigma_scale": Key(float, 1.0),
    "basis.t_prime": Key(float, OPTIONAL),
    "basis.seed": Key(int, 1),
    "mc.method": Key(str, "bridge", ("bridge", "metropolis")),
    "mc.n_paths": Key(int, 1000),
    "mc.seed": Key(int, 20240611),
    "mc.streams": Key(str, "shared", ("shared", "per_entry")),
    "mc.symmetric_fill": Key(_bool, True),
    "mc.n_batches": Key(int, 32),
    "mc.step_size": Key(float, 0.5),
    "mc.n_thermalize": Key(int, 200),
    "mc.n_decorrelate": Key(int, 4),
    "mc.n_chains": Key(int, 16),
    "spectral.solver": Key(str, "lapack", ("lapack", "jacobi")),
    "spectral.floor_scale": Key(float, 1e-3),
    "output.dir": Key(str, "out"),
    "output.formats": Key(_words, ("csv",)),
    "output.beta": Key(_floats, (0.25, 0.5, 1.0, 2.0, 4.0, 8.0)),
    "output.wavefunctions": Key(int, 5),
    "oracle.enabled": Key(_bool, True),
    "oracle.levels": Key(int, 20),
    "oracle.grid_points": Key(int, 2000),
    "oracle.grid_low": Key(_floats, (-10.0,)),
    "oracle.grid_high": Key(_floats, (10.0,)),
}

SECTIONS = {k.split(".")[0] for k in SCHEMA}


@dataclass(frozen=True)
class RunConfig:
    values: dict

    def __getitem__(self, key: str):
        return self.values[key]

    def get(self, key: str, default=None):
        return self.values.get(key, default)

    def replace(self, **updates) -> "RunConfig":
        vals = dict(self.values)
        for k, v in updates.items():
            vals[k.replace("__", ".")] = v
        return RunConfig(vals)

    # -- builders ---------------------------------------------------------
    def model(self) -> ModelSpec:
        v = self.values
        params = PhysicalParams(v["model.mass"], v["model.hbar"])
        time = TimeWindow(v["time.t_total"], v["time.n_slices"])
        if v["model.geometry"] == "chain":
            geom = ChainSpec(v["model.n_osc"], v["model.omega_coupling"], v["model.omega_onsite"])
        else:
            kind = POTENTIALS[v["model.potential"]]
            dim = {PotentialKind.COUPLED_HARMONIC_2D: 2}.get(kind, v["model.dimension"])
            geom = PotentialSpec(kind, dim, omega=v["model.omega"], v0=v["model.v0"], force=v["model.force"],
                                 coupling=v["model.coupling"])
        return ModelSpec(geom, params, time)

    def basis(self, model: ModelSpec) -> tuple[BasisSet, bool]:
        """Returns the basis and whether the sigma rule fell back to the free width."""
        v = self.values
        d = model.dimension
        if v["basis.kind"] == "regular":
            return build_regular_basis(d, _axis(v["basis.counts"], d), _axis(v["basis.low"], d),
                                       _axis(v["basis.high"], d)), False
        policy = v["basis.sigma_policy"]
        fallback = False
        if policy == "explicit":
            sigma = v["basis.sigma"]
        elif policy == "free":
            sigma = (model.params.hbar * v["basis.t_prime"] / model.params.mass) ** 0.5
        else:
            sig, fallback = stochastic_sigma(model, v["basis.t_prime"], v["basis.sigma_width"])
            sigma = sig[0]
        return build_stochastic_basis(d, v["basis.n_nodes"], sigma * v["basis.sigma_scale"], v["basis.seed"]), fallback

    def sampler(self) -> SamplerConfig:
        v = self.values
        if v["mc.method"] == "metropolis":
            method = Metropolis(v["mc.step_size"], v["mc.n_thermalize"], v["mc.n_decorrelate"], v["mc.n_chains"])
        else:
            method = BrownianBridge()
        return SamplerConfig(v["mc.n_paths"], method, v["mc.seed"], v["mc.n_batches"], v["mc.streams"])


def _axis(values: tuple, d: int) -> tuple:
    if len(values) == 1:
        return values * d
    if len(values) != d:
        raise ConfigError(f"expected 1 or {d} comma-separated values, got {len(values)}")
    return values


def parse_config(text: str) -> RunConfig:
    raw: dict[str, tuple[int, str]] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'section.key = value'")
        key, value = (s.strip() for s in body.split("=", 1))
        if "." not in key:
            raise ConfigError(f"line {lineno}: key {key!r} has no section")
        section = key.split(".", 1)[0]
        if section not in SECTIONS:
            raise ConfigError(f"line {lineno}: unknown section {section!r}")
        if key not in SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r} (first set on line {raw[key][0]})")
        raw[key] = (lineno, value)

    values: dict[str, Any] = {}
    for key, spec in SCHEMA.items():
        if key in raw:
            lineno, text_value = raw[key]
            try:
                parsed = spec.parse(text_value)
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: {key}: {exc}") from None
            if spec.choices:
                bad = [p for p in (parsed if isinstance(parsed, tuple) else (parsed,)) if p not in spec.choices]
                if bad:
                    raise ConfigError(f"line {lineno}: {key} must be one of {', '.join(spec.choices)}; got {bad[0]!r}")
            values[key] = parsed
        elif spec.default is REQUIRED:
            raise ConfigError(f"missing required key {key!r}")
        elif spec.default is not OPTIONAL:
            values[key] = spec.default

    if "basis.t_prime" not in values:
        values["basis.t_prime"] = values["time.t_total"]
    if values["basis.kind"] == "stochastic":
        if "basis.sigma_policy" not in values:
            raise ConfigError("basis.kind = stochastic requires key 'basis.sigma_policy'")
        if values["basis.sigma_policy"] == "explicit" and "basis.sigma" not in values:
            raise ConfigError("basis.sigma_policy = explicit requires key 'basis.sigma'")
    for bad in [f for f in values["output.formats"] if f not in ("csv", "binary")]:
        raise ConfigError(f"output.formats: unknown format {bad!r}")

    cfg = RunConfig(values)
    try:
        model = cfg.model()
        cfg.sampler()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if values["basis.kind"] == "regular":
        try:
            cfg.basis(model)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    return cfg


def echo_config(cfg: RunConfig) -> str:
    lines = []
    section = None
    for key in SCHEMA:
        if key not in cfg.values:
            continue
        sec = key.split(".", 1)[0]
        if sec != section:
            if section is not None:
                lines.append("")
            lines.append(f"# {sec}")
            section = sec
        lines.append(f"{key} = {_fmt(cfg.values[key])}")
    return "\n".join(lines) + "\n"
