"""Run configuration parsed from ``key = value`` text.

Blank lines and ``#`` comments are ignored, list values are comma separated
and unknown keys are rejected.  :meth:`RunConfig.echo` writes every field so
that parsing the echo reproduces the configuration exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .evolution import EvolutionConfig, default_dt
from .io import format_value
from .spectral import Grid3

SCENARIOS = ("groundstate", "conservation", "soliton", "illposed", "pointwise",
             "threshold", "norms", "run")


class ConfigError(ValueError):
    pass


def _floats(*v):
    return field(default=tuple(float(x) for x in v), metadata={"item": float})


def _ints(*v):
    return field(default=tuple(int(x) for x in v), metadata={"item": int})


@dataclass(frozen=True)
class RunConfig:
    scenario: str = "run"
    out_dir: str = "out"
    seed: int = 0

    # grid of the evolution
    n_x: int = 64
    n_y1: int = 64
    n_y2: int = 64
    L_x: float = 8.0
    L_y1: float = 8.0
    L_y2: float = 8.0

    # time stepping and variant; dt <= 0 selects default_dt(grid)
    variant: str = "exact"
    epsilon: float = 0.0
    eta: float = 0.0
    mollifier_kind: str = "sharp_cutoff"
    pad: float = 1.5
    dt: float = 1e-3
    T: float = 1.0
    diag_every: int = 10
    blowup_threshold: float = 1e6
    h1_threshold: float = 1e6
    s_values: tuple = _floats(1.0)

    # initial data: gaussian | powerlaw | groundstate | zero | snapshot
    initial: str = "gaussian"
    initial_path: str = ""
    mass_fraction: float = 0.3
    amplitude: float = 0.0
    width: float = 1.5
    smoothness: float = 0.8

    # ground state: loaded from groundstate_dir when set, else solved on gs_n^3, box gs_L
    groundstate_dir: str = ""
    gs_n: int = 96
    gs_L: float = 16.0
    gs_tol: float = 1e-10
    gn_trials: int = 500

    # scenario parameters
    order_check: bool = False
    c_values: tuple = _floats(1.0)
    n_values: tuple = _ints(1, 2, 3, 4, 5, 6)
    t_eval: float = 1.0
    evolve_n_values: tuple = _ints()
    t_max: float = 0.0  # pointwise ladder start; <= 0 selects 0.1 / max dispersion frequency
    t_levels: int = 12
    min_steps: int = 4
    n_witness: int = 256
    deviation_tol: float = 1e-3
    eps_ladder: tuple = _floats(0.25, 0.125, 0.0625, 0.03125)
    mass_fractions: tuple = _floats(0.5, 0.9, 1.3)
    t_local: float = 1.0
    xst_epsilon: float = 0.01
    n_quad: int = 8
    trajectory_dir: str = ""
    save_fields: bool = False

    # exit criteria
    mass_tol: float = 1e-8
    energy_tol: float = 1e-6
    order_factor: float = 8.0
    pohozaev_tol: float = 1e-6
    equation_tol: float = 1e-8
    shooting_tol: float = 1e-3
    gn_margin: float = 1e-3
    soliton_tol: float = 1e-3
    speed_tol: float = 0.02
    residual_tol: float = 1e-5
    separation_band: tuple = _floats(0.9, 1.1)
    monotone_fraction: float = 0.95
    bounded_factor: float = 3.0

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}")

    # -- text form -------------------------------------------------------------

    @classmethod
    def from_text(cls, text: str, **overrides) -> "RunConfig":
        spec = {f.name: f for f in fields(cls)}
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key = key.strip()
            if not sep:
                raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
            if key not in spec:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            if key in values:
                raise ConfigError(f"line {lineno}: duplicate key {key!r}")
            values[key] = _coerce(spec[key], value.strip(), lineno)
        values.update(overrides)
        return cls(**values)

    @classmethod
    def load(cls, path, **overrides) -> "RunConfig":
        return cls.from_text(Path(path).read_text(), **overrides)

    def echo(self) -> str:
        return "".join(f"{f.name} = {format_value(getattr(self, f.name))}\n" for f in fields(self))

    def with_(self, **kw) -> "RunConfig":
        return replace(self, **kw)

    # -- derived objects -------------------------------------------------------

    def grid(self) -> Grid3:
        return Grid3(self.n_x, self.n_y1, self.n_y2, self.L_x, self.L_y1, self.L_y2)

    def gs_grid(self) -> Grid3:
        return Grid3.cube(self.gs_n, self.gs_L)

    def resolved_dt(self, grid: Grid3 | None = None) -> float:
        return self.dt if self.dt > 0 else default_dt(grid or self.grid())

    def evolution(self, grid: Grid3 | None = None, **kw) -> EvolutionConfig:
        base = dict(variant=self.variant, dt=self.resolved_dt(grid), T=self.T, pad=self.pad,
                    diag_every=self.diag_every, blowup_threshold=self.blowup_threshold,
                    h1_threshold=self.h1_threshold, stored_s_values=self.s_values,
                    epsilon=self.epsilon, eta=self.eta, mollifier_kind=self.mollifier_kind)
        base.update(kw)
        return EvolutionConfig(**base)


def _coerce(f, text: str, lineno: int):
    default = f.default
    try:
        if isinstance(default, bool):
            low = text.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return low in ("true", "1", "yes")
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple):
            item = f.metadata.get("item", float)
            return tuple(item(p.strip()) for p in text.split(",") if p.strip())
        return text
    except ValueError:
        raise ConfigError(f"line {lineno}: bad value {text!r} for {f.name}") from None
