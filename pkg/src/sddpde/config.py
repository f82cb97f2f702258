"""INI run configuration: parsing, exhaustive validation, echo and problem assembly.

Physical parameters (delay.r, solver.d, solver.dt, solver.t_end and the
birth parameter of the chosen preset) have no defaults.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import delay_term
from .errors import ConfigError, DomainError, InvariantViolation, ModeError
from .history import HistorySegment
from .measure import default_measure
from .problem import Problem, random_history_fn, smooth_history_fn
from .solver import SolverConfig, history_steps
from .spatial import DomainConfig, SpatialOperator, constant_kernel, gaussian_kernel

REQUIRED = object()

MEASURE_PRESETS = ("default", "static")
BIRTH_PRESETS = ("nicholson", "linear-sat", "linear", "constant", "zero")
KERNEL_PRESETS = ("constant", "gaussian-bump")
INITIAL_KINDS = ("smooth", "random")
PROBE_NAMES = (
    "ignoring",
    "lipschitz",
    "fc_continuity",
    "fd_continuity",
    "remark1",
    "gronwall",
    "uniqueness",
    "dissipativity",
    "convergence",
)


@dataclass(frozen=True)
class DomainSection:
    length: float = math.pi
    n_modes: int = 16
    n_grid: int = 64


@dataclass(frozen=True)
class DelaySection:
    r: float = REQUIRED
    n_steps: Optional[int] = None


@dataclass(frozen=True)
class MeasureSection:
    preset: str = "default"
    n_atoms: int = 16
    eta_ign: float = 0.2
    c_decay: float = 0.5
    lag_slope: float = 1.0
    ac_mass: float = 0.5
    beta: float = 0.5
    ac_shape: str = "uniform"
    ac_rate: float = 1.0
    ac_points: int = 2001
    gamma0: float = 0.2
    gamma1: float = 0.2
    cantor_depth: int = 12
    M_Vg: Optional[float] = None


@dataclass(frozen=True)
class BirthSection:
    preset: str = "nicholson"
    p: Optional[float] = None
    value: Optional[float] = None
    mode: str = "bounded"


@dataclass(frozen=True)
class KernelSection:
    preset: str = "gaussian-bump"
    M_f: float = 1.0
    width: float = 0.5


@dataclass(frozen=True)
class SolverSection:
    dt: float = REQUIRED
    t_end: float = REQUIRED
    d: float = REQUIRED
    fp_tol: float = 1e-10
    fp_max_iter: int = 50
    damping_mode: str = "absorbed"
    deltas: tuple = (0.25,)
    dt_list: tuple = (0.04, 0.02, 0.01)


@dataclass(frozen=True)
class InitialSection:
    kind: str = "smooth"
    amplitude: float = 2.0
    frequency: float = 2.0


@dataclass(frozen=True)
class ProbesSection:
    names: tuple = ("all",)
    slack: float = 0.1
    n_probes: int = 32
    n_pairs: int = 1000
    gronwall_T: float = 2.0
    gronwall_distance: float = 1e-3
    dissipativity_T: float = 10.0
    dissipativity_amplitude: float = 20.0
    converge_T: float = 2.0


@dataclass(frozen=True)
class RunSection:
    seed: int = 0
    out: str = "out"


SECTIONS = {
    "run": RunSection,
    "domain": DomainSection,
    "delay": DelaySection,
    "measure": MeasureSection,
    "birth": BirthSection,
    "kernel": KernelSection,
    "solver": SolverSection,
    "initial": InitialSection,
    "probes": ProbesSection,
}


def _parse_value(raw: str, default, name: str):
    raw = raw.strip()
    if isinstance(default, tuple):
        items = [s.strip() for s in raw.split(",") if s.strip()]
        if default and isinstance(default[0], str):
            return tuple(items)
        return tuple(float(s) for s in items)
    if isinstance(default, bool):
        return raw.lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, str) and default is not REQUIRED:
        return raw
    if raw.lower() in ("none", ""):
        return None
    # optional ints are written without a decimal point
    if name == "n_steps":
        return int(raw)
    return float(raw)


def _format_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, tuple):
        return ", ".join(_format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class RunConfig:
    run: RunSection = field(default_factory=RunSection)
    domain: DomainSection = field(default_factory=DomainSection)
    delay: DelaySection = field(default_factory=DelaySection)
    measure: MeasureSection = field(default_factory=MeasureSection)
    birth: BirthSection = field(default_factory=BirthSection)
    kernel: KernelSection = field(default_factory=KernelSection)
    solver: SolverSection = field(default_factory=SolverSection)
    initial: InitialSection = field(default_factory=InitialSection)
    probes: ProbesSection = field(default_factory=ProbesSection)

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"unreadable config: {exc}") from None
        problems = []
        sections = {}
        for name in parser.sections():
            if name not in SECTIONS:
                problems.append(f"unknown section [{name}]")
        for name, section_cls in SECTIONS.items():
            given = parser[name] if parser.has_section(name) else {}
            known = {f.name: f for f in fields(section_cls)}
            values = {}
            for key in given:
                if key not in known:
                    problems.append(f"unknown key {name}.{key}")
                    continue
                try:
                    values[key] = _parse_value(given[key], known[key].default, key)
                except ValueError:
                    problems.append(f"{name}.{key}: cannot parse '{given[key]}'")
            for key, f in known.items():
                if f.default is REQUIRED and key not in values:
                    problems.append(f"{name}.{key} is required")
            sections[name] = values
        if problems:
            raise ConfigError(problems)
        cfg = cls(**{name: SECTIONS[name](**vals) for name, vals in sections.items()})
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_text(text)

    def to_ini(self) -> str:
        lines = []
        for name in SECTIONS:
            lines.append(f"[{name}]")
            section = getattr(self, name)
            for f in fields(section):
                lines.append(f"{f.name} = {_format_value(getattr(section, f.name))}")
            lines.append("")
        return "\n".join(lines)

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, run=replace(self.run, seed=int(seed)))

    def with_out(self, out: str) -> "RunConfig":
        return replace(self, run=replace(self.run, out=str(out)))

    def validate(self) -> None:
        """Collect every problem before raising."""
        problems = []
        d, s, m, b = self.delay, self.solver, self.measure, self.birth
        if not d.r > 0:
            problems.append(f"delay.r must be positive, got {d.r}")
        if not s.dt > 0:
            problems.append(f"solver.dt must be positive, got {s.dt}")
        elif d.r > 0:
            q = d.r / s.dt
            if abs(q - round(q)) > 1e-9 * max(1.0, q):
                problems.append(f"solver.dt={s.dt} does not divide delay.r={d.r}")
            elif d.n_steps is not None and d.n_steps != int(round(q)) + 1:
                problems.append(
                    f"delay.n_steps={d.n_steps} disagrees with r/dt + 1 = {int(round(q)) + 1}"
                )
        for dt in s.dt_list:
            if d.r > 0 and dt > 0:
                q = d.r / dt
                if abs(q - round(q)) > 1e-9 * max(1.0, q):
                    problems.append(f"solver.dt_list entry {dt} does not divide delay.r={d.r}")
            else:
                problems.append(f"solver.dt_list entries must be positive, got {dt}")
        if any(a <= b_ for a, b_ in zip(s.dt_list, s.dt_list[1:])):
            problems.append("solver.dt_list must be strictly decreasing")
        if not s.d >= 0:
            problems.append(f"solver.d must be >= 0, got {s.d}")
        if m.preset not in MEASURE_PRESETS:
            problems.append(f"measure.preset must be one of {MEASURE_PRESETS}, got {m.preset}")
        if m.n_atoms > 0 and not 0 < m.eta_ign < d.r:
            problems.append(f"measure.eta_ign must lie in (0, r), got {m.eta_ign}")
        if b.preset not in BIRTH_PRESETS:
            problems.append(f"birth.preset must be one of {BIRTH_PRESETS}, got {b.preset}")
        if b.preset in ("nicholson", "linear-sat", "linear") and b.p is None:
            problems.append(f"birth.p is required for preset {b.preset}")
        if b.preset == "constant" and b.value is None:
            problems.append("birth.value is required for preset constant")
        if b.mode not in ("bounded", "growth"):
            problems.append(f"birth.mode must be bounded|growth, got {b.mode}")
        if b.preset == "linear" and b.mode == "bounded":
            problems.append("birth.preset linear is unbounded; set birth.mode = growth")
        if self.kernel.preset not in KERNEL_PRESETS:
            problems.append(f"kernel.preset must be one of {KERNEL_PRESETS}, got {self.kernel.preset}")
        if self.initial.kind not in INITIAL_KINDS:
            problems.append(f"initial.kind must be one of {INITIAL_KINDS}, got {self.initial.kind}")
        for name in self.probes.names:
            if name != "all" and name not in PROBE_NAMES:
                problems.append(f"probes.names: unknown probe '{name}'")
        if problems:
            raise ConfigError(problems)
        # constructor-level checks (domain sizes, solver fields, measure ranges)
        for build in (self.build_problem, self.solver_config):
            try:
                build()
            except ConfigError as exc:
                problems.extend(exc.problems)
            except (DomainError, ModeError, InvariantViolation) as exc:
                problems.append(str(exc))
        if problems:
            raise ConfigError(problems)

    @property
    def n_steps(self) -> int:
        return history_steps(self.delay.r, self.solver.dt)

    def build_measure(self):
        m, r = self.measure, self.delay.r
        static = m.preset == "static"
        return default_measure(
            r,
            m.eta_ign,
            n_atoms=m.n_atoms,
            c_decay=m.c_decay,
            lag_slope=m.lag_slope,
            state_jumps=not static,
            ac_mass=m.ac_mass,
            beta=0.0 if static else m.beta,
            ac_shape=m.ac_shape,
            ac_rate=m.ac_rate,
            n_tab=m.ac_points,
            gamma0=m.gamma0,
            gamma1=0.0 if static else m.gamma1,
            cantor_depth=m.cantor_depth,
            max_variation=m.M_Vg,
        )

    def build_birth(self):
        b = self.birth
        if b.preset == "nicholson":
            return delay_term.nicholson(b.p, b.mode)
        if b.preset == "linear-sat":
            return delay_term.linear_saturating(b.p, b.mode)
        if b.preset == "linear":
            return delay_term.linear(b.p)
        if b.preset == "constant":
            return delay_term.constant(b.value, b.mode)
        return delay_term.zero(b.mode)

    def build_problem(self) -> Problem:
        dom = DomainConfig(self.domain.length, self.domain.n_modes, self.domain.n_grid)
        k = self.kernel
        kernel = (
            constant_kernel(dom, k.M_f)
            if k.preset == "constant"
            else gaussian_kernel(dom, k.M_f, k.width)
        )
        return Problem(
            SpatialOperator(dom, self.solver.d), kernel, self.build_birth(), self.build_measure()
        )

    def solver_config(self, t_end: Optional[float] = None, dt: Optional[float] = None) -> SolverConfig:
        s = self.solver
        return SolverConfig(
            dt=s.dt if dt is None else dt,
            t_end=s.t_end if t_end is None else t_end,
            fp_tol=s.fp_tol,
            fp_max_iter=s.fp_max_iter,
            damping_mode=s.damping_mode,
            deltas=tuple(s.deltas),
        )

    def history_fn(self, domain: DomainConfig, amplitude: Optional[float] = None):
        ini = self.initial
        amp = ini.amplitude if amplitude is None else amplitude
        if ini.kind == "random":
            rng = np.random.default_rng([self.run.seed, 0])
            return random_history_fn(rng, domain, self.delay.r, amp)
        return smooth_history_fn(domain, amp, ini.frequency)

    def initial_history(self, domain: DomainConfig, dt: Optional[float] = None,
                        amplitude: Optional[float] = None) -> HistorySegment:
        n = history_steps(self.delay.r, self.solver.dt if dt is None else dt)
        return HistorySegment.from_function(
            self.history_fn(domain, amplitude), self.delay.r, n, domain
        )

    def probe_names(self, selector: Optional[str] = None) -> list:
        names = self.probes.names if selector is None else tuple(
            s.strip() for s in selector.split(",") if s.strip()
        )
        unknown = [n for n in names if n != "all" and n not in PROBE_NAMES]
        if unknown:
            raise ConfigError(
                [f"unknown probe '{n}'" for n in unknown]
                + [f"valid probes: all, {', '.join(PROBE_NAMES)}"]
            )
        if "all" in names:
            return list(PROBE_NAMES)
        return list(names)
