"""Experiment configuration files.

The format is INI-style text with five sections::

    [state]       family, F0
    [link]        L0_km, L_att_km, eta_h, p_swap
    [operations]  p_gate, eta_meas
    [memory]      kappa_per_s, tau_s
    [sweep]       M_list, N_buffer_min, N_buffer_max, trials, seed, bins

Every key is optional and falls back to the defaults below; unknown keys and
keys placed in the wrong section are rejected with their line number.
"""

from __future__ import annotations

import configparser
import dataclasses
import re
from dataclasses import dataclass
from pathlib import Path

from qrepeater.ops import GenerationParams, OperationNoise, UnsupportedConfiguration
from qrepeater.protocol import MAX_MEMORIES, SimConfig
from qrepeater.states import StateFamily, quality_factor


class ConfigError(ValueError):
    pass


SECTIONS = {
    "state": ("family", "F0"),
    "link": ("L0_km", "L_att_km", "eta_h", "p_swap"),
    "operations": ("p_gate", "eta_meas"),
    "memory": ("kappa_per_s", "tau_s"),
    "sweep": ("M_list", "N_buffer_min", "N_buffer_max", "trials", "seed", "bins"),
}
_SECTION_OF = {key: sec for sec, keys in SECTIONS.items() for key in keys}


@dataclass(frozen=True)
class ExperimentConfig:
    family: StateFamily = StateFamily.WERNER
    F0: float = 1.0
    L0_km: float = 20.0
    L_att_km: float = 20.0
    eta_h: float = 0.1
    p_swap: float = 0.5
    p_gate: float = 1.0
    eta_meas: float = 1.0
    kappa_per_s: float = 1.0
    tau_s: float = 1e-3
    M_list: tuple[int, ...] = (1, 2, 3, 4, 5)
    N_buffer_min: int = 1
    N_buffer_max: int = 30
    trials: int = 100_000
    seed: int = 0
    bins: int = 200

    def __post_init__(self):
        object.__setattr__(self, "family", StateFamily(self.family))
        object.__setattr__(self, "M_list", tuple(int(m) for m in self.M_list))
        if not self.M_list:
            raise ConfigError("M_list must not be empty")
        if any(not 1 <= m <= MAX_MEMORIES for m in self.M_list):
            raise ConfigError(f"every M must lie in [1, {MAX_MEMORIES}]")
        if not 1 <= self.N_buffer_min <= self.N_buffer_max:
            raise ConfigError("need 1 <= N_buffer_min <= N_buffer_max")
        if self.bins < 1:
            raise ConfigError("bins must be >= 1")
        try:
            self.sim_config(self.M_list[0], self.N_buffer_min)
        except UnsupportedConfiguration as exc:
            raise ConfigError(f"unsupported configuration: {exc}") from None
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def N_range(self) -> range:
        return range(self.N_buffer_min, self.N_buffer_max + 1)

    def sim_config(self, M: int, N_buffer: int | None = None) -> SimConfig:
        return SimConfig(
            family=self.family,
            gen=GenerationParams(self.L0_km, self.L_att_km, self.eta_h, self.F0, self.p_swap),
            noise=OperationNoise(self.p_gate, self.eta_meas),
            quality=quality_factor(self.kappa_per_s, self.tau_s),
            M=M,
            N_buffer=N_buffer if N_buffer is not None else self.N_buffer_min,
            trials=self.trials,
            seed=self.seed,
        )

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["family"] = self.family.value
        d["M_list"] = list(self.M_list)
        return d

    def to_text(self) -> str:
        lines = []
        for section, keys in SECTIONS.items():
            lines.append(f"[{section}]")
            for key in keys:
                lines.append(f"{key} = {_format(getattr(self, key))}")
            lines.append("")
        return "\n".join(lines)


def _format(value) -> str:
    if isinstance(value, StateFamily):
        return value.value
    if isinstance(value, tuple):
        return ", ".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}


def _convert(key: str, raw: str):
    kind = _FIELD_TYPES[key]
    if key == "family":
        return StateFamily(raw.strip().lower())
    if key == "M_list":
        return tuple(int(tok) for tok in re.split(r"[,\s]+", raw.strip()) if tok)
    if kind == "int":
        return int(raw)
    return float(raw)


def _line_of(text: str, section: str | None, key: str) -> int:
    current = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        m = re.match(r"\[([^\]]+)\]", stripped)
        if m:
            current = m.group(1).strip()
            continue
        m = re.match(r"([^=:\s]+)\s*[=:]", stripped)
        if m and m.group(1) == key and (section is None or current == section):
            return lineno
    return 0


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        lineno = getattr(exc, "lineno", None)
        if lineno is None and getattr(exc, "errors", None):
            lineno = exc.errors[0][0]
        msg = str(exc).splitlines()[0]
        raise ConfigError(f"{source}:{lineno or 0}: {msg}") from None

    values = {}
    for section in parser.sections():
        if section not in SECTIONS:
            line = next((i for i, ln in enumerate(text.splitlines(), 1)
                         if ln.strip() == f"[{section}]"), 0)
            raise ConfigError(f"{source}:{line}: unknown section [{section}]")
        for key, raw in parser.items(section):
            line = _line_of(text, section, key)
            if key not in _SECTION_OF:
                raise ConfigError(f"{source}:{line}: unknown key {key!r}")
            if _SECTION_OF[key] != section:
                raise ConfigError(
                    f"{source}:{line}: key {key!r} belongs in section [{_SECTION_OF[key]}]"
                )
            try:
                values[key] = _convert(key, raw)
            except ValueError:
                raise ConfigError(f"{source}:{line}: bad value for {key}: {raw!r}") from None
    try:
        return ExperimentConfig(**values)
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(), source=str(path))
