"""Scenario configuration and its flat ``key = value`` file format.

Example::

    # one NC flow over a lossy bottleneck
    per = 0.2
    code_n = 16
    code_k = 8
    flow1 = A1 S1 0.0 nc
    t_end = 200
    seed = 7

Flows are ``flowN = <source> <sink> <start_time> <nc|tcp>``.
"""
from __future__ import annotations

import configparser
import dataclasses
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from .errors import BadParams, ConfigError, IoError
from .mds import CodeParams

_SECTION = "scenario"


@dataclass(frozen=True)
class FlowSpec:
    source: str = "A1"
    sink: str = "S1"
    start_time: float = 0.0
    nc_enabled: bool = True

    def to_text(self) -> str:
        return f"{self.source} {self.sink} {self.start_time!r} {'nc' if self.nc_enabled else 'tcp'}"


@dataclass(frozen=True)
class ScenarioConfig:
    bottleneck_rate: float = 1e6
    bottleneck_delay: float = 0.02
    access_rate: float = 10e6
    access_delay: float = 0.01
    queue_capacity: int = 50
    per: float = 0.0
    reverse_per: float = 0.0
    code_n: int = 16
    code_k: int = 8
    segment_size: int = 1460
    field_m: int = 8
    spec_threshold: int | None = None
    mss: int = 1460
    flush_delay: float = 0.05
    codeword_window: float = 1.5
    syn_retries: int = 8
    transfer_bytes: int = 0  # 0: endless bulk transfer
    flows: tuple[FlowSpec, ...] = field(default_factory=lambda: (FlowSpec(),))
    t_end: float = 200.0
    warmup: float = 100.0
    seed: int = 1

    def __post_init__(self):
        if not 0.0 <= self.per <= 1.0 or not 0.0 <= self.reverse_per <= 1.0:
            raise ConfigError("erasure probabilities must lie in [0, 1]")
        if self.t_end <= 0 or not 0 <= self.warmup < self.t_end:
            raise ConfigError("need t_end > 0 and 0 <= warmup < t_end")
        if self.transfer_bytes < 0:
            raise ConfigError("transfer_bytes must be non-negative")
        if self.codeword_window < 1 or self.syn_retries < 0:
            raise ConfigError("codeword_window must be >= 1 and syn_retries >= 0")
        if self.queue_capacity < 1:
            raise ConfigError("queue_capacity must be at least 1")
        if min(self.bottleneck_rate, self.access_rate) <= 0:
            raise ConfigError("link rates must be positive")
        if not self.flows:
            raise ConfigError("at least one flow is required")
        for f in self.flows:
            if f.source not in ("A1", "A2") or f.sink not in ("S1", "S2"):
                raise ConfigError(f"flow endpoints must be A1/A2 -> S1/S2, got {f}")
            if f.start_time < 0:
                raise ConfigError("flow start_time must be non-negative")
        try:
            self.code_params()
        except BadParams as exc:
            raise ConfigError(str(exc)) from exc

    def code_params(self) -> CodeParams:
        return CodeParams(self.code_n, self.code_k, self.segment_size, self.field_m)

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def to_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if f.name == "flows":
                for i, flow in enumerate(value, 1):
                    lines.append(f"flow{i} = {flow.to_text()}")
            elif value is not None:
                lines.append(f"{f.name} = {value!r}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        """Stable identifier of the run configuration."""
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(ScenarioConfig)}


def _parse_flow(text: str) -> FlowSpec:
    parts = text.split()
    if len(parts) != 4 or parts[3] not in ("nc", "tcp"):
        raise ConfigError(f"flow must be '<source> <sink> <start> <nc|tcp>', got {text!r}")
    try:
        start = float(parts[2])
    except ValueError:
        raise ConfigError(f"bad flow start time {parts[2]!r}") from None
    return FlowSpec(parts[0], parts[1], start, parts[3] == "nc")


def parse_config(text: str, base: ScenarioConfig | None = None) -> ScenarioConfig:
    parser = configparser.ConfigParser(
        inline_comment_prefixes=("#",), comment_prefixes=("#",), delimiters=("=",),
        interpolation=None,
    )
    try:
        parser.read_string(f"[{_SECTION}]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    changes: dict = {}
    flows = []
    for key, raw in parser[_SECTION].items():
        raw = raw.strip()
        if key.startswith("flow") and key[4:].isdigit():
            flows.append((int(key[4:]), _parse_flow(raw)))
            continue
        if key not in _FIELD_TYPES or key == "flows":
            raise ConfigError(f"unknown configuration key {key!r}")
        kind = _FIELD_TYPES[key]
        try:
            if raw.lower() == "none" and "None" in str(kind):
                changes[key] = None
            elif "int" in str(kind) and "float" not in str(kind):
                changes[key] = int(raw)
            else:
                changes[key] = float(raw)
        except ValueError:
            raise ConfigError(f"bad value for {key}: {raw!r}") from None
    if flows:
        changes["flows"] = tuple(f for _, f in sorted(flows, key=lambda p: p[0]))
    return dataclasses.replace(base or ScenarioConfig(), **changes)


def load_config(path: str | Path) -> ScenarioConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    return parse_config(text)
