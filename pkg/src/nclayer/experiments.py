"""Throughput sweeps and fairness runs over the dumbbell, plus CSV output.

Every function returns a :class:`Table`; ``emit_csv`` writes it with
``repr`` floats, so equal runs give byte-identical files and reading a file
back gives the same numbers.
"""
from __future__ import annotations

import csv
import enum
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable

from .errors import ConfigError, IoError
from .headers import IP_HEADER_LEN, TCP_HEADER_LEN
from .scenario import FlowSpec, ScenarioConfig
from .simnet import Metrics, run_scenario

DEFAULT_PER_GRID = (0.0, 0.02, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4)

# Fairness runs need a lossy channel for the NC flow to matter at all; on a
# clean link plain TCP needs no redundancy and wins.
FAIRNESS_PER = 0.05
# The second flow joins after the first has left slow start.
FAIRNESS_STAGGER = 5.0

SWEEP_COLUMNS = ("per", "nc_throughput_segs_per_s", "tcp_throughput_segs_per_s")


class Fairness(enum.Enum):
    NC_VS_TCP = "NC_VS_TCP"
    NC_VS_NC = "NC_VS_NC"
    TCP_VS_TCP = "TCP_VS_TCP"

    @classmethod
    def parse(cls, name: str | "Fairness") -> "Fairness":
        if isinstance(name, cls):
            return name
        try:
            return cls[name.upper()]
        except KeyError:
            choices = ", ".join(s.name for s in cls)
            raise ConfigError(f"unknown scenario {name!r}; choose one of {choices}") from None


@dataclass
class Table:
    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [row[i] for row in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        write_csv(self, buf)
        return buf.getvalue()


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(table: Table, stream: IO[str]):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_cell(v) for v in row])


def emit_csv(table: Table, path: str | Path):
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            write_csv(table, f)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _number(text: str):
    try:
        return int(text)
    except ValueError:
        return float(text)


def parse_csv(text: str) -> Table:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None:
        return Table(())
    return Table(tuple(header), [tuple(_number(c) for c in row) for row in reader])


def read_csv(path: str | Path) -> Table:
    try:
        return parse_csv(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc


# -- metrics --------------------------------------------------------------


def bottleneck_capacity(cfg: ScenarioConfig) -> float:
    """Full-size plain TCP segments per second the bottleneck can carry."""
    return cfg.bottleneck_rate / (8 * (cfg.mss + IP_HEADER_LEN + TCP_HEADER_LEN))


def throughput_table(metrics: Metrics) -> Table:
    """One row per 1 s bin with the segments delivered by each flow."""
    columns = ("t_bin_s",) + tuple(
        f"flow{i}_segs_per_s" for i in range(1, len(metrics.flows) + 1)
    )
    bins = math.floor(metrics.duration)
    series = [f.throughput[:bins] for f in metrics.flows]
    rows = [(t,) + tuple(float(s[t]) for s in series) for t in range(bins)]
    return Table(columns, rows)


def summary_table(metrics: Metrics, warmup: float) -> Table:
    columns = (
        "flow", "nc_enabled", "mean_segs_per_s", "delivered_segments", "goodput_bytes_per_s",
        "tcp_retransmissions", "tcp_timeouts", "nc_codewords", "nc_retransmissions",
    )
    rows = [
        (
            i, int(f.nc_enabled), f.mean_throughput(warmup), f.delivered_segments,
            f.goodput, f.tcp_retransmissions, f.tcp_timeouts, f.nc_codewords,
            f.nc_retransmissions,
        )
        for i, f in enumerate(metrics.flows, 1)
    ]
    return Table(columns, rows)


# -- throughput sweep -----------------------------------------------------


def steady_throughput(cfg: ScenarioConfig) -> float:
    """Mean segments/s of the first flow after the warmup."""
    metrics = run_scenario(cfg)
    return metrics.flows[0].mean_throughput(cfg.warmup)


def sweep_configs(cfg: ScenarioConfig, per: float) -> tuple[ScenarioConfig, ScenarioConfig]:
    """The NC and the plain-TCP single-flow scenario for one erasure rate."""
    flow = cfg.flows[0]
    nc = cfg.replace(per=per, flows=(FlowSpec(flow.source, flow.sink, flow.start_time, True),))
    tcp = cfg.replace(per=per, flows=(FlowSpec(flow.source, flow.sink, flow.start_time, False),))
    return nc, tcp


def run_throughput_sweep(
    cfg: ScenarioConfig,
    per_values: Iterable[float] = DEFAULT_PER_GRID,
    workers: int | None = 1,
) -> Table:
    """NC and plain TCP steady-state throughput for each erasure rate.

    Each point is an independent simulation, so ``workers > 1`` runs them in
    a process pool; results are keyed by PER and come out in input order.
    """
    pers = [float(p) for p in per_values]
    for p in pers:
        if not 0.0 <= p < 1.0:
            raise ConfigError(f"PER values must lie in [0, 1), got {p}")
    jobs = [c for p in pers for c in sweep_configs(cfg, p)]
    if workers is not None and workers <= 1:
        results = [steady_throughput(c) for c in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(steady_throughput, jobs))
    rows = [(p, results[2 * i], results[2 * i + 1]) for i, p in enumerate(pers)]
    return Table(SWEEP_COLUMNS, rows)


# -- fairness -------------------------------------------------------------


def fairness_config(cfg: ScenarioConfig, scenario: str | Fairness) -> ScenarioConfig:
    """Two flows A1->S1 and A2->S2; flow 1 starts first.

    In the mixed scenario flow 1 is the plain TCP flow, so the NC flow joins
    a link that TCP already occupies.
    """
    scenario = Fairness.parse(scenario)
    nc1, nc2 = {
        Fairness.NC_VS_TCP: (False, True),
        Fairness.NC_VS_NC: (True, True),
        Fairness.TCP_VS_TCP: (False, False),
    }[scenario]
    flows = (
        FlowSpec("A1", "S1", 0.0, nc1),
        FlowSpec("A2", "S2", FAIRNESS_STAGGER, nc2),
    )
    return cfg.replace(flows=flows)


def run_fairness_metrics(cfg: ScenarioConfig, scenario: str | Fairness) -> Metrics:
    return run_scenario(fairness_config(cfg, scenario))


def run_fairness(cfg: ScenarioConfig, scenario: str | Fairness) -> Table:
    return throughput_table(run_fairness_metrics(cfg, scenario))


def share_ratio(a: float, b: float) -> float:
    """Smaller over larger share; 1.0 is perfectly even."""
    hi = max(a, b)
    return min(a, b) / hi if hi > 0 else 1.0


def post_warmup_means(metrics: Metrics, warmup: float) -> list[float]:
    return [f.mean_throughput(warmup) for f in metrics.flows]


def crossover(table: Table) -> float | None:
    """First PER in the sweep at which NC throughput beats plain TCP."""
    for per, nc, tcp in table.rows:
        if nc > tcp:
            return per
    return None


def flat_within(table: Table, reference_per: float, max_per: float, tolerance: float) -> bool:
    """Whether NC throughput up to ``max_per`` stays within ``tolerance`` of
    its value at ``reference_per`` (relative)."""
    ref = dict((p, nc) for p, nc, _ in table.rows)[reference_per]
    return all(
        abs(nc - ref) <= tolerance * ref for p, nc, _ in table.rows if p <= max_per
    )

