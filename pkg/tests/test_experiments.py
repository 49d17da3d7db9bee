import pytest
from hypothesis import given, strategies as st

from nclayer import experiments as ex
from nclayer.errors import ConfigError, IoError
from nclayer.scenario import ScenarioConfig
from nclayer.simnet import Metrics, run_scenario

QUICK = ScenarioConfig(t_end=30.0, warmup=15.0, seed=4)


def test_header_only_for_empty_metrics(tmp_path):
    table = ex.throughput_table(Metrics(0.0, 1, "x", [], {}))
    path = tmp_path / "empty.csv"
    ex.emit_csv(table, path)
    assert path.read_text() == "t_bin_s\n"
    assert ex.read_csv(path) == table


def test_empty_sweep_is_header_only():
    assert ex.run_throughput_sweep(QUICK, []).to_csv() == ",".join(ex.SWEEP_COLUMNS) + "\n"


cells = st.one_of(
    st.integers(-(2**40), 2**40),
    st.floats(allow_nan=False, allow_infinity=False),
)


@given(st.lists(st.tuples(st.integers(0, 10**6), cells, cells), max_size=20))
def test_csv_round_trip(rows):
    table = ex.Table(("t_bin_s", "flow1_segs_per_s", "flow2_segs_per_s"), rows)
    assert ex.parse_csv(table.to_csv()) == table


def test_floats_keep_full_precision():
    table = ex.Table(("a",), [(0.1 + 0.2,)])
    assert table.to_csv() == "a\n0.30000000000000004\n"


def test_unwritable_path(tmp_path):
    with pytest.raises(IoError):
        ex.emit_csv(ex.Table(("a",)), tmp_path / "missing" / "x.csv")
    with pytest.raises(IoError):
        ex.read_csv(tmp_path / "absent.csv")


def test_throughput_table_layout():
    m = run_scenario(QUICK.replace(t_end=5.5, warmup=0.0))
    table = ex.throughput_table(m)
    assert table.columns == ("t_bin_s", "flow1_segs_per_s")
    assert table.column("t_bin_s") == [0, 1, 2, 3, 4]
    assert table.column("flow1_segs_per_s") == [float(x) for x in m.flows[0].throughput]


def test_single_point_sweep_is_single_run():
    table = ex.run_throughput_sweep(QUICK, [0.1])
    nc_cfg, tcp_cfg = ex.sweep_configs(QUICK, 0.1)
    assert table.rows == [(0.1, ex.steady_throughput(nc_cfg), ex.steady_throughput(tcp_cfg))]
    assert nc_cfg.flows[0].nc_enabled and not tcp_cfg.flows[0].nc_enabled


def test_parallel_sweep_matches_serial():
    pers = [0.0, 0.2]
    assert ex.run_throughput_sweep(QUICK, pers, workers=2) == ex.run_throughput_sweep(QUICK, pers)


@pytest.mark.parametrize("per", [-0.1, 1.0, 1.5])
def test_sweep_rejects_bad_per(per):
    with pytest.raises(ConfigError):
        ex.run_throughput_sweep(QUICK, [per])


def test_same_seed_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    ex.emit_csv(ex.run_fairness(QUICK, "NC_VS_NC"), a)
    ex.emit_csv(ex.run_fairness(QUICK, "NC_VS_NC"), b)
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize("scenario,nc", [
    ("NC_VS_TCP", (False, True)),
    ("nc_vs_nc", (True, True)),
    (ex.Fairness.TCP_VS_TCP, (False, False)),
])
def test_fairness_config(scenario, nc):
    cfg = ex.fairness_config(QUICK, scenario)
    assert tuple(f.nc_enabled for f in cfg.flows) == nc
    assert [(f.source, f.sink) for f in cfg.flows] == [("A1", "S1"), ("A2", "S2")]
    assert cfg.flows[0].start_time < cfg.flows[1].start_time


def test_unknown_scenario():
    with pytest.raises(ConfigError):
        ex.Fairness.parse("UDP_VS_TCP")


def test_fairness_table_has_two_series():
    table = ex.run_fairness(QUICK, "TCP_VS_TCP")
    assert table.columns == ("t_bin_s", "flow1_segs_per_s", "flow2_segs_per_s")
    assert len(table.rows) == 30
    # flow 2 is silent before it starts
    assert all(v == 0.0 for v in table.column("flow2_segs_per_s")[: int(ex.FAIRNESS_STAGGER)])


def test_tcp_vs_tcp_shares_fairly():
    cfg = ScenarioConfig(per=ex.FAIRNESS_PER, seed=1)
    means = ex.post_warmup_means(ex.run_fairness_metrics(cfg, "TCP_VS_TCP"), cfg.warmup)
    assert ex.share_ratio(*means) >= 0.8


def test_share_ratio():
    assert ex.share_ratio(50.0, 40.0) == 0.8
    assert ex.share_ratio(0.0, 0.0) == 1.0


def test_crossover_and_flatness_helpers():
    table = ex.Table(ex.SWEEP_COLUMNS, [(0.0, 30.0, 80.0), (0.1, 31.0, 40.0), (0.2, 29.0, 20.0)])
    assert ex.crossover(table) == 0.2
    assert ex.flat_within(table, 0.1, 0.2, 0.1)
    assert not ex.flat_within(table, 0.1, 0.2, 0.01)
    assert ex.crossover(ex.Table(ex.SWEEP_COLUMNS, [(0.0, 1.0, 2.0)])) is None


def test_bottleneck_capacity():
    assert ex.bottleneck_capacity(ScenarioConfig()) == pytest.approx(1e6 / (8 * 1500))


def test_summary_table():
    m = run_scenario(QUICK)
    table = ex.summary_table(m, QUICK.warmup)
    assert table.column("flow") == [1]
    assert table.column("delivered_segments") == [m.flows[0].delivered_segments]
