"""Two flows sharing the bottleneck in each pairing."""
from nclayer import experiments as ex
from nclayer.scenario import ScenarioConfig

cfg = ScenarioConfig(per=ex.FAIRNESS_PER, seed=1)
for scenario in ex.Fairness:
    metrics = ex.run_fairness_metrics(cfg, scenario)
    first, second = ex.post_warmup_means(metrics, cfg.warmup)
    kinds = ["NC" if f.nc_enabled else "TCP" for f in metrics.flows]
    print(
        f"{scenario.name:11} flow1 ({kinds[0]}) {first:5.1f}  flow2 ({kinds[1]}) {second:5.1f}"
        f"  ratio {ex.share_ratio(first, second):.2f}"
    )
