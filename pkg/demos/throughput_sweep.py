"""Coded vs plain TCP throughput as the erasure rate grows (takes about a minute)."""
from nclayer import experiments as ex
from nclayer.scenario import ScenarioConfig

table = ex.run_throughput_sweep(ScenarioConfig(seed=1))
print(f"{'PER':>5} {'NC':>7} {'TCP':>7}")
for per, nc, tcp in table.rows:
    print(f"{per:5.2f} {nc:7.1f} {tcp:7.1f}")
print("first PER where coding wins:", ex.crossover(table))
