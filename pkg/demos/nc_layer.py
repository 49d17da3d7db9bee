"""A short transfer through the coding layer over a lossy dumbbell."""
from nclayer.scenario import ScenarioConfig
from nclayer.simnet import Network, transfer_data

cfg = ScenarioConfig(per=0.25, transfer_bytes=500 * 1448, t_end=120.0, warmup=0.0, seed=5)
net = Network(cfg, keep_data=True)
metrics = net.run_until()
flow = metrics.flows[0]
bottleneck = metrics.links["N3->N4"]

print(f"delivered {flow.delivered_segments} segments, {flow.duplicates} duplicates")
print(f"stream intact: {bytes(net.sinks[0].tcp.data) == transfer_data(cfg, 0)}")
print(f"bottleneck erased {bottleneck.erased} of {bottleneck.injected} coded segments")
print(f"codewords sent {flow.nc_codewords}, codeword retransmissions {flow.nc_retransmissions}")
print(f"segments rebuilt from parity {flow.nc_reconstructed}, TCP timeouts {flow.tcp_timeouts}")
