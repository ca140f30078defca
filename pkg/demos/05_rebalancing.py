"""Idle-vehicle rebalancing from a lopsided start.

Every vehicle starts in the east district. The value rebalancer moves idle
vehicles toward districts whose learned value share exceeds their vehicle
share. Waits drop and empty driving goes up.

Run: python3 demos/05_rebalancing.py   (about 20 s)
"""
from ridepool import LearnerConfig, NonMyopicMatcher, PlannerConfig, SimConfig, SpaceTimeGrid, ValueRebalancer, learn, run, summarize
from ridepool.scenarios import alternating_pulses, pulsed_requests, two_zone_city, zone_start_nodes

hours, fleet = 8, 17
day = hours * 3600.0
net = two_zone_city()
grid = SpaceTimeGrid.for_network(net, 300, day)
pulses = alternating_pulses(hours, 400, local_share=1.0)
table = learn([pulsed_requests(net, pulses, 100 + d) for d in range(4)], net,
              SimConfig(fleet_size=300, day_length_seconds=day), LearnerConfig(), grid, seeds=[0, 1, 2, 3])
pcfg = PlannerConfig(table)

for seed in range(2):
    cfg = SimConfig(fleet_size=fleet, rng_seed=seed, day_length_seconds=day)
    start = zone_start_nodes(net, fleet, seed, shares=[0.0, 1.0])
    for label, reb in (("no rebalancing", None), ("value rebalancing", ValueRebalancer(pcfg, grid, interval=30))):
        out = run(net, cfg, pulsed_requests(net, pulses, 1000 + seed), NonMyopicMatcher(pcfg, grid), reb, start)
        s = summarize(out)
        print(f"seed {seed} {label:<18} wait {s.mean_wait:.2f} min, VMT/passenger {s.vmt_per_passenger:.2f} min, "
              f"service {100 * s.service_rate:.1f}%, {len(out.relocations)} relocations")
