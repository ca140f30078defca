"""Learn per-zone state values from pulsed demand with an oversized fleet.

Demand alternates between the two districts every hour, so the value of
standing in a district swings with the clock.

Run: python3 demos/03_learn_values.py
"""
import numpy as np

from ridepool import LearnerConfig, SimConfig, SpaceTimeGrid, learn
from ridepool.scenarios import alternating_pulses, pulsed_requests, two_zone_city

hours = 4
net = two_zone_city()
grid = SpaceTimeGrid.for_network(net, 300, hours * 3600.0)
pulses = alternating_pulses(hours, 400, local_share=1.0)
days = [pulsed_requests(net, pulses, seed=100 + d) for d in range(3)]


def progress(d, table, outcome):
    print(f"day {d + 1}: {len(outcome.requests)} trips, {table.N.sum()} state visits so far")


table = learn(days, net, SimConfig(fleet_size=300, day_length_seconds=hours * 3600.0), LearnerConfig(), grid,
              seeds=[0, 1, 2], on_day=progress)

print("\n  time    west   east")
for t in range(0, grid.num_periods, 3):
    west, east = table.V[t]
    print(f"  {t * 5 // 60:02d}:{t * 5 % 60:02d}  {west:6.2f} {east:6.2f}")
print("\nvalue leader flips each hour:", np.argmax(table.V[::12], axis=1))
