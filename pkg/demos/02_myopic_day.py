"""A day of uniform demand dispatched greedily by insertion cost.

Run: python3 demos/02_myopic_day.py
"""
import time

from ridepool import SimConfig, match_myopic, run, summarize
from ridepool.scenarios import two_zone_city, uniform_requests

net = two_zone_city()
day = 6 * 3600.0
demand = uniform_requests(net, 1500, seed=1, day_length=day)

for fleet in (8, 15, 25):
    t0 = time.perf_counter()
    out = run(net, SimConfig(fleet_size=fleet, rng_seed=1, day_length_seconds=day), demand, match_myopic)
    s = summarize(out)
    print(f"fleet {fleet:>2}: served {s.served}/{s.submitted} ({100 * s.service_rate:.1f}%), "
          f"wait {s.mean_wait:.2f} min, ride {s.mean_in_vehicle:.2f} min, "
          f"VMT/passenger {s.vmt_per_passenger:.2f} min  [{time.perf_counter() - t0:.1f} s]")
    # requests are consumed by a run, so build fresh ones
    demand = uniform_requests(net, 1500, seed=1, day_length=day)

busy = s.hourly_rejections.nonzero()[0]
print("hours with rejections at the largest fleet:", [int(h) for h in busy])
