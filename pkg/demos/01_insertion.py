"""Insert pooled trips into one vehicle's route and watch the cost move.

Run: python3 demos/01_insertion.py
"""
from ridepool import Request, SimConfig, VehicleSchedule, grid_network, route_cost, try_insert
from ridepool.schedule import Infeasible, latest_dropoff_of

net = grid_network(5, 5, edge_time=60.0)
cfg = SimConfig()
sched = VehicleSchedule(vehicle_id=0, current_node=0, current_time=0.0)

# node id = row * 5 + col, one minute per block
trips = [Request(0, 0.0, 1, 24), Request(1, 0.0, 2, 14), Request(2, 0.0, 20, 4)]
for req in trips:
    req.latest_dropoff = latest_dropoff_of(req, net, cfg)
    try:
        res = try_insert(sched, req, net, cfg, now=0.0)
    except Infeasible as exc:
        print(f"trip {req.id}: infeasible ({exc})")
        continue
    req.status = "assigned"
    sched = res.schedule
    print(f"trip {req.id}: cost {res.old_cost:.2f} -> {res.new_cost:.2f} min")
    for s in sched.stops:
        print(f"    {s.kind:<8} trip {s.request_id} at node {s.node:>2}, t = {s.planned_arrival:>5.0f} s")

c = route_cost(sched, cfg)
print(f"\ndriving {c.operator_time:.1f} min, riding {c.in_vehicle_sum:.1f} min, waiting {c.wait_sum:.1f} min")

# a seventh rider does not fit a six-seat vehicle
full = VehicleSchedule(1, 12, 0.0, onboard_count=6)
try:
    try_insert(full, Request(9, 0.0, 12, 13), net, cfg, now=0.0)
except Infeasible as exc:
    print("full vehicle:", exc)
