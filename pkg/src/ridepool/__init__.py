"""Ride-pooling dispatch simulation with learned spatiotemporal state values."""

from .engine import Fleet, SimOutcome, Simulation, run
from .ingest import RunConfig, TripRecord, load_config, load_trips, synth_demand, write_trips
from .learning import LearnerConfig, RejectionDuringLearning, StateValueTable, extract_episodes, learn, nstep_return, sweep
from .myopic import match_myopic
from .network import RoadNetwork, SpaceTimeGrid, grid_network, load_network, shortest_time, snap_to_stop
from .nonmyopic import NonMyopicMatcher, PlannerConfig, calibrate_lambda, marginal_gain, match_nonmyopic
from .rebalance import RejectedChaseRebalancer, ValueRebalancer, rebalance_step, zone_balances
from .report import MetricsSummary, compare, heatmap_export, summarize
from .schedule import InvariantViolation, Request, SimConfig, VehicleSchedule, route_cost, try_insert

__version__ = "0.1.0"
