import csv

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ridepool.engine import SimOutcome, run
from ridepool.learning import StateValueTable
from ridepool.myopic import match_myopic
from ridepool.report import (
    EmptyRun,
    MetricsSummary,
    MissingBaseline,
    combine,
    compare,
    heatmap_export,
    percent_delta,
    summarize,
    write_comparison,
    write_summary,
)
from ridepool.scenarios import two_zone_city, uniform_requests
from ridepool.schedule import COMPLETED, REJECTED, Request, SimConfig


def outcome_of(requests, vmt=0.0):
    return SimOutcome(requests, np.zeros((1, 1), dtype=np.int64), [], vmt, 30.0, 86400.0)


def served(i, sub, pick, drop):
    return Request(i, sub, 0, 1, status=COMPLETED, pickup_time=pick, dropoff_time=drop)


def test_service_rate():
    reqs = [served(i, 0, 60, 120) for i in range(9)] + [Request(9, 0, 0, 1, status=REJECTED)]
    assert summarize(outcome_of(reqs)).service_rate == 0.9


def test_wait_and_ride_minutes():
    s = summarize(outcome_of([served(0, 480.0, 600.0, 900.0)], vmt=1200.0))
    assert s.mean_wait == pytest.approx(2.0)
    assert s.mean_in_vehicle == pytest.approx(5.0)
    assert s.vmt_per_passenger == pytest.approx(20.0)


def test_nothing_served():
    s = summarize(outcome_of([Request(0, 0, 0, 1, status=REJECTED)], vmt=600.0))
    assert s.vmt_per_passenger is None and s.mean_wait is None
    assert s.vehicle_minutes == 10.0


def test_empty_run():
    with pytest.raises(EmptyRun):
        summarize(outcome_of([]))


def test_relocations_not_counted_as_passengers():
    reloc = Request(-1, 0, 0, 1, status=COMPLETED, is_rebalancing=True)
    s = summarize(outcome_of([served(0, 0, 60, 120), reloc], vmt=600.0))
    assert (s.submitted, s.served) == (1, 1)
    assert s.vmt_per_passenger == 10.0


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 86399), st.booleans()), min_size=1, max_size=60))
def test_hourly_counts_sum(rows):
    reqs = []
    for i, (t, ok) in enumerate(rows):
        reqs.append(served(i, t, t + 1, t + 2) if ok else Request(i, t, 0, 1, status=REJECTED))
    s = summarize(outcome_of(reqs))
    assert s.hourly_submissions.sum() == len(rows) and len(s.hourly_submissions) == 24
    assert s.hourly_rejections.sum() == sum(not ok for _, ok in rows)
    assert summarize(outcome_of(reqs)) == s


def test_summary_of_real_run_is_pure():
    net = two_zone_city()
    out = run(net, SimConfig(fleet_size=4, day_length_seconds=3600), uniform_requests(net, 100, 1, 3600),
              match_myopic)
    assert summarize(out) == summarize(out)
    assert 0 <= summarize(out).service_rate <= 1


def test_combine_is_request_weighted():
    a = summarize(outcome_of([served(0, 0, 60, 120)] + [Request(i, 0, 0, 1, status=REJECTED) for i in range(1, 4)]))
    b = summarize(outcome_of([served(i, 0, 180, 240) for i in range(3)]))
    c = combine([a, b])
    assert c.service_rate == pytest.approx(4 / 7)
    assert c.mean_wait == pytest.approx((1 + 3 * 3) / 4)
    assert len(c.days) == 2


def summary(rate, wait=3.0, ride=10.0, vmt=5.0):
    return MetricsSummary(100, int(rate * 100), 100 - int(rate * 100), rate, wait, ride, 500.0, vmt,
                          np.zeros(24, dtype=int), np.zeros(24, dtype=int))


def test_identical_runs_zero_delta():
    rows = compare({("myopic", 1000): summary(0.9), ("nonmyopic", 1000): summary(0.9)})
    assert all(row[k] == 0 for row in rows for k in row if k.endswith("_delta_pct"))


def test_worked_delta():
    rows = compare({("myopic", 1000): summary(0.871), ("nonmyopic", 1000): summary(0.944)})
    nm = [r for r in rows if r["policy"] == "nonmyopic"][0]
    assert nm["service_rate_delta_pct"] == pytest.approx(8.38, abs=0.01)


def test_single_run_has_no_baseline():
    with pytest.raises(MissingBaseline):
        compare({("myopic", 1000): summary(0.9)})
    with pytest.raises(MissingBaseline):
        compare({("nonmyopic", 700): summary(0.9), ("nonmyopic", 1000): summary(0.9)})


def test_deltas_at_same_fleet():
    runs = {(p, f): summary(r) for (p, f, r) in [("myopic", 700, 0.5), ("myopic", 1000, 0.8),
                                                   ("nonmyopic", 700, 0.6), ("nonmyopic", 1000, 0.88)]}
    rows = compare(runs)
    assert [(r["policy"], r["fleet"]) for r in rows] == [("myopic", 700), ("nonmyopic", 700),
                                                         ("myopic", 1000), ("nonmyopic", 1000)]
    assert rows[1]["service_rate_delta_pct"] == pytest.approx(20.0)
    assert rows[3]["service_rate_delta_pct"] == pytest.approx(10.0)


def test_percent_delta_guards():
    assert percent_delta(None, 1.0) is None and percent_delta(1.0, 0.0) is None


def test_comparison_csv(tmp_path):
    rows = compare({("myopic", 10): summary(0.5), ("nonmyopic", 10): summary(0.6, vmt=None)})
    write_comparison(rows, tmp_path / "c.csv")
    table = list(csv.DictReader(open(tmp_path / "c.csv")))
    assert len(table) == 2 and table[1]["vmt_per_passenger"] == ""


def test_heatmap_rows(tmp_path):
    table = StateValueTable(288, 69)
    heatmap_export(table, [216], tmp_path / "h.csv")
    lines = (tmp_path / "h.csv").read_text().splitlines()
    assert lines[0] == "time_index,zone_id,value"
    assert len(lines) == 70
    assert all(l.startswith("216,") and l.endswith(",0.0") for l in lines[1:])
    assert 18 * 3600 // 300 == 216


def test_heatmap_empty_index_list(tmp_path):
    heatmap_export(StateValueTable(4, 2), [], tmp_path / "h.csv")
    assert (tmp_path / "h.csv").read_text().splitlines() == ["time_index,zone_id,value"]


def test_heatmap_values(tmp_path):
    table = StateValueTable(4, 2)
    table.V[2] = [1.5, 0.25]
    heatmap_export(table, [2, 0], tmp_path / "h.csv")
    rows = list(csv.reader(open(tmp_path / "h.csv")))[1:]
    assert rows == [["2", "0", "1.5"], ["2", "1", "0.25"], ["0", "0", "0.0"], ["0", "1", "0.0"]]


def test_summary_file(tmp_path):
    s = summarize(outcome_of([served(0, 480.0, 600.0, 900.0)], vmt=1200.0))
    write_summary(s, tmp_path / "m.csv")
    rows = dict(csv.reader(open(tmp_path / "m.csv")))
    assert float(rows["mean_wait"]) == 2.0 and rows["hour_00_submissions"] == "1"
