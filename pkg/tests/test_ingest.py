import numpy as np
import pytest

from ridepool.ingest import (
    Pulse,
    RunConfig,
    TripFileError,
    TripRecord,
    load_config,
    load_trips,
    parse_config,
    parse_pulses,
    synth_demand,
    write_config,
    write_trips,
)
from ridepool.scenarios import two_zone_city
from ridepool.network import grid_network

HEADER = "submission_s,origin,dest\n"


@pytest.fixture
def city():
    # 10 zones of 2 columns each on a 2x20 grid
    return grid_network(2, 20, 60.0, zone_fn=lambda r, c: c // 2)


def write(tmp_path, body, name="trips.csv"):
    p = tmp_path / name
    p.write_text(HEADER + body)
    return p


def test_header_only_is_empty(tmp_path, city):
    assert load_trips(write(tmp_path, ""), city, np.random.default_rng(0)) == []


def test_zone_endpoints_expand_into_zone(tmp_path, city):
    (req,) = load_trips(write(tmp_path, "100,zone:5,zone:9\n"), city, np.random.default_rng(0))
    assert req.origin_stop in city.stops_in_zone[5]
    assert req.dest_stop in city.stops_in_zone[9]
    assert req.submission_time == 100.0


def test_output_sorted(tmp_path, city):
    reqs = load_trips(write(tmp_path, "500,node:1,node:2\n20,node:3,node:3\n90,node:0,node:5\n"),
                      city, np.random.default_rng(0))
    assert [r.submission_time for r in reqs] == [20.0, 90.0, 500.0]
    assert [r.id for r in reqs] == [0, 1, 2]
    assert reqs[0].origin_stop == reqs[0].dest_stop == 3  # same-place trips are kept


def test_parse_errors_collected_with_lines(tmp_path, city):
    body = "10,node:1,node:2\nabc,node:1,node:2\n20,place:1,node:2\n90000,node:1,node:2\n30,node:1\n"
    with pytest.raises(TripFileError) as err:
        load_trips(write(tmp_path, body), city, np.random.default_rng(0))
    msg = str(err.value)
    for line in (3, 4, 5, 6):
        assert f"line {line}:" in msg
    assert "line 2:" not in msg


@pytest.mark.parametrize("body", ["10,zone:99,zone:1\n", "10,node:1,node:4000\n"])
def test_unknown_endpoint_aborts(tmp_path, city, body):
    with pytest.raises(TripFileError):
        load_trips(write(tmp_path, body), city, np.random.default_rng(0))


def test_bad_header(tmp_path, city):
    p = tmp_path / "t.csv"
    p.write_text("time,o,d\n1,node:1,node:2\n")
    with pytest.raises(TripFileError, match="line 1"):
        load_trips(p, city, np.random.default_rng(0))


def test_round_trip(tmp_path, city):
    rng = np.random.default_rng(3)
    body = "".join(f"{t},zone:{rng.integers(10)},zone:{rng.integers(10)}\n" for t in rng.uniform(0, 86000, 50))
    first = load_trips(write(tmp_path, body), city, np.random.default_rng(1))
    write_trips(tmp_path / "again.csv", first)
    second = load_trips(tmp_path / "again.csv", city, np.random.default_rng(99))
    key = lambda rs: [(r.id, r.submission_time, r.origin_stop, r.dest_stop) for r in rs]
    assert key(first) == key(second)


def test_zone_expansion_is_uniform(tmp_path):
    net = two_zone_city()
    stops = net.stops_in_zone[0]
    n = 200 * len(stops)
    p = write(tmp_path, "".join("0,zone:0,zone:0\n" for _ in range(n)))
    reqs = load_trips(p, net, np.random.default_rng(7))
    counts = np.array([sum(r.origin_stop == s for r in reqs) for s in stops])
    expected = n / len(stops)
    # chi-square against uniform, 99.9% quantile for df = 35 is about 66.6
    chi2 = ((counts - expected) ** 2 / expected).sum()
    assert chi2 < 66.6


def test_synth_single_pulse():
    recs = synth_demand([Pulse(0, 3600, 0, 1, 100)], np.random.default_rng(0))
    assert len(recs) == 100
    assert all(0 <= r.submission_time < 3600 for r in recs)
    assert all((r.origin, r.dest) == ("zone:0", "zone:1") for r in recs)


def test_synth_two_pulses_sorted():
    recs = synth_demand([Pulse(7200, 9000, 1, 0, 30), Pulse(0, 600, 0, 1, 20)], np.random.default_rng(0))
    times = [r.submission_time for r in recs]
    assert len(recs) == 50 and times == sorted(times)
    assert sum(r.origin == "zone:0" for r in recs) == 20


def test_synth_deterministic(tmp_path):
    pulses = parse_pulses("0,3600,0,1,50; 3600,7200,1,0,40")
    synth_demand(pulses, np.random.default_rng(4), tmp_path / "a.csv")
    synth_demand(pulses, np.random.default_rng(4), tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_parse_pulses_rejects_short_entries():
    with pytest.raises(ValueError):
        parse_pulses("0,3600,0,1")


def test_config_defaults_are_operating_point():
    rc = RunConfig()
    assert (rc.tick_seconds, rc.w_max, rc.capacity, rc.theta, rc.alpha) == (30, 600, 6, 0.5, 1.4)
    assert (rc.n_steps, rc.gamma, rc.lam, rc.tau, rc.period_seconds) == (12, 0.9, 0.005, 30, 300)
    assert rc.learn_fleet_size == 7000 and rc.candidate_cap == 30


def test_config_file(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("# comment\nfleet_size = 700\npolicy = nonmyopic\nlam = 0.01  # tuned\naudit = yes\n")
    rc = load_config(p, seed=3)
    assert (rc.fleet_size, rc.policy, rc.lam, rc.audit, rc.seed) == (700, "nonmyopic", 0.01, True, 3)
    write_config(rc, tmp_path / "out.cfg")
    assert load_config(tmp_path / "out.cfg") == rc


@pytest.mark.parametrize("text", ["bogus = 1\n", "fleet_size = many\n", "policy = greedy\n", "audit = maybe\n",
                                  "just words\n"])
def test_config_errors(tmp_path, text):
    p = tmp_path / "bad.cfg"
    p.write_text(text)
    with pytest.raises(ValueError):
        load_config(p)


def test_config_error_line_numbers():
    with pytest.raises(ValueError, match="line 2"):
        parse_config("fleet_size = 5\nwhat = 1\n")


def test_trip_record_writer(tmp_path):
    write_trips(tmp_path / "t.csv", [TripRecord(1.5, "zone:1", "node:4")])
    assert (tmp_path / "t.csv").read_text().splitlines() == ["submission_s,origin,dest", "1.5,zone:1,node:4"]
