"""The full command-line workflow in a scratch directory.

synth-demand -> learn -> calibrate-lambda -> simulate -> sweep -> compare -> export-heatmap

Run: python3 demos/06_command_line.py [workdir]
"""
import subprocess
import sys
import tempfile
from pathlib import Path

work = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="ridepool-"))
data = work / "data"
day = ["--set", "day_length=14400"]


def ridepool(*args):
    cmd = [sys.executable, "-m", "ridepool", *args, *day]
    print("$ ridepool", " ".join(args))
    done = subprocess.run(cmd, capture_output=True, text=True)
    print(done.stdout + done.stderr, end="")
    if done.returncode:
        sys.exit(f"exit code {done.returncode}")


for d in (1, 2, 3):
    ridepool("synth-demand", "--city", "--alternating", "300", "--seed", str(d), "--out-dir", str(data),
             "--output", f"day{d}.csv")
table = str(work / "learned" / "value_table.csv")
ridepool("learn", "--data-dir", str(data), "--days", "day1.csv,day2.csv", "--fleet", "300",
         "--out-dir", str(work / "learned"))
ridepool("calibrate-lambda", "--data-dir", str(data), "--days", "day3.csv", "--fleet", "15",
         "--value-table", table, "--out-dir", str(work / "lambda"))
ridepool("simulate", "--data-dir", str(data), "--days", "day3.csv", "--fleet", "15",
         "--out-dir", str(work / "myopic"))
ridepool("simulate", "--data-dir", str(data), "--days", "day3.csv", "--fleet", "15", "--policy", "nonmyopic",
         "--rebalancer", "value", "--value-table", table, "--out-dir", str(work / "nonmyopic"))
ridepool("compare", str(work / "myopic" / "metrics.csv"), str(work / "nonmyopic" / "metrics.csv"),
         "--out-dir", str(work / "compare"))
ridepool("sweep", "--data-dir", str(data), "--days", "day3.csv", "--fleets", "10,15,20", "--value-table", table,
         "--out-dir", str(work / "sweep"))
ridepool("export-heatmap", "--data-dir", str(data), "--value-table", table, "--indices", "0,12,24,36",
         "--out-dir", str(work / "heatmap"))

print("\ncomparison.csv:")
print((work / "sweep" / "comparison.csv").read_text())
print("outputs in", work)
