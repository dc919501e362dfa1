import csv
import os

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "..", "output")

with open(os.path.join(HERE, "..", "data", "admissions_restricted.csv")) as f:
    rows = list(csv.DictReader(f))

os.makedirs(OUT, exist_ok=True)
with open(os.path.join(OUT, "figure5.csv"), "w", newline="") as f:
    w = csv.writer(f)
    w.writerow(["month", "wait_days"])
    for r in rows:
        w.writerow([r["month"], r["wait_days"]])
