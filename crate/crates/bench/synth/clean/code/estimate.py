import csv
import os

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "..", "output")
os.makedirs(OUT, exist_ok=True)

with open(os.path.join(HERE, "..", "data", "commutes.csv")) as f:
    rows = [(float(r["minutes"]), float(r["wage"])) for r in csv.DictReader(f)]

n = len(rows)
mx = sum(x for x, _ in rows) / n
my = sum(y for _, y in rows) / n
sxx = sum((x - mx) ** 2 for x, _ in rows)
slope = sum((x - mx) * (y - my) for x, y in rows) / sxx
intercept = my - slope * mx

with open(os.path.join(OUT, "table4.csv"), "w", newline="") as f:
    w = csv.writer(f)
    w.writerow(["Coefficient", "Estimate"])
    w.writerow(["Intercept", "%.3f" % intercept])
    w.writerow(["Minutes", "%.3f" % slope])
    w.writerow(["N", n])
print("slope %.3f intercept %.3f" % (slope, intercept))
