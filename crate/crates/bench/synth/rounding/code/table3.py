import csv
import os

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "..", "output")
os.makedirs(OUT, exist_ok=True)

with open(os.path.join(HERE, "..", "data", "survey.csv")) as f:
    rows = list(csv.DictReader(f))

def stats(group):
    xs = [float(r["persisted"]) for r in rows if r["group"] == group]
    m = sum(xs) / len(xs)
    sd = (sum((x - m) ** 2 for x in xs) / (len(xs) - 1)) ** 0.5
    return m, sd, len(xs)

with open(os.path.join(OUT, "table3.csv"), "w", newline="") as f:
    w = csv.writer(f)
    w.writerow(["group", "mean", "sd", "n"])
    for group in ("treated", "control"):
        m, sd, n = stats(group)
        w.writerow([group, "%.4f" % m, "%.4f" % sd, n])
        print(group, "%.4f" % m, "%.4f" % sd, n)
