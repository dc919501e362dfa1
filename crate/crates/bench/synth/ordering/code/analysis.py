import csv
import os

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "..", "output")

with open(os.path.join(OUT, "appended_final.csv")) as f:
    rows = list(csv.DictReader(f))

def mean(xs):
    return sum(xs) / len(xs)

table = []
for label, flag in (("Attended", "1"), ("Did not attend", "0")):
    scores = [float(r["score"]) for r in rows if r["attended"] == flag]
    table.append((label, "%.1f" % mean(scores), str(len(scores))))

with open(os.path.join(OUT, "table1.csv"), "w", newline="") as f:
    w = csv.writer(f)
    w.writerow(["Group", "Mean score", "N"])
    w.writerows(table)
for row in table:
    print("\t".join(row))
