import csv
import os

HERE = os.path.dirname(os.path.abspath(__file__))
DATA = os.path.join(HERE, "..", "data")
OUT = os.path.join(HERE, "..", "output")
os.makedirs(OUT, exist_ok=True)

rows = []
for wave in (1, 2):
    with open(os.path.join(DATA, "wave%d.csv" % wave)) as f:
        for row in csv.DictReader(f):
            row["wave"] = wave
            rows.append(row)

with open(os.path.join(OUT, "appended_final.csv"), "w", newline="") as f:
    w = csv.DictWriter(f, fieldnames=["id", "wave", "attended", "score"])
    w.writeheader()
    for row in rows:
        w.writerow(row)
print("appended %d rows" % len(rows))
