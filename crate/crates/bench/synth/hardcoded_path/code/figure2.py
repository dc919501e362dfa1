import csv
import os

import plotlib

HERE = os.path.dirname(os.path.abspath(__file__))
DATA = "/Users/jdoe/Dropbox/prices_project/data/series.csv"

years, index = [], []
with open(DATA) as f:
    for row in csv.DictReader(f):
        years.append(float(row["year"]))
        index.append(float(row["index"]))

fig = plotlib.Figure()
fig.line(years, index)
plotlib.show(fig)
