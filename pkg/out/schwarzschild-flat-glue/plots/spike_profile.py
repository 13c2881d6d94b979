"""Plot mu_bar against t from spike_profile.csv.  Requires matplotlib."""
import csv
import sys
from collections import defaultdict
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(__file__).resolve().parent.parent
rows = list(csv.DictReader(open(here / "spike_profile.csv")))
groups = defaultdict(list)
for r in rows:
    groups[r.get("delta", "")].append(r)
fig, ax = plt.subplots()
for key, rs in groups.items():
    xs = [r["t"] for r in rs]
    ys = [float(r["mu_bar"]) for r in rs]
    if False:
        ax.bar(xs, ys)
    else:
        ax.plot([float(x) for x in xs], ys, "o-", label=str(key) if key else None)
ax.set_xlabel("t")
ax.set_ylabel("mu_bar")
if len(groups) > 1:
    ax.legend(title="delta")
fig.savefig(sys.argv[1] if len(sys.argv) > 1 else here / "plots" / "spike_profile.png", dpi=120)
