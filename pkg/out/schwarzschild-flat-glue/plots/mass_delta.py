"""Plot m against delta from mass.csv.  Requires matplotlib."""
import csv
import sys
from collections import defaultdict
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(__file__).resolve().parent.parent
rows = list(csv.DictReader(open(here / "mass.csv")))
groups = defaultdict(list)
for r in rows:
    groups[r.get("", "")].append(r)
fig, ax = plt.subplots()
for key, rs in groups.items():
    xs = [r["delta"] for r in rs]
    ys = [float(r["m"]) for r in rs]
    if False:
        ax.bar(xs, ys)
    else:
        ax.plot([float(x) for x in xs], ys, "o-", label=str(key) if key else None)
ax.set_xlabel("delta")
ax.set_ylabel("m")
if len(groups) > 1:
    ax.legend(title="")
fig.savefig(sys.argv[1] if len(sys.argv) > 1 else here / "plots" / "mass_delta.png", dpi=120)
