"""Plot relative_margin against which from verdicts.csv.  Requires matplotlib."""
import csv
import sys
from collections import defaultdict
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(__file__).resolve().parent.parent
rows = list(csv.DictReader(open(here / "verdicts.csv")))
groups = defaultdict(list)
for r in rows:
    groups[r.get("", "")].append(r)
fig, ax = plt.subplots()
for key, rs in groups.items():
    xs = [r["which"] for r in rs]
    ys = [float(r["relative_margin"]) for r in rs]
    if True:
        ax.bar(xs, ys)
    else:
        ax.plot([float(x) for x in xs], ys, "o-", label=str(key) if key else None)
ax.set_xlabel("which")
ax.set_ylabel("relative_margin")
if len(groups) > 1:
    ax.legend(title="")
fig.savefig(sys.argv[1] if len(sys.argv) > 1 else here / "plots" / "margins.png", dpi=120)
