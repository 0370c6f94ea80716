"""Build data/yeast_me2.csv from the KEEL ``yeast4`` file (ME2 vs. all other classes).

The KEEL file ships inside the ``imbalanced-databases`` wheel:

    pip download imbalanced-databases --no-deps -d /tmp/idb
    python scripts/make_yeast_csv.py /tmp/idb/imbalanced_databases-*.whl

KEEL already collapsed the nine non-ME2 localization classes into
"negative"; this script writes them back as ``other`` and the positives as
``ME2`` so that ``positive_label="ME2"`` selects the minority class.
"""

import csv
import sys
import zipfile
from pathlib import Path

MEMBER = "imbalanced_databases/data/yeast4/yeast4.dat"


def main(wheel: str, out: str = "data/yeast_me2.csv") -> None:
    with zipfile.ZipFile(wheel) as zf:
        text = zf.read(MEMBER).decode("utf-8")
    names, rows, in_data = [], [], False
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.lower().startswith("@attribute"):
            names.append(line.split()[1])
        elif line.lower() == "@data":
            in_data = True
        elif in_data:
            cells = [c.strip() for c in line.split(",")]
            cells[-1] = "ME2" if cells[-1] == "positive" else "other"
            rows.append(cells)
    with Path(out).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([*names[:-1], "class"])
        w.writerows(rows)
    n_pos = sum(r[-1] == "ME2" for r in rows)
    print(f"wrote {out}: {len(rows)} rows, {n_pos} ME2")


if __name__ == "__main__":
    main(*sys.argv[1:])
