"""Batch runs from scenario files, as the command line does it.

Equivalent shell commands:

    dynwardrop solve demos/scenarios/corridor.scn --bins 32 --tol 1e-3 --out out/corridor
    dynwardrop check demos/scenarios/corridor.scn --out out/corridor
    dynwardrop oracle demos/scenarios/corridor.scn --out out/corridor
    dynwardrop solve-dtc demos/scenarios/commute.scn --out out/commute

Run:  python3 demos/06_scenario_batch.py
"""

from pathlib import Path

from dynwardrop.cli import main

HERE = Path(__file__).parent
OUT = HERE.parent / "out" / "demo"

for argv in (
    ["solve", str(HERE / "scenarios" / "corridor.scn"), "--bins", "32",
     "--tol", "1e-3", "--out", str(OUT / "corridor")],
    ["check", str(HERE / "scenarios" / "corridor.scn"), "--probes", "50",
     "--out", str(OUT / "corridor")],
    ["oracle", str(HERE / "scenarios" / "corridor.scn"), "--out", str(OUT / "corridor")],
    ["solve-dtc", str(HERE / "scenarios" / "commute.scn"), "--out", str(OUT / "commute")],
):
    code = main(argv)
    print(f"dynwardrop {' '.join(argv[:1])} -> exit {code}")

for summary in sorted(OUT.glob("*/*summary.txt")):
    print(f"\n== {summary.relative_to(OUT.parent)}")
    print(summary.read_text().rstrip())
