"""Run the acceptance suite and print only the per-criterion PASS/FAIL lines.

    python scripts/acceptance_report.py            # all criteria
    python scripts/acceptance_report.py -k "07 or 08"
"""
import subprocess
import sys
from pathlib import Path

root = Path(__file__).resolve().parents[1]
cmd = [sys.executable, "-m", "pytest", "-q", "-s", str(root / "tests" / "test_acceptance.py")] + sys.argv[1:]
proc = subprocess.run(cmd, capture_output=True, text=True, cwd=root)
seen = set()
for line in proc.stdout.splitlines():
    if line.startswith("CRITERION") and line not in seen:
        seen.add(line)
        print(line)
    elif line.startswith("  exploratory"):
        print(line)
sys.exit(proc.returncode)
