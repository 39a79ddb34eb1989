"""
A small benchmark campaign and its metrics
==========================================

Runs three algorithms on Branin with short budgets, stores one JSON history
per run, and computes the target-based metrics. The same steps are
available from the shell as ``bench run`` and ``bench metrics``.
"""
import tempfile
from pathlib import Path

from lvego.bench.metrics import compute_metrics, export
from lvego.bench.store import CampaignConfig, run_campaign

config = CampaignConfig(problems=("branin",), algorithms=("ms-es", "lv-ego", "alv-ego-gi"),
                        reps=3, budget_extra=10)
out = Path(tempfile.mkdtemp())
store = run_campaign(config, out / "store")
print("runs:", [h.run_id for h in store.histories()])

report = compute_metrics(store)
print("targets:", {q: round(v, 3) for q, v in report.targets["branin"].items()})
for e in report.entries:
    print(f"{e.algorithm:11s} median final {e.median[-1]:7.3f}  "
          f"success@10% {e.success_rate[0.1]:.2f}  "
          f"iterations to 10% target {e.iteration_to_target[0.1]}")

for path in export(report, out / "metrics", "csv"):
    print("wrote", path)
