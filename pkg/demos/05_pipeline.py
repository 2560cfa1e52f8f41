"""
Running the staged pipeline
===========================

``generate``, ``features`` and ``train-eval`` hand files to each other inside
one run directory.  The same entry point backs the ``hifdiff`` command.
"""

# %%
import json
import tempfile
from pathlib import Path

from hifdiff.cli import main

out = Path(tempfile.mkdtemp()) / "run"
grid = out.parent / "grid.json"
grid.write_text(json.dumps({
    "random_forest": {"estimators": [50], "max_depth": [5], "max_features": [0.5], "min_samples_leaf": [5]},
    "gradient_boost": {"estimators": [50], "learning_rate": [0.1], "max_depth": [5], "subsample": [1.0]},
}))

# %%
main(["generate", "--out", str(out), "--limit", "150", "--seed", "42"])
main(["features", "--out", str(out)])
main(["train-eval", "--out", str(out), "--grid", str(grid)])

# %%
print((out / "reports" / "table.csv").read_text())
print(sorted(p.name for p in out.rglob("config.json")))
