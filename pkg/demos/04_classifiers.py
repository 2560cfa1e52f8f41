"""
Grid search and cross-validated metrics
=======================================

The seven classifiers are tuned by stratified k-fold grid search on the
z-scored top features; pooled out-of-fold counts give balanced accuracy,
dependability and security.
"""

# %%
from hifdiff.features import FeatureTable, extract_features, select_top
from hifdiff.learn import cross_validate, grid_search
from hifdiff.metrics import EvalReport
from hifdiff.scenario import enumerate_all, stratified_subset
from hifdiff.synth import synthesize

specs = stratified_subset(enumerate_all(42), 200, seed=42)
table = FeatureTable.from_vectors([extract_features(synthesize(s), label=s.class_label) for s in specs])
data = table.subset(select_top(table, 24).names)

# %%
# A deliberately small grid per kind keeps this quick.
grids = {
    "decision_tree": {"criterion": ["entropy", "gini"]},
    "knn": {"neighbors": [3, 5], "distance": ["manhattan", "euclidean"]},
    "svm": {"C": [1, 100], "gamma": [0.01, 0.1], "kernel": ["rbf"]},
    "naive_bayes": {},
}
for kind, grid in grids.items():
    gs = grid_search(kind, grid, data, folds=5, seed=0)
    report = EvalReport(kind, gs.best_hyperparameters, gs.best_cv.pooled, gs.best_score)
    print(f"{kind:14s} BA {report.balanced_accuracy:.3f}  dep {report.dependability:.3f}  "
          f"sec {report.security:.3f}  {gs.best_hyperparameters}")

# %%
# Fold scores for one fixed point.
cv = cross_validate("svm", {"C": 100, "gamma": 0.1, "kernel": "rbf"}, data, folds=5, seed=0)
print([round(s, 3) for s in cv.fold_scores])
