"""
Wavelet coefficients and the feature catalog
============================================

Features come from the two cycles after inception.  Alongside statistics,
harmonics and entropies, the Mexican-hat CWT summarizes each phase at eight
dyadic scales.
"""

# %%
import numpy as np

from hifdiff.features import WaveletParams, cwt, discrete_mean, extract_features, mexican_hat, rank_features
from hifdiff.features import FeatureTable
from hifdiff.scenario import enumerate_all, stratified_subset
from hifdiff.synth import synthesize

params = WaveletParams()
fs = 10_000.0

# %%
# The wavelet peaks at 2 / (sqrt(3) pi^(1/4)) for p = 1 and is zero mean once sampled.
print(mexican_hat(0.0, 1.0, 0.0))
for p in params.scale_set:
    print(f"p = {p * 1e3:5.1f} ms   discrete mean {discrete_mean(p, fs, params):+.1e}")

# %%
# A 60 Hz tone with a short burst: small scales light up only at the burst.
t = np.arange(3000) / fs
y = np.sin(2 * np.pi * 60 * t) + np.where((t > 0.15) & (t < 0.152), 5.0, 0.0)
res = cwt(y, params, fs)
for p, row in zip(res.scales, res.coefficients):
    print(f"p = {p * 1e3:5.1f} ms   peak at t = {res.shift_index[np.argmax(np.abs(row))] / fs:.4f} s")

# %%
# Extract the full catalog on a small stratified subset and rank by information gain.
specs = stratified_subset(enumerate_all(42), 120, seed=42)
vectors = [extract_features(synthesize(s), params, s.class_label) for s in specs]
table = FeatureTable.from_vectors(vectors)
print(len(table.names), "features per scenario")
for name, gain in list(rank_features(table))[:10]:
    print(f"{name:28s} {gain:.3f} bits")
