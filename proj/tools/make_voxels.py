"""Writes data/voxels.csv: a synthetic lesion map with one binary response per
subject and voxel. Some voxels have very few lesions, so their logistic fits
are separated."""

import numpy as np

rng = np.random.default_rng(20240611)
subjects, voxels = 40, 30
age = np.round(rng.normal(0.0, 1.0, subjects), 3)
patient = np.repeat([0, 1], subjects // 2)
rows = []
for v in range(1, voxels + 1):
    base = rng.uniform(-4.0, -0.5)
    effect = rng.uniform(0.0, 2.0)
    eta = base + effect * patient + 0.3 * age
    lesion = rng.binomial(1, 1.0 / (1.0 + np.exp(-eta)))
    rows += [(v, age[i], patient[i], lesion[i]) for i in range(subjects)]

with open("data/voxels.csv", "w") as f:
    f.write("voxel,age,patient,lesion\n")
    for r in rows:
        f.write(f"{r[0]},{r[1]},{r[2]},{r[3]}\n")
