"""Write the toy private dataset the quickstart config points at."""

from pathlib import Path

import numpy as np

import dpevolve as dp

out = Path(__file__).parent.parent / "output"
out.mkdir(exist_ok=True)
gen = np.random.default_rng(0)
centers = np.array([[0.25, 0.0], [-0.2, 0.2], [-0.1, -0.25]])
coords = np.concatenate([c + 0.02 * gen.standard_normal((20, 2)) for c in centers])
dp.save_dataset(dp.Dataset(coords), out / "toy_private.csv", "csv")
print(f"wrote {out / 'toy_private.csv'}")
