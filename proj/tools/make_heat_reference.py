#!/usr/bin/env python3
"""Write heat-semigroup reference fields for the forward solver.

With rho = 1 and no source, each trigonometric term a cos(n.x) + b sin(n.x)
of the initial field decays by exp(-|n|^2 t) under the Laplacian symbol.
The fields are sampled at x_i = -pi + 2 pi i / P in the JSON field layout.
"""
import json
import math
import pathlib

import numpy as np

# Same trigonometric polynomials as the built-in presets.
MIXED = [((0,), 0.5, 0.0), ((1,), 1.0, 0.0), ((2,), 0.0, 0.5), ((3,), -0.25, 0.0)]
DIAGONAL = [((1, 1), 1.0, 0.0), ((2, -1), 0.0, 0.5)]


def heat_field(terms, dim, points, t):
    axis = -math.pi + 2.0 * math.pi * np.arange(points) / points
    grids = np.meshgrid(*([axis] * dim), indexing="ij")
    u = np.zeros([points] * dim)
    for n, a, b in terms:
        phase = sum(k * g for k, g in zip(n, grids))
        u += math.exp(-sum(k * k for k in n) * t) * (a * np.cos(phase) + b * np.sin(phase))
    return {"dim": dim, "points_per_dim": points, "samples": u.tolist()}


def main():
    out = pathlib.Path(__file__).resolve().parent.parent / "demo" / "reference"
    out.mkdir(parents=True, exist_ok=True)
    cases = {
        "heat_mixed_1d_t0.5.json": heat_field(MIXED, 1, 32, 0.5),
        "heat_diagonal_2d_t0.25.json": heat_field(DIAGONAL, 2, 16, 0.25),
    }
    for name, field in cases.items():
        (out / name).write_text(json.dumps(field) + "\n")


if __name__ == "__main__":
    main()
