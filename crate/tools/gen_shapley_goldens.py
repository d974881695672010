#!/usr/bin/env python3
"""Regenerates the Shapley golden fixtures from an independent implementation.

Reads the committed MLP model and input, evaluates every coalition with a
NumPy forward pass, and freezes (a) the full marginal-contribution table and
(b) the Shapley values from the weighted-coalition formula, after checking
that formula against the definitional average over all feature orderings.
Run from the repository root:

    python3 tools/gen_shapley_goldens.py
"""

import itertools
import json
import math
import pathlib

ROOT = pathlib.Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"


def load_model(path):
    with open(path) as fh:
        model = json.load(fh)
    assert model["schema_version"] == 1
    return model["layers"]


def forward(layers, x):
    import numpy as np

    v = np.asarray(x, dtype=np.float64)
    for layer in layers:
        assert layer["kind"] == "dense"
        w = np.asarray(layer["weights"], dtype=np.float64)
        b = np.asarray(layer["bias"], dtype=np.float64)
        v = w @ v + b
        act = layer["activation"]
        if act == "relu":
            v = np.maximum(v, 0.0)
        elif act == "softmax":
            e = np.exp(v - v.max())
            v = e / e.sum()
        else:
            assert act == "identity"
    return v


def masked(x, baseline, mask, n):
    return [x[i] if mask & (1 << i) else baseline[i] for i in range(n)]


def main():
    layers = load_model(FIXTURES / "mlp_4_8_2.json")
    x = [float(c) for c in (FIXTURES / "input_4.csv").read_text().strip().split(",")]
    n = len(x)
    baseline = [0.0] * n
    class_index = 0

    fvals = [
        float(forward(layers, masked(x, baseline, mask, n))[class_index])
        for mask in range(1 << n)
    ]

    marginals = []
    for mask in range(1 << n):
        for i in range(n):
            if mask & (1 << i):
                continue
            marginals.append(
                {
                    "subset": mask,
                    "feature": i,
                    "value": fvals[mask | (1 << i)] - fvals[mask],
                }
            )

    values = [0.0] * n
    for i in range(n):
        for mask in range(1 << n):
            if mask & (1 << i):
                continue
            s = bin(mask).count("1")
            weight = (
                math.factorial(s) * math.factorial(n - 1 - s) / math.factorial(n)
            )
            values[i] += weight * (fvals[mask | (1 << i)] - fvals[mask])

    # Cross-check against the permutation definition before freezing.
    perm_sums = [0.0] * n
    for order in itertools.permutations(range(n)):
        mask = 0
        for i in order:
            perm_sums[i] += fvals[mask | (1 << i)] - fvals[mask]
            mask |= 1 << i
    perm_values = [s / math.factorial(n) for s in perm_sums]
    worst = max(abs(a - b) for a, b in zip(values, perm_values))
    assert worst <= 1e-12, f"coalition vs permutation mismatch: {worst}"

    efficiency_gap = abs(sum(values) - (fvals[-1] - fvals[0]))
    assert efficiency_gap <= 1e-12, f"efficiency violated: {efficiency_gap}"

    with open(FIXTURES / "shapley_marginals_mlp_n4.json", "w") as fh:
        json.dump(
            {
                "x": x,
                "baseline": baseline,
                "class_index": class_index,
                "marginals": marginals,
            },
            fh,
            indent=2,
        )
        fh.write("\n")

    with open(FIXTURES / "shapley_mlp_n4.json", "w") as fh:
        json.dump(
            {
                "x": x,
                "baseline": baseline,
                "class_index": class_index,
                "values": values,
                "efficiency_gap": efficiency_gap,
            },
            fh,
            indent=2,
        )
        fh.write("\n")

    print("values:", values)
    print("efficiency gap:", efficiency_gap)
    print("coalition-vs-permutation worst diff:", worst)


if __name__ == "__main__":
    main()
