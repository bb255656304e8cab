"""Regenerates the bundled d = 1 real-response dataset and its golden component.

With one predictor and scalar responses the backfitting fixed point has the
closed form f1(x) = sum_i K_h(x, X_i) (Y_i - mean(Y)) / sum_i K_h(x, X_i),
where K_h is the biweight kernel normalized by trapezoid quadrature over the
domain. This script evaluates that formula independently of the library.
"""

import json
import math
import pathlib

import numpy as np

HERE = pathlib.Path(__file__).resolve().parent
DATA = HERE.parent / "data"

N_OBS = 25
NODES = 41
BANDWIDTH = 0.2


def dataset():
    rng = np.random.default_rng(20240611)
    x = np.sort(rng.uniform(0.0, 1.0, N_OBS))
    y = np.sin(2.0 * math.pi * x) + 0.2 * rng.standard_normal(N_OBS)
    return np.round(x, 6), np.round(y, 6)


def trapezoid_weights(nodes):
    w = np.full(nodes.size, nodes[1] - nodes[0])
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def oracle_component(x, y, h, nodes):
    w = trapezoid_weights(nodes)
    t = np.abs(nodes[:, None] - x[None, :]) / h
    k = np.where(t < 1.0, (1.0 - t**2) ** 2, 0.0) / h
    k = k / (w @ k)  # each column integrates to one over the domain
    return (k @ (y - y.mean())) / k.sum(axis=1)


def main():
    x, y = dataset()
    DATA.mkdir(exist_ok=True)
    with open(DATA / "fit_d1.jsonl", "w") as f:
        f.write(json.dumps({"d": 1, "L": [1], "domains": [[[0, 1]]], "space": "euclidean:1"}) + "\n")
        for xi, yi in zip(x, y):
            f.write(json.dumps({"x": [float(xi)], "y": {"kind": "euclidean", "coeffs": [float(yi)]}}) + "\n")
    nodes = np.linspace(0.0, 1.0, NODES)
    f1 = oracle_component(x, y, BANDWIDTH, nodes)
    with open(DATA / "fit_d1_component_1.golden.csv", "w") as f:
        f.write("x,c1\n")
        for a, b in zip(nodes, f1):
            f.write(f"{a:.17g},{b:.17g}\n")


if __name__ == "__main__":
    main()
