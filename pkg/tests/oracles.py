"""Brute-force reference implementations used only by the tests."""
import numpy as np


def hull_projection_grid(G, y, step=1e-3, rounds=7):
    """Nearest hull point for 3 generators: simplex grid, then shrinking local grids."""
    G = np.asarray(G, dtype=float)
    assert len(G) == 3
    m = round(1 / step)
    i, j = np.meshgrid(np.arange(m + 1), np.arange(m + 1), indexing="ij")
    keep = i + j <= m
    W = np.stack([i[keep], j[keep], m - i[keep] - j[keep]], axis=1) / m
    d = np.linalg.norm(W @ G - y, axis=1)
    w = W[np.argmin(d)]
    h = step
    for _ in range(rounds):
        offs = np.linspace(-2 * h, 2 * h, 41)
        a, b = np.meshgrid(offs, offs, indexing="ij")
        cand = np.stack([w[0] + a.ravel(), w[1] + b.ravel()], axis=1)
        cand = np.column_stack([cand, 1 - cand.sum(axis=1)])
        cand = cand[np.all(cand >= 0, axis=1)]
        d = np.linalg.norm(cand @ G - y, axis=1)
        w = cand[np.argmin(d)]
        h /= 10
    return w @ G


def enumerate_path_values(s, paths):
    return np.array([sum(s[a] for a in q) for q in paths])
