"""Reference Diebold-Mariano values for the fixed loss series used in the C++ tests.

Independent of the C++ code: numpy for the moments, scipy.stats for the p-values.
Run with `python3 dm_reference.py` and paste the printed constants into the tests.
"""
import numpy as np
from scipy import stats


def series(name, n):
    t = np.arange(n, dtype=float)
    if name == "smooth":
        return 1.0 + 0.5 * np.sin(0.3 * t) + 0.1 * t / n, 1.0 + 0.4 * np.cos(0.2 * t)
    if name == "weekly":
        return (t % 7) / 3.0 + 0.2 * np.sin(t), 0.9 + 0.3 * np.cos(0.5 * t)
    if name == "log":
        return 0.3 * np.log1p(t), 0.5 + 0.25 * np.sin(1.7 * t)
    raise ValueError(name)


def dm(a, b, h, harvey):
    d = a - b
    n = d.size
    dbar = d.mean()
    gamma = [np.sum((d[j:] - dbar) * (d[: n - j] - dbar)) / n for j in range(h)]
    v = gamma[0] + 2.0 * sum(gamma[1:])
    stat = dbar / np.sqrt(v / n)
    if harvey:
        stat *= np.sqrt((n + 1 - 2 * h + h * (h - 1) / n) / n)
        p = 2.0 * stats.t.sf(abs(stat), df=n - 1)
    else:
        p = 2.0 * stats.norm.sf(abs(stat))
    return stat, p


for name, n, h, harvey in [("smooth", 50, 1, False), ("weekly", 120, 4, False), ("log", 30, 3, True)]:
    a, b = series(name, n)
    stat, p = dm(a, b, h, harvey)
    print(f'{{"{name}", {n}, {h}, {str(harvey).lower()}, {float(stat)!r}, {float(p)!r}}},')
