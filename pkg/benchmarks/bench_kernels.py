"""Time the numba kernels against their numpy twins on solver-sized inputs.

    python benchmarks/bench_kernels.py [--repeat N]

Both flavours are called once before timing so numba compilation is excluded.
Outputs are compared so a speed-up never hides a wrong answer.
"""

import argparse
import timeit

import numpy as np

from qflow import kernels
from qflow.lemma22kit import graded_rule


def cases():
    rng = np.random.default_rng(0)
    x = np.cos(np.linspace(0.01, np.pi - 0.01, 2000))
    n = 200_000
    log_k = rng.normal(size=n)
    nw = rng.normal(size=n)
    wts = rng.uniform(size=n)
    s, ws = graded_rule(16)
    pts = rng.uniform(0.5, 1.0, size=(2000, 3))
    rho = np.linalg.norm(pts[:, 1:], axis=1)
    coeffs = rng.normal(size=257)
    return {
        "gegenbauer_table(alpha=1, d=256, 2000 pts)": ("gegenbauer_table", (1.0, 256, x)),
        "legendre_table(lmax=64, 2000 pts)": ("legendre_table", (64, x)),
        "clenshaw_u(257 coeffs, 2000 pts)": ("clenshaw_u", (coeffs, x)),
        "log_mass(200k nodes)": ("log_mass", (log_k, nw, wts)),
        f"cauchy_chain(k=9, 2000 pts, {s.size} nodes)": ("cauchy_chain", (pts[:, 0], rho, 9, s, ws)),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"{'kernel':<46} {'numpy [ms]':>11} {'numba [ms]':>11} {'speed-up':>9} {'max |diff|':>11}")
    for label, (name, a) in cases().items():
        f_np, f_nb = kernels.NUMPY[name], kernels.NUMBA[name]
        r_np, r_nb = f_np(*a), f_nb(*a)
        if isinstance(r_np, tuple):
            diff = max(float(np.max(np.abs(np.asarray(p) - np.asarray(q)))) for p, q in zip(r_np, r_nb))
        else:
            diff = float(np.max(np.abs(r_np - r_nb)))
        t_np = min(timeit.repeat(lambda: f_np(*a), number=1, repeat=args.repeat)) * 1e3
        t_nb = min(timeit.repeat(lambda: f_nb(*a), number=1, repeat=args.repeat)) * 1e3
        print(f"{label:<46} {t_np:11.3f} {t_nb:11.3f} {t_np / t_nb:9.2f} {diff:11.2e}")


if __name__ == "__main__":
    main()
