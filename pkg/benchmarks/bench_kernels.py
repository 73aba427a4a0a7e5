"""Time the hot modal kernels on the compiled and pure-numpy backends.

Usage::

    python benchmarks/bench_kernels.py --modes 256 --samples 2000 --repeat 5
"""

import argparse
import timeit

import numpy as np

from mgtlab.kernels import get_backend
from mgtlab.model import ModalBasis, make_params
from mgtlab.spectrum import cubic_coefficients, relaxed_roots_array


def make_inputs(n_modes, n_samples, seed):
    rng = np.random.default_rng(seed)
    mus = ModalBasis.dirichlet_1d(n_modes).mus
    p = make_params(1.0, 1.0, 1.0, 0.1)
    lam = relaxed_roots_array(mus, p)
    B = rng.standard_normal((n_modes, 3, 3)) + 1j * rng.standard_normal((n_modes, 3, 3))
    G = rng.standard_normal((n_modes, 3, 3)) + 1j * rng.standard_normal((n_modes, 3, 3))
    G = 0.5 * (G + np.conj(np.swapaxes(G, 1, 2)))
    t = np.linspace(0.0, 5.0, n_samples)
    coeffs = cubic_coefficients(mus, p)
    rough = lam * (1.0 + 1e-6 * rng.standard_normal(lam.shape))
    return lam, B, G, t, coeffs, rough


def bench(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--modes", type=int, default=256)
    ap.add_argument("--samples", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    lam, B, G, t, coeffs, rough = make_inputs(args.modes, args.samples, args.seed)
    backends = {"python": get_backend("python")}
    try:
        backends["cython"] = get_backend("cython")
    except ImportError:
        print("compiled extension not built; timing the python backend only")

    cases = {
        "expsum_eval": lambda k: k.expsum_eval(lam, B, t),
        "expsum_quad": lambda k: k.expsum_quad(lam, G, t),
        "polish_roots": lambda k: k.polish_roots(coeffs, rough, 8),
    }
    print(f"modes={args.modes} samples={args.samples} best of {args.repeat}")
    print(f"{'kernel':<14}" + "".join(f"{name:>12}" for name in backends) + f"{'speedup':>10}")
    for label, call in cases.items():
        times = {name: bench(lambda k=k: call(k), args.repeat) for name, k in backends.items()}
        row = f"{label:<14}" + "".join(f"{times[name] * 1e3:>10.2f}ms" for name in backends)
        if "cython" in times:
            row += f"{times['python'] / times['cython']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
