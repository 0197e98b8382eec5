"""Time the compiled kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Every case is run through both backends on the same input; the outputs are
checked for agreement before anything is timed.
"""

import argparse
import json
import timeit

import numpy as np

from feddc.kernels import available_backends, load_backend


def _unit(lam):
    # the nullspace vector is only defined up to scale and sign
    idx = np.argmax(np.abs(lam), axis=1)
    return lam / lam[np.arange(len(lam)), idx][:, None]


def radon_case(blocks, dim, seed=0):
    pts = np.random.default_rng(seed).normal(size=(blocks, dim + 2, dim))
    return f"radon_nullspace {blocks}x({dim + 2}x{dim})", (lambda k: k.radon_nullspace(pts)), \
        (lambda a, b: np.allclose(_unit(a[0]), _unit(b[0]), atol=1e-8) and np.array_equal(a[1], b[1]))


def coverage_case(trials, steps, m, k, seed=0):
    rng = np.random.default_rng(seed)
    base = np.arange(m, dtype=np.int64)
    perms = np.ascontiguousarray(rng.permuted(np.broadcast_to(base, (trials * steps, m)), axis=1).reshape(trials, steps, m))
    return f"coverage_hits {trials} trials, {steps} steps, m={m}", (lambda kern: kern.coverage_hits(perms, k)), \
        (lambda a, b: np.array_equal(np.asarray(a), np.asarray(b)))


CASES = [
    lambda: radon_case(49, 5),
    lambda: radon_case(441, 19),
    lambda: radon_case(20000, 1),
    lambda: radon_case(2000, 3),
    lambda: coverage_case(20000, 1, 2, 2),
    lambda: coverage_case(20000, 5, 10, 10),
    lambda: coverage_case(4096, 5, 50, 50),
]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="also write results here")
    args = ap.parse_args(argv)

    backends = available_backends()
    if "cython" not in backends:
        print("compiled kernels not built; timing the python backend only")
    mods = {name: load_backend(name) for name in backends}

    results = []
    print(f"{'case':48s} " + " ".join(f"{b:>12s}" for b in backends) + ("    speedup" if len(backends) > 1 else ""))
    for make in CASES:
        label, call, same = make()
        outs = {b: call(mod) for b, mod in mods.items()}
        if len(outs) > 1 and not same(outs["python"], outs["cython"]):
            raise SystemExit(f"{label}: backends disagree")
        best = {}
        for b, mod in mods.items():
            number = 1
            while timeit.timeit(lambda: call(mod), number=number) < 0.05:
                number *= 2
            best[b] = min(timeit.repeat(lambda: call(mod), number=number, repeat=args.repeat)) / number
        row = {"case": label, **{f"{b}_seconds": t for b, t in best.items()}}
        line = f"{label:48s} " + " ".join(f"{best[b] * 1e3:10.3f}ms" for b in backends)
        if len(best) > 1:
            row["speedup"] = best["python"] / best["cython"]
            line += f"  {row['speedup']:8.1f}x"
        print(line)
        results.append(row)
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(results, fh, indent=2)


if __name__ == "__main__":
    main()
