"""Benchmark the numba kernels against the pure-numpy fallbacks on a
city-scale instance (95 communities, 240 macro / 165 micro candidates,
population 300).

Run:  python benchmarks/bench_kernels.py
Set FIRESITE_PURE_NUMPY=1 to check which path the package itself selects.
"""

import time

import numpy as np

from firesite import kernels


def build_inputs(seed=0, P=300, I=95, J_macro=240, J_micro=165, E=4):
    rng = np.random.default_rng(seed)
    side = 9.0
    comm = rng.uniform(0, side, (I, 2))
    macro = rng.uniform(0, side, (J_macro, 2))
    micro = rng.uniform(0, side, (J_micro, 2))
    exist = rng.uniform(0, side, (E, 2))
    a = rng.integers(1, 5, I).astype(float)

    def dist(u, v):
        return np.hypot(u[:, None, 0] - v[None, :, 0],
                        u[:, None, 1] - v[None, :, 1])

    d_cm = dist(comm, macro)
    d_cu = dist(comm, micro)
    macro_args = dict(
        pop=(rng.random((P, J_macro)) < 3 / J_macro).astype(np.uint8),
        cov=d_cm <= 1.746,
        a=a,
        covered_existing=(dist(comm, exist) <= 1.746).any(axis=1),
        d_jj=dist(macro, macro),
        d_jphi=dist(macro, exist),
    )
    cov_u = d_cu <= 1.0
    micro_args = dict(
        pop=(rng.random((P, J_micro)) < 0.25).astype(np.uint8),
        cov=cov_u,
        a=a,
        d_ij=d_cu,
        d_jj=dist(micro, micro),
        eta_load=cov_u.T.astype(float) @ a,
        ring_dev=np.maximum(rng.random(J_micro) - 0.9, 0.0),
    )
    objs = rng.random((2 * P, 3))
    viol = np.where(rng.random(2 * P) < 0.7, 0.0, rng.random(2 * P))
    return macro_args, micro_args, objs, viol


def timeit(fn, args, repeats=30):
    fn(*args)  # warm (triggers JIT on the numba side)
    t0 = time.perf_counter()
    for _ in range(repeats):
        out = fn(*args)
    return (time.perf_counter() - t0) / repeats, out


def main():
    print(f"package dispatch: {'numba' if kernels.USING_NUMBA else 'pure numpy'}")
    macro_args, micro_args, objs, viol = build_inputs()

    cases = [
        ("eval_macro_population",
         (macro_args["pop"], macro_args["cov"], macro_args["a"],
          macro_args["covered_existing"], macro_args["d_jj"],
          macro_args["d_jphi"], 2.043, 3.542, 3, macro_args["a"].sum() + 1, False),
         kernels.eval_macro_population_nb, kernels.eval_macro_population_np),
        ("eval_micro_population",
         (micro_args["pop"], micro_args["cov"], micro_args["a"],
          micro_args["d_ij"], micro_args["d_jj"], micro_args["eta_load"],
          19.37, micro_args["ring_dev"]),
         kernels.eval_micro_population_nb, kernels.eval_micro_population_np),
        ("nondominated_ranks",
         (np.ascontiguousarray(objs), viol),
         kernels.nondominated_ranks_nb, kernels.nondominated_ranks_np),
    ]

    print(f"{'kernel':<24} {'numba':>10} {'numpy':>10} {'speedup':>8}")
    for name, args, fn_nb, fn_np in cases:
        t_np, out_np = timeit(fn_np, args)
        if fn_nb is None:
            print(f"{name:<24} {'n/a':>10} {t_np * 1e3:9.2f}ms {'-':>8}")
            continue
        t_nb, out_nb = timeit(fn_nb, args)
        ref = out_nb if isinstance(out_nb, tuple) else (out_nb,)
        alt = out_np if isinstance(out_np, tuple) else (out_np,)
        for x, y in zip(ref, alt):
            np.testing.assert_allclose(x, y, rtol=1e-10)
        print(f"{name:<24} {t_nb * 1e3:9.2f}ms {t_np * 1e3:9.2f}ms "
              f"{t_np / t_nb:7.1f}x")
    print("outputs agree across paths")


if __name__ == "__main__":
    main()
