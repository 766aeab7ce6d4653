"""Compare the compiled and pure-Python support-counting kernels.

    python3 benchmarks/bench_support.py [--transactions N] [--items M] [--repeat R]

Times the raw ``TidsetIndex.count`` call on every item pair, then a full
``apriori_frequent`` run, once per available backend.
"""

import argparse
import random
import timeit
from itertools import combinations

from mrrefine.arm import BACKENDS, Item, Transaction, apriori_frequent


def synthetic(n_tx, n_items, density, seed):
    rng = random.Random(seed)
    rows = [[i for i in range(n_items) if rng.random() < density] for _ in range(n_tx)]
    return rows


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--transactions", type=int, default=20000)
    p.add_argument("--items", type=int, default=40)
    p.add_argument("--density", type=float, default=0.3)
    p.add_argument("--min-support", type=float, default=0.05)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    rows = synthetic(args.transactions, args.items, args.density, args.seed)
    pairs = [list(c) for c in combinations(range(args.items), 2)]
    db = [Transaction(frozenset(Item(f"i{i:02d}", "1") for i in r)) for r in rows]
    print(f"{args.transactions} transactions, {args.items} items, {len(pairs)} pair candidates")

    results = {}
    for name, index_cls in sorted(BACKENDS.items()):
        index = index_cls(rows, args.items)
        counts = index.count(pairs)
        t_count = min(timeit.repeat(lambda: index.count(pairs), number=1, repeat=args.repeat))
        t_build = min(timeit.repeat(lambda: index_cls(rows, args.items), number=1, repeat=args.repeat))
        t_apriori = min(timeit.repeat(lambda: apriori_frequent(db, args.min_support, backend=name),
                                      number=1, repeat=max(1, args.repeat // 2)))
        results[name] = (counts, t_build, t_count, t_apriori)
        print(f"{name:>7}: build {t_build * 1e3:8.2f} ms  count {t_count * 1e3:8.2f} ms  "
              f"apriori {t_apriori * 1e3:9.2f} ms")

    if len(results) == 2:
        assert results["python"][0] == results["cython"][0], "backends disagree"
        py, cy = results["python"], results["cython"]
        print(f"speedup (python / cython): count x{py[2] / cy[2]:.1f}, apriori x{py[3] / cy[3]:.1f}")
    else:
        print("compiled kernel not built; only the fallback was timed")


if __name__ == "__main__":
    main()
