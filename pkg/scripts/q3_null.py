"""Distribution of max |Q3| on data simulated under the grade-3 2PL calibration.

    python scripts/q3_null.py --reps 100 --n 2000
"""

import argparse

import numpy as np

from psychkit import diagnostics, irt, reference, simulate


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--seed", type=int, default=20221)
    args = p.parse_args()
    items, a, b = reference.item_bank(3)
    maxima = []
    for rep in range(args.reps):
        x, _ = simulate.simulate_2pl(a, b, args.n, np.random.default_rng([args.seed, 2, rep]))
        model = irt.fit(x, "2PL", items=items)
        maxima.append(diagnostics.yen_q3(x, model, irt.eap(x, model)).max_abs)
    maxima = np.array(maxima)
    print(f"max|Q3| quantiles 5/50/95%: {np.quantile(maxima, [0.05, 0.5, 0.95]).round(3)}")
    print(f"share below 0.2: {np.mean(maxima < 0.2):.0%}")


if __name__ == "__main__":
    main()
