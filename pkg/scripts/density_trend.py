"""node2vec (or another algorithm) stability across a density sweep."""

import argparse

import numpy as np

from embstab.config import DENSITY_SWEEP
from embstab.embed import embed
from embstab.errors import ConfigurationError
from embstab.geometry import compare_runs
from embstab.graph import generate_watts_strogatz


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--densities", type=float, nargs="+", default=list(DENSITY_SWEEP))
    ap.add_argument("--algorithm", default="node2vec")
    ap.add_argument("--dim", type=int, default=128)
    ap.add_argument("--runs", type=int, default=5)
    args = ap.parse_args()

    print("density,edges,aligned_cos,knn_jaccard,second_order_cos")
    for density in args.densities:
        try:
            g = generate_watts_strogatz(args.n, density, 0.1, seed=0)
        except ConfigurationError as exc:
            print(f"# skipped {density}: {exc}")
            continue
        mats = [embed(args.algorithm, g, args.dim, None, s).matrix for s in range(args.runs)]
        scores = compare_runs(mats, k=20)
        means = [np.mean([s.values.mean() for s in scores[m]]) for m in scores]
        print(f"{density},{g.edge_count}," + ",".join(f"{v:.4f}" for v in means), flush=True)


if __name__ == "__main__":
    main()
