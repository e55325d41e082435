"""Write a planted-partition edge list and its block labels."""

import argparse
from pathlib import Path

from embstab.graph import generate_planted_partition, write_edge_list


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out_dir", type=Path)
    ap.add_argument("--sizes", type=int, nargs="+", default=[100, 100, 100])
    ap.add_argument("--p-in", type=float, default=0.1)
    ap.add_argument("--p-out", type=float, default=0.01)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    g, labels = generate_planted_partition(args.sizes, args.p_in, args.p_out, args.seed)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    with open(args.out_dir / "planted.edges", "w") as fh:
        write_edge_list(g, fh, weighted=False)
    with open(args.out_dir / "planted.labels", "w") as fh:
        for u, labs in enumerate(labels.assignments):
            fh.write(f"{u} {' '.join(map(str, sorted(labs)))}\n")
    print(f"{g.node_count} nodes, {g.edge_count} edges -> {args.out_dir}")


if __name__ == "__main__":
    main()
