"""Desk-scale availability sweep over the number of APs.

Runs the reduced configuration (L in {4, 9, 16, 25}, MMSE and MR, plus the
small-cell baseline) and writes the curve table as CSV.

    python3 scripts/desk_sweep.py --out desk.csv
"""
import argparse
import logging
import sys
import time

from cellfree_urllc.config import desk_config
from cellfree_urllc.io import write_sweep_csv
from cellfree_urllc.simulation import sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--L", default="4,9,16,25", help="comma-separated AP counts")
    ap.add_argument("--n-placements", type=int, default=50)
    ap.add_argument("--n-fading", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")

    Ls = [int(x) for x in args.L.split(",")]
    cfg = desk_config(n_placements=args.n_placements, n_fading=args.n_fading, master_seed=args.seed)
    grid = [(L, 1, "cellfree", s) for s in ("mmse", "mr") for L in Ls]
    grid.append((16, 1, "smallcell", "mmse"))

    t0 = time.perf_counter()
    rows = sweep(cfg, grid, workers=args.workers)
    logging.info("sweep finished in %.1f s", time.perf_counter() - t0)
    if args.out:
        write_sweep_csv(rows, args.out)
    else:
        write_sweep_csv(rows, sys.stdout)
    return 3 if any(r.error for r in rows) else 0


if __name__ == "__main__":
    sys.exit(main())
